// SPDX-License-Identifier: Apache-2.0
// Command-line surface: train, encode, decode, analyze, grad-check.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "swcodec/analysis/f0.hpp"
#include "swcodec/analysis/metrics.hpp"
#include "swcodec/analysis/probe.hpp"
#include "swcodec/analysis/stoi.hpp"
#include "swcodec/audio.hpp"
#include "swcodec/dsp/mel.hpp"
#include "swcodec/model/codec.hpp"
#include "swcodec/nn/grad_check.hpp"
#include "swcodec/train/trainer.hpp"

using namespace swc;

namespace {

model::RunConfig build_config(const std::string& config_path,
                              const std::vector<std::string>& sets) {
  model::RunConfig cfg = config_path.empty() ? model::default_run_config()
                                             : model::parse_config_file(config_path);
  for (const auto& kv : sets) model::apply_override(cfg, kv);
  cfg.validate();
  return cfg;
}

// Reports are JSON lines with shortest round-trip float formatting, so a
// rerun with identical inputs writes byte-identical artifacts.
void emit_report(const std::vector<std::string>& lines, const std::string& out_path) {
  for (const auto& l : lines) std::cout << l << "\n";
  if (out_path.empty()) return;
  std::ofstream out(out_path, std::ios::trunc);
  require(out.good(), "analyze: cannot write '" + out_path + "'");
  for (const auto& l : lines) out << l << "\n";
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets,
              int64_t steps_override) {
  model::RunConfig cfg = build_config(config_path, sets);
  if (steps_override > 0)
    model::apply_override(cfg, "train.steps=" + std::to_string(steps_override));
  std::cout << "train: " << cfg.train.steps << " steps, run dir '" << cfg.run_dir << "'\n";
  train::Trainer<double> trainer(cfg, &std::cout);
  trainer.run();
  std::cout << "train: finished at step " << trainer.step() << "\n";
  return 0;
}

int cmd_encode(const std::string& ckpt, const std::string& in, const std::string& out) {
  auto loaded = train::load_generator<double>(ckpt);
  const AudioBuffer audio = load_wav(in);
  const model::TokenStream ts = loaded.gen.encode_tokens(audio);
  model::save_tokens(out, ts);
  const double seconds =
      static_cast<double>(audio.samples.size()) / audio.sample_rate;
  const double bits = static_cast<double>(ts.grid.frames()) *
                      static_cast<double>(ts.spec.n_groups) *
                      std::log2(static_cast<double>(ts.spec.codebook_size()));
  std::printf("encode: %.3f s -> %lld token frames at %.1f Hz, %.1f bps logical\n", seconds,
              static_cast<long long>(ts.grid.frames()), ts.grid.frame_rate, bits / seconds);
  return 0;
}

int cmd_decode(const std::string& ckpt, const std::string& in, const std::string& out,
               int gl_iters) {
  auto loaded = train::load_generator<double>(ckpt);
  const model::TokenStream ts = model::load_tokens(in);
  const MatD mel = loaded.gen.decode_tokens(ts);
  const AudioBuffer audio = loaded.gen.synthesize(mel, gl_iters);
  save_wav(out, audio);
  std::printf("decode: %lld token frames -> %.3f s\n",
              static_cast<long long>(ts.grid.frames()),
              static_cast<double>(audio.samples.size()) / audio.sample_rate);
  return 0;
}

// Repeated-phrase fixture: one short harmonic motif tiled several times, so
// the content repeats while positions differ.
AudioBuffer repeated_phrase() {
  const AudioBuffer motif = analysis::synthetic_pitch_corpus(1, 0.25, 7)[0].audio;
  AudioBuffer phrase;
  phrase.sample_rate = motif.sample_rate;
  const Index m = motif.samples.size();
  phrase.samples.resize(8 * m);
  for (Index r = 0; r < 8; ++r) phrase.samples.segment(r * m, m) = motif.samples;
  return phrase;
}

int cmd_analyze(const std::string& mode, const std::string& ckpt, const std::string& ref,
                const std::string& deg, const std::string& out_path, int clips,
                double seconds, uint64_t seed, double lambda) {
  std::vector<std::string> lines;

  if (mode == "stoi") {
    require(!ref.empty() && !deg.empty(), "analyze: stoi mode needs --ref and --deg");
    const double score = analysis::stoi(load_wav(ref), load_wav(deg));
    lines.push_back("{\"mode\":\"stoi\",\"stoi\":" + train::format_double(score) + "}");
    emit_report(lines, out_path);
    return 0;
  }

  require(!ckpt.empty(), "analyze: mode '" + mode + "' needs --checkpoint");

  if (mode == "attention") {
    // Same checkpoint weights evaluated with and without positional
    // encodings on the repeated-phrase fixture.
    const train::Checkpoint c = train::load_checkpoint(ckpt);
    model::RunConfig cfg = model::parse_config_text(c.config_text);
    const dsp::MelSpectrogram mel = dsp::log_mel(repeated_phrase(), cfg.mel);
    for (bool pe : {false, true}) {
      cfg.model.use_abs_pe = pe;
      Rng rng(cfg.train.seed);
      model::Generator<double> gen(cfg, rng);
      std::vector<std::pair<std::string, MatD*>> targets;
      for (auto* p : gen.parameters()) targets.emplace_back(p->name, &p->value);
      train::apply_records<double>(c, targets, false);
      nn::Tape<double> t;
      auto enc = gen.encoder().encode(t, t.constant(mel.values.cast<double>()));
      for (size_t l = 0; l < enc.attn.size(); ++l)
        lines.push_back(std::string("{\"pe\":") + (pe ? "true" : "false") +
                        ",\"layer\":" + std::to_string(l) + ",\"dominance\":" +
                        train::format_double(analysis::diag_dominance(enc.attn[l])) + "}");
    }
    emit_report(lines, out_path);
    return 0;
  }

  if (mode == "f0probe") {
    auto loaded = train::load_generator<double>(ckpt);
    const auto corpus = analysis::synthetic_pitch_corpus(clips, seconds, seed);
    auto features = [&](const AudioBuffer& a) {
      const dsp::MelSpectrogram mel = dsp::log_mel(a, loaded.cfg.mel);
      nn::Tape<double> t;
      return loaded.gen.encoder().encode(t, t.constant(mel.values.cast<double>())).layer_outputs;
    };
    const double feature_rate =
        static_cast<double>(loaded.cfg.sample_rate) / loaded.cfg.mel.hop / 2.0;
    const auto records = analysis::probe_f0(features, feature_rate, corpus, lambda);
    for (const auto& r : records)
      lines.push_back("{\"layer\":" + std::to_string(r.layer) +
                      ",\"pcc\":" + train::format_double(r.pcc) +
                      ",\"n_frames\":" + std::to_string(r.n_frames) + "}");
    emit_report(lines, out_path);
    return 0;
  }

  require(false, "analyze: unknown mode '" + mode + "'");
  return 2;
}

int cmd_grad_check(int seeds, double tolerance) {
  struct Case {
    std::string name;
    std::function<double(uint64_t)> run; // returns max relative error
  };

  auto random_mat = [](Rng& rng, Index r, Index c) {
    MatD m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
  };

  std::vector<Case> cases;
  cases.push_back({"dense_gelu", [&](uint64_t seed) {
    Rng rng(seed);
    const MatD w = random_mat(rng, 6, 5), x0 = random_mat(rng, 4, 6);
    const Eigen::RowVectorXd b = random_mat(rng, 1, 5).row(0);
    return nn::grad_check([&](nn::Tape<double>& t, nn::Var<double> x) {
      return nn::mean(nn::gelu(nn::add_rowvec(nn::matmul_const(x, w), t.constant(b))));
    }, x0);
  }});
  cases.push_back({"layer_norm", [&](uint64_t seed) {
    Rng rng(seed);
    const MatD x0 = random_mat(rng, 5, 8);
    const MatD mix = random_mat(rng, 5, 8);
    return nn::grad_check([&](nn::Tape<double>& t, nn::Var<double> x) {
      auto g = t.constant(MatD::Ones(1, 8));
      auto b = t.constant(MatD::Zero(1, 8));
      return nn::mean(nn::mul(nn::layer_norm(x, g, b), t.constant(mix)));
    }, x0);
  }});
  cases.push_back({"softmax_rows", [&](uint64_t seed) {
    Rng rng(seed);
    const MatD x0 = random_mat(rng, 6, 6), mix = random_mat(rng, 6, 6);
    return nn::grad_check([&](nn::Tape<double>& t, nn::Var<double> x) {
      return nn::mean(nn::mul(nn::softmax_rows(x), t.constant(mix)));
    }, x0);
  }});
  cases.push_back({"attention_block", [&](uint64_t seed) {
    Rng rng(seed);
    model::TransformerBlock<double> block("b", 8, 2, rng);
    const MatD x0 = random_mat(rng, 6, 8);
    return nn::grad_check([&](nn::Tape<double>& t, nn::Var<double> x) {
      return nn::mean(block.forward(t, x).y);
    }, x0, 1e-5, 48, seed);
  }});
  cases.push_back({"conv1d", [&](uint64_t seed) {
    Rng rng(seed);
    model::Conv1dLayer<double> conv("c", 4, 3, 3, 2, 1, rng, 0.3);
    const MatD x0 = random_mat(rng, 9, 4);
    return nn::grad_check([&](nn::Tape<double>& t, nn::Var<double> x) {
      return nn::mean(conv.forward(t, x));
    }, x0);
  }});
  cases.push_back({"snake", [&](uint64_t seed) {
    Rng rng(seed);
    const MatD x0 = random_mat(rng, 5, 4);
    const MatD alpha = random_mat(rng, 1, 4).cwiseAbs() + MatD::Constant(1, 4, 0.5);
    return nn::grad_check([&](nn::Tape<double>& t, nn::Var<double> x) {
      return nn::mean(nn::snake(x, t.constant(alpha)));
    }, x0);
  }});

  bool ok = true;
  for (const auto& c : cases) {
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) worst = std::max(worst, c.run(static_cast<uint64_t>(s)));
    const bool pass = worst <= tolerance;
    ok = ok && pass;
    std::printf("%-16s max_rel_err=%.3e  %s\n", c.name.c_str(), worst,
                pass ? "PASS" : "FAIL");
  }
  if (!ok) throw RuntimeError("grad-check: at least one op exceeded tolerance");
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"swcodec: low-bitrate speech codec tools"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, in_path, out_path, mode, ref, deg, report;
  std::vector<std::string> sets;
  int64_t steps = 0;
  int gl_iters = 32, clips = 10, seeds = 20;
  double seconds = 0.8, lambda = 1.0, tolerance = 1e-4;
  uint64_t corpus_seed = 0;

  CLI::App* t = app.add_subcommand("train", "run the training loop");
  t->add_option("--config", config_path, "run configuration file");
  t->add_option("--set", sets, "dotted-path override, e.g. train.steps=500");
  t->add_option("--steps", steps, "shorthand for --set train.steps=N");

  CLI::App* e = app.add_subcommand("encode", "waveform to token stream");
  e->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  e->add_option("--in", in_path, "input 16 kHz PCM16 WAV")->required();
  e->add_option("--out", out_path, "output token file")->required();

  CLI::App* d = app.add_subcommand("decode", "token stream to waveform");
  d->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  d->add_option("--in", in_path, "input token file")->required();
  d->add_option("--out", out_path, "output WAV")->required();
  d->add_option("--gl-iters", gl_iters, "phase reconstruction iterations");

  CLI::App* a = app.add_subcommand("analyze", "measurement instruments");
  a->add_option("--mode", mode, "attention | f0probe | stoi")->required();
  a->add_option("--checkpoint", checkpoint, "trained checkpoint");
  a->add_option("--ref", ref, "reference WAV (stoi)");
  a->add_option("--deg", deg, "degraded WAV (stoi)");
  a->add_option("--out", report, "also write the report here");
  a->add_option("--clips", clips, "synthetic corpus size (f0probe)");
  a->add_option("--seconds", seconds, "synthetic clip length (f0probe)");
  a->add_option("--seed", corpus_seed, "synthetic corpus seed (f0probe)");
  a->add_option("--lambda", lambda, "ridge strength (f0probe)");

  CLI::App* g = app.add_subcommand("grad-check", "finite-difference verification suite");
  g->add_option("--seeds", seeds, "random restarts per op");
  g->add_option("--tolerance", tolerance, "max relative error allowed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(t)) return cmd_train(config_path, sets, steps);
    if (app.got_subcommand(e)) return cmd_encode(checkpoint, in_path, out_path);
    if (app.got_subcommand(d)) return cmd_decode(checkpoint, in_path, out_path, gl_iters);
    if (app.got_subcommand(a))
      return cmd_analyze(mode, checkpoint, ref, deg, report, clips, seconds, corpus_seed,
                         lambda);
    if (app.got_subcommand(g)) return cmd_grad_check(seeds, tolerance);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const RuntimeError& err) {
    std::cerr << "runtime error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
