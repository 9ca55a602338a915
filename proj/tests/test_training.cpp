// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "swcodec/train/trainer.hpp"

using namespace swc;
using namespace swc::train;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;

  explicit TempDir(const std::string& tag) {
    dir = fs::temp_directory_path() / ("swcodec_train_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }
};

AudioBuffer tone(double freq, double seconds, uint64_t noise_seed, double amp = 0.3) {
  AudioBuffer a;
  const Index n = static_cast<Index>(std::llround(seconds * a.sample_rate));
  a.samples.resize(n);
  Rng rng(noise_seed);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / a.sample_rate;
    const double v = amp * std::sin(2.0 * M_PI * freq * t) + 0.01 * rng.normal();
    a.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return a;
}

/// Writes a tiny corpus plus a manifest of relative paths; returns the manifest path.
std::string write_corpus(const TempDir& tmp, int n_clips, double seconds) {
  std::ofstream manifest(tmp.path("train.txt"));
  manifest << "# fixture corpus\n\n";
  for (int i = 0; i < n_clips; ++i) {
    const std::string name = "clip" + std::to_string(i) + ".wav";
    save_wav(tmp.path(name), tone(150.0 + 40.0 * i, seconds, 100 + i));
    manifest << name << "\n";
  }
  manifest.close();
  return tmp.path("train.txt");
}

model::RunConfig tiny_cfg(const std::string& manifest, const std::string& run_dir) {
  model::RunConfig cfg = model::default_run_config();
  cfg.model.d_model = 16;
  cfg.model.n_heads = 2;
  cfg.model.n_layers = 1;
  cfg.train.steps = 50;
  cfg.train.warmup = 2;
  cfg.train.batch_size = 1;
  cfg.train.grad_accum = 1;
  cfg.train.segment_seconds = 0.2;
  cfg.train.peak_lr = 1e-4;
  cfg.train.seed = 5;
  cfg.train.gl_iters = 1;
  cfg.manifest = manifest;
  cfg.run_dir = run_dir;
  return cfg;
}

std::vector<MatD> snapshot(const std::vector<nn::Parameter<double>*>& params) {
  std::vector<MatD> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(p->value);
  return out;
}

bool identical(const std::vector<MatD>& a, const std::vector<nn::Parameter<double>*>& b) {
  for (size_t i = 0; i < b.size(); ++i)
    if (!(a[i].array() == b[i]->value.array()).all()) return false;
  return true;
}

bool metrics_equal(const StepMetrics& a, const StepMetrics& b) {
  return a.step == b.step && a.lr == b.lr && a.recon == b.recon && a.adv == b.adv &&
         a.feat == b.feat && a.disc == b.disc && a.total == b.total;
}

} // namespace

// ---------------------------------------------------------------------------
// checkpoint file format

TEST_CASE("checkpoint files round-trip bit-exactly") {
  TempDir tmp("ckpt");
  Checkpoint c;
  c.step = 123;
  c.config_text = "train.steps = 50\n";
  c.rng_state = Rng(7).serialize();
  c.gen_opt_steps = 41;
  c.disc_opt_steps = 42;
  Rng rng(3);
  MatD dmat(3, 5);
  for (Index i = 0; i < dmat.size(); ++i) dmat.data()[i] = rng.normal();
  MatF fmat(2, 2);
  for (Index i = 0; i < fmat.size(); ++i) fmat.data()[i] = static_cast<float>(rng.normal());
  c.records.push_back(make_record<double>("a.w", dmat));
  c.records.push_back(make_record<float>("b.w", fmat));

  const std::string path = tmp.path("c.swckpt");
  save_checkpoint(path, c);
  const Checkpoint r = load_checkpoint(path);

  CHECK(r.step == c.step);
  CHECK(r.config_text == c.config_text);
  CHECK(r.rng_state == c.rng_state);
  CHECK(r.gen_opt_steps == 41);
  CHECK(r.disc_opt_steps == 42);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].name == "a.w");
  CHECK(r.records[0].dtype == 1);
  CHECK(r.records[0].bytes == c.records[0].bytes);
  CHECK(r.records[1].dtype == 0);
  CHECK(r.records[1].bytes == c.records[1].bytes);

  MatD dback = MatD::Zero(3, 5);
  read_record(r.records[0], dback);
  CHECK((dback.array() == dmat.array()).all());
}

TEST_CASE("damaged checkpoint files are refused whole") {
  TempDir tmp("ckptbad");
  Checkpoint c;
  c.step = 9;
  c.records.push_back(make_record<double>("p", MatD::Ones(2, 2)));
  const std::string path = tmp.path("c.swckpt");
  save_checkpoint(path, c);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  auto rewrite = [&](const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
  };

  SUBCASE("wrong magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    rewrite(bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("wrong magic"), ConfigError);
  }
  SUBCASE("unsupported version") {
    std::string bad = bytes;
    bad[6] = 9;
    rewrite(bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("unsupported version"),
                         ConfigError);
  }
  SUBCASE("truncated payload") {
    rewrite(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("truncated"), ConfigError);
  }
  SUBCASE("trailing garbage") {
    rewrite(bytes + "zz");
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("trailing"), ConfigError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(tmp.path("nope.swckpt")), ConfigError);
  }
}

TEST_CASE("applying records restores forwards bit-exactly and refuses mismatches") {
  model::RunConfig cfg = model::default_run_config();
  cfg.model.d_model = 16;
  cfg.model.n_heads = 2;
  cfg.model.n_layers = 1;

  Rng ra(1);
  model::Generator<double> a(cfg, ra);
  Rng jitter(4);
  for (auto* p : a.parameters())
    for (Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += jitter.uniform(-0.1, 0.1);

  Checkpoint c;
  for (auto* p : a.parameters()) c.records.push_back(make_record(p->name, p->value));

  Rng rb(2);
  model::Generator<double> b(cfg, rb);
  const AudioBuffer x = tone(220.0, 0.2, 9);
  const MatD mel = dsp::log_mel(x, cfg.mel).values.cast<double>();
  auto run_fwd = [&](model::Generator<double>& g) {
    nn::Tape<double> t;
    return g.forward(t, t.constant(mel)).mel_hat.value();
  };
  CHECK_FALSE((run_fwd(a).array() == run_fwd(b).array()).all());

  std::vector<std::pair<std::string, MatD*>> targets;
  for (auto* p : b.parameters()) targets.emplace_back(p->name, &p->value);
  apply_records<double>(c, targets, true);
  CHECK((run_fwd(a).array() == run_fwd(b).array()).all());

  SUBCASE("missing record refused") {
    Checkpoint short_c = c;
    short_c.records.pop_back();
    CHECK_THROWS_WITH_AS(apply_records<double>(short_c, targets, true),
                         doctest::Contains("missing record"), ConfigError);
  }
  SUBCASE("unexpected record refused when the set must match") {
    Checkpoint extra = c;
    extra.records.push_back(make_record<double>("stray", MatD::Zero(1, 1)));
    CHECK_THROWS_WITH_AS(apply_records<double>(extra, targets, true),
                         doctest::Contains("unexpected record"), ConfigError);
    CHECK_NOTHROW(apply_records<double>(extra, targets, false));
  }
  SUBCASE("shape mismatch refused") {
    Checkpoint bad = c;
    bad.records[0] = make_record<double>(bad.records[0].name, MatD::Zero(1, 3));
    CHECK_THROWS_WITH_AS(apply_records<double>(bad, targets, true), doctest::Contains("expected"),
                         ConfigError);
  }
  SUBCASE("dtype mismatch refused") {
    Checkpoint bad = c;
    const TensorRecord& orig = bad.records[0];
    MatF f = MatF::Zero(static_cast<Index>(orig.rows), static_cast<Index>(orig.cols));
    bad.records[0] = make_record<float>(orig.name, f);
    CHECK_THROWS_WITH_AS(apply_records<double>(bad, targets, true), doctest::Contains("dtype"),
                         ConfigError);
  }
}

// ---------------------------------------------------------------------------
// data pipeline

TEST_CASE("manifests resolve relative paths and name offending files") {
  TempDir tmp("manifest");
  const std::string manifest = write_corpus(tmp, 2, 0.5);
  const Manifest m = load_manifest(manifest);
  REQUIRE(m.paths.size() == 2);
  CHECK(fs::path(m.paths[0]).is_absolute() == fs::path(manifest).is_absolute());
  CHECK(m.paths[0].find("clip0.wav") != std::string::npos);

  SUBCASE("missing manifest") {
    CHECK_THROWS_WITH_AS(load_manifest(tmp.path("nope.txt")), doctest::Contains("nope.txt"),
                         ConfigError);
  }
  SUBCASE("empty manifest") {
    std::ofstream(tmp.path("empty.txt")) << "# nothing\n";
    CHECK_THROWS_WITH_AS(load_manifest(tmp.path("empty.txt")), doctest::Contains("no files"),
                         ConfigError);
  }
  SUBCASE("missing wav named on first use") {
    std::ofstream(tmp.path("ghost.txt")) << "ghost.wav\n";
    SegmentStream s(load_manifest(tmp.path("ghost.txt")), 800, 0);
    CHECK_THROWS_WITH_AS(s.next(), doctest::Contains("ghost.wav"), ConfigError);
  }
  SUBCASE("malformed wav named") {
    std::ofstream(tmp.path("bad.wav"), std::ios::binary) << "this is not audio";
    std::ofstream(tmp.path("bad.txt")) << "bad.wav\n";
    SegmentStream s(load_manifest(tmp.path("bad.txt")), 800, 0);
    CHECK_THROWS_WITH_AS(s.next(), doctest::Contains("bad.wav"), ConfigError);
  }
}

TEST_CASE("segment streams are seeded, crop exactly, and flag padded clips") {
  TempDir tmp("stream");
  const std::string manifest = write_corpus(tmp, 3, 0.5);

  SUBCASE("same seed, same stream") {
    SegmentStream s1(load_manifest(manifest), 4000, 11);
    SegmentStream s2(load_manifest(manifest), 4000, 11);
    bool all_equal = true;
    for (int i = 0; i < 10; ++i) {
      const Segment a = s1.next();
      const Segment b = s2.next();
      all_equal = all_equal && a.source == b.source && a.padded == b.padded &&
                  (a.audio.samples.array() == b.audio.samples.array()).all();
    }
    CHECK(all_equal);
    SegmentStream s3(load_manifest(manifest), 4000, 12);
    bool any_diff = false;
    for (int i = 0; i < 10 && !any_diff; ++i) {
      SegmentStream probe(load_manifest(manifest), 4000, 11);
      const Segment a = probe.next();
      const Segment b = s3.next();
      any_diff = a.source != b.source ||
                 !(a.audio.samples.array() == b.audio.samples.array()).all();
    }
    CHECK(any_diff);
  }
  SUBCASE("crops are exactly the configured length") {
    SegmentStream s(load_manifest(manifest), 4000, 0);
    for (int i = 0; i < 5; ++i) {
      const Segment seg = s.next();
      CHECK(seg.audio.size() == 4000);
      CHECK_FALSE(seg.padded);
    }
    model::RunConfig cfg = model::default_run_config();
    CHECK(Trainer<double>::segment_samples(cfg) == 64000);
  }
  SUBCASE("short clips are zero-padded and flagged") {
    save_wav(tmp.path("short.wav"), tone(200.0, 0.1, 55));
    std::ofstream(tmp.path("short.txt")) << "short.wav\n";
    SegmentStream s(load_manifest(tmp.path("short.txt")), 3200, 0);
    const Segment seg = s.next();
    CHECK(seg.padded);
    CHECK(seg.audio.size() == 3200);
    CHECK(seg.audio.samples.tail(3200 - 1600).cwiseAbs().maxCoeff() == 0.0f);
    CHECK(seg.audio.samples.head(1600).cwiseAbs().maxCoeff() > 0.0f);
  }
}

// ---------------------------------------------------------------------------
// training steps

TEST_CASE("training steps are deterministic and keep the two updates apart") {
  TempDir tmp("steps");
  const std::string manifest = write_corpus(tmp, 3, 0.4);
  const model::RunConfig cfg = tiny_cfg(manifest, tmp.path("run"));

  Trainer<double> t1(cfg);
  Trainer<double> t2(cfg);
  for (int i = 0; i < 3; ++i) {
    const StepMetrics a = t1.train_step();
    const StepMetrics b = t2.train_step();
    INFO("step " << a.step);
    CHECK(metrics_equal(a, b));
    CHECK(a.lr ==
          nn::cosine_lr(a.step, cfg.train.steps, cfg.train.warmup, cfg.train.peak_lr));
    CHECK(std::isfinite(a.total));
    CHECK(a.total == doctest::Approx(cfg.train.weights.recon * a.recon +
                                     cfg.train.weights.adv * a.adv +
                                     cfg.train.weights.feat * a.feat)
                         .epsilon(1e-12));
  }

  // Cross-update isolation: the critic pass must not move generator values
  // and the generator pass must not move critic values.
  const std::vector<Segment> batch = t1.next_batch();
  auto gen_params = t1.generator().parameters();
  auto disc_params = t1.critic().parameters();
  const std::vector<MatD> gen_before = snapshot(gen_params);
  const std::vector<MatD> disc_before = snapshot(disc_params);
  t1.critic_update(batch, 1e-4);
  CHECK(identical(gen_before, gen_params));
  CHECK_FALSE(identical(disc_before, disc_params));
  const std::vector<MatD> disc_mid = snapshot(disc_params);
  StepMetrics m;
  m.lr = 1e-4;
  t1.generator_update(batch, m);
  CHECK(identical(disc_mid, disc_params));
  CHECK_FALSE(identical(gen_before, gen_params));
}

TEST_CASE("the encoder freeze leaves encoder parameters bit-identical") {
  TempDir tmp("freeze");
  const std::string manifest = write_corpus(tmp, 2, 0.4);
  model::RunConfig cfg = tiny_cfg(manifest, tmp.path("run"));

  cfg.train.freeze_encoder = true;
  Trainer<double> frozen(cfg);
  std::vector<MatD> before;
  std::vector<nn::Parameter<double>*> enc_params;
  for (auto* p : frozen.generator().parameters())
    if (p->name.rfind("encoder.", 0) == 0) {
      enc_params.push_back(p);
      before.push_back(p->value);
    }
  REQUIRE(!enc_params.empty());
  frozen.train_step();
  frozen.train_step();
  CHECK(identical(before, enc_params));

  cfg.train.freeze_encoder = false;
  Trainer<double> thawed(cfg);
  std::vector<MatD> before2;
  std::vector<nn::Parameter<double>*> enc2;
  for (auto* p : thawed.generator().parameters())
    if (p->name.rfind("encoder.", 0) == 0) {
      enc2.push_back(p);
      before2.push_back(p->value);
    }
  thawed.train_step();
  CHECK_FALSE(identical(before2, enc2));
}

TEST_CASE("a resumed run reproduces the uninterrupted metrics stream") {
  TempDir tmp("resume");
  const std::string manifest = write_corpus(tmp, 3, 0.4);
  const model::RunConfig cfg = tiny_cfg(manifest, tmp.path("run"));

  Trainer<double> full(cfg);
  std::vector<StepMetrics> reference;
  for (int i = 0; i < 6; ++i) reference.push_back(full.train_step());

  Trainer<double> first(cfg);
  for (int i = 0; i < 3; ++i) first.train_step();
  const std::string ckpt = tmp.path("mid.swckpt");
  first.save(ckpt);

  Trainer<double> second(cfg);
  second.load(ckpt);
  CHECK(second.step() == 3);
  for (int i = 3; i < 6; ++i) {
    const StepMetrics m = second.train_step();
    INFO("resumed step " << m.step);
    CHECK(metrics_equal(m, reference[static_cast<size_t>(i)]));
  }

  SUBCASE("config drift is refused") {
    model::RunConfig other = cfg;
    other.model.d_model = 32;
    Trainer<double> wrong(other);
    CHECK_THROWS_WITH_AS(wrong.load(ckpt), doctest::Contains("different configuration"),
                         ConfigError);
  }
}

TEST_CASE("non-finite losses abort with the step and term named") {
  TempDir tmp("nonfinite");
  const std::string manifest = write_corpus(tmp, 2, 0.4);
  const model::RunConfig cfg = tiny_cfg(manifest, tmp.path("run"));

  Trainer<double> t(cfg);
  t.train_step();
  for (auto* p : t.generator().parameters())
    if (p->name == "decoder.head.b") p->value.setConstant(1e6);
  try {
    t.train_step();
    FAIL("expected a non-finite abort");
  } catch (const RuntimeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("step 2") != std::string::npos);
    CHECK(msg.find("non-finite") != std::string::npos);
  }
}

TEST_CASE("run writes a metrics file and a step-stamped checkpoint") {
  TempDir tmp("rundir");
  const std::string manifest = write_corpus(tmp, 2, 0.4);
  model::RunConfig cfg = tiny_cfg(manifest, tmp.path("run"));
  cfg.train.steps = 4;
  cfg.train.warmup = 2;

  Trainer<double> t(cfg);
  t.run();
  CHECK(fs::exists(tmp.path("run/ckpt_step4.swckpt")));

  std::ifstream metrics(tmp.path("run/metrics.jsonl"));
  REQUIRE(metrics.good());
  std::string line;
  int lines = 0;
  nlohmann::json last;
  while (std::getline(metrics, line)) {
    ++lines;
    last = nlohmann::json::parse(line);
  }
  CHECK(lines == 4);
  for (const char* key : {"step", "lr", "recon", "adv", "feat", "disc", "total"})
    CHECK(last.contains(key));
  CHECK(last["step"] == 4);
  CHECK(last["lr"].get<double>() ==
        nn::cosine_lr(4, cfg.train.steps, cfg.train.warmup, cfg.train.peak_lr));

  // Identical config and corpus give a byte-identical metrics file.
  std::ifstream again(tmp.path("run/metrics.jsonl"));
  const std::string body1((std::istreambuf_iterator<char>(again)),
                          std::istreambuf_iterator<char>());
  Trainer<double> t2(cfg);
  t2.run();
  std::ifstream after(tmp.path("run/metrics.jsonl"));
  const std::string body2((std::istreambuf_iterator<char>(after)),
                          std::istreambuf_iterator<char>());
  CHECK(body1 == body2);

  // The checkpoint doubles as the inference artifact.
  LoadedGenerator<double> inf = load_generator<double>(tmp.path("run/ckpt_step4.swckpt"));
  CHECK(inf.cfg.model.d_model == 16);
  const AudioBuffer x = tone(220.0, 0.2, 77);
  const model::TokenStream ts = inf.gen.encode_tokens(x);
  CHECK(ts.grid.frames() >= 1);
}
