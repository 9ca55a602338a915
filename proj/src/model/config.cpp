// SPDX-License-Identifier: Apache-2.0
#include "swcodec/model/config.hpp"

#include <fstream>
#include <sstream>

namespace swc::model {

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: expected true/false for '" + key + "', got '" + v + "'");
}

int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int64_t n = std::stoll(v, &pos);
    require(pos == v.size(), "trailing junk");
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config: expected an integer for '" + key + "', got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    require(pos == v.size(), "trailing junk");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: expected a number for '" + key + "', got '" + v + "'");
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<int>(parse_int(key, item)));
  require(!out.empty(), "config: empty list for '" + key + "'");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  // ModelConfig/FSQSpec/TrainConfig defaults are already the desk preset; the
  // mel front end is 100 Hz at 16 kHz.
  cfg.mel.fft_size = 512;
  cfg.mel.hop = 160;
  cfg.mel.win = 400;
  cfg.mel.n_mels = cfg.model.n_mels;
  return cfg;
}

RunConfig paper_run_config() {
  RunConfig cfg = default_run_config();
  cfg.model.n_mels = 80;
  cfg.model.d_model = 768;
  cfg.model.n_layers = 12;
  cfg.model.n_heads = 12;
  cfg.mel.n_mels = 80;
  cfg.train.steps = 500000;
  cfg.train.warmup = 5000;
  cfg.train.batch_size = 32;
  cfg.train.grad_accum = 3;
  return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos, "config: override '" + assignment + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string val = trim(assignment.substr(eq + 1));
  require(!key.empty(), "config: empty key in override '" + assignment + "'");
  require(!val.empty(), "config: empty value for '" + key + "'");

  if (key == "model.n_mels") {
    cfg.model.n_mels = parse_int(key, val);
    cfg.mel.n_mels = cfg.model.n_mels;
  } else if (key == "model.d_model") {
    cfg.model.d_model = parse_int(key, val);
  } else if (key == "model.n_layers") {
    cfg.model.n_layers = parse_int(key, val);
  } else if (key == "model.n_heads") {
    cfg.model.n_heads = parse_int(key, val);
  } else if (key == "model.use_stem_gelu") {
    cfg.model.use_stem_gelu = parse_bool(key, val);
  } else if (key == "model.use_abs_pe") {
    cfg.model.use_abs_pe = parse_bool(key, val);
  } else if (key == "model.frozen_encoder") {
    cfg.model.frozen_encoder = parse_bool(key, val);
    cfg.train.freeze_encoder = cfg.model.frozen_encoder;
  } else if (key == "fsq.levels") {
    cfg.fsq.levels = parse_int_list(key, val);
  } else if (key == "fsq.n_groups") {
    cfg.fsq.n_groups = parse_int(key, val);
  } else if (key == "mel.fft_size") {
    cfg.mel.fft_size = parse_int(key, val);
  } else if (key == "mel.hop") {
    cfg.mel.hop = parse_int(key, val);
  } else if (key == "mel.win") {
    cfg.mel.win = parse_int(key, val);
  } else if (key == "mel.fmin") {
    cfg.mel.fmin = parse_double(key, val);
  } else if (key == "mel.fmax") {
    cfg.mel.fmax = parse_double(key, val);
  } else if (key == "mel.log_floor") {
    cfg.mel.log_floor = parse_double(key, val);
  } else if (key == "train.steps") {
    cfg.train.steps = parse_int(key, val);
  } else if (key == "train.warmup") {
    cfg.train.warmup = parse_int(key, val);
  } else if (key == "train.batch_size") {
    cfg.train.batch_size = parse_int(key, val);
  } else if (key == "train.grad_accum") {
    cfg.train.grad_accum = parse_int(key, val);
  } else if (key == "train.segment_seconds") {
    cfg.train.segment_seconds = parse_double(key, val);
  } else if (key == "train.peak_lr") {
    cfg.train.peak_lr = parse_double(key, val);
  } else if (key == "train.seed") {
    cfg.train.seed = static_cast<uint64_t>(parse_int(key, val));
  } else if (key == "train.freeze_encoder") {
    cfg.train.freeze_encoder = parse_bool(key, val);
  } else if (key == "train.gl_iters") {
    cfg.train.gl_iters = static_cast<int>(parse_int(key, val));
  } else if (key == "train.checkpoint_every") {
    cfg.train.checkpoint_every = parse_int(key, val);
  } else if (key == "train.lambda_recon") {
    cfg.train.weights.recon = parse_double(key, val);
  } else if (key == "train.lambda_adv") {
    cfg.train.weights.adv = parse_double(key, val);
  } else if (key == "train.lambda_feat") {
    cfg.train.weights.feat = parse_double(key, val);
  } else if (key == "train.feat_eps") {
    cfg.train.weights.eps = parse_double(key, val);
  } else if (key == "sample_rate") {
    cfg.sample_rate = static_cast<int>(parse_int(key, val));
  } else if (key == "data.manifest") {
    cfg.manifest = val;
  } else if (key == "run.dir") {
    cfg.run_dir = val;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg = default_run_config();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool saw_key = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config: line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "preset") {
      require(!saw_key, "config: 'preset' must come before other keys (line " +
                            std::to_string(lineno) + ")");
      if (val == "desk")
        cfg = default_run_config();
      else if (val == "paper")
        cfg = paper_run_config();
      else
        throw ConfigError("config: unknown preset '" + val + "'");
      continue;
    }
    saw_key = true;
    apply_override(cfg, key + "=" + val);
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "model.n_mels = " << cfg.model.n_mels << "\n";
  os << "model.d_model = " << cfg.model.d_model << "\n";
  os << "model.n_layers = " << cfg.model.n_layers << "\n";
  os << "model.n_heads = " << cfg.model.n_heads << "\n";
  os << "model.use_stem_gelu = " << (cfg.model.use_stem_gelu ? "true" : "false") << "\n";
  os << "model.use_abs_pe = " << (cfg.model.use_abs_pe ? "true" : "false") << "\n";
  os << "model.frozen_encoder = " << (cfg.model.frozen_encoder ? "true" : "false") << "\n";
  os << "fsq.levels = ";
  for (size_t i = 0; i < cfg.fsq.levels.size(); ++i)
    os << (i ? "," : "") << cfg.fsq.levels[i];
  os << "\n";
  os << "fsq.n_groups = " << cfg.fsq.n_groups << "\n";
  os << "mel.fft_size = " << cfg.mel.fft_size << "\n";
  os << "mel.hop = " << cfg.mel.hop << "\n";
  os << "mel.win = " << cfg.mel.win << "\n";
  os << "mel.fmin = " << cfg.mel.fmin << "\n";
  os << "mel.fmax = " << cfg.mel.fmax << "\n";
  os << "mel.log_floor = " << cfg.mel.log_floor << "\n";
  os << "train.steps = " << cfg.train.steps << "\n";
  os << "train.warmup = " << cfg.train.warmup << "\n";
  os << "train.batch_size = " << cfg.train.batch_size << "\n";
  os << "train.grad_accum = " << cfg.train.grad_accum << "\n";
  os << "train.segment_seconds = " << cfg.train.segment_seconds << "\n";
  os << "train.peak_lr = " << cfg.train.peak_lr << "\n";
  os << "train.seed = " << cfg.train.seed << "\n";
  os << "train.freeze_encoder = " << (cfg.train.freeze_encoder ? "true" : "false") << "\n";
  os << "train.gl_iters = " << cfg.train.gl_iters << "\n";
  os << "train.checkpoint_every = " << cfg.train.checkpoint_every << "\n";
  os << "train.lambda_recon = " << cfg.train.weights.recon << "\n";
  os << "train.lambda_adv = " << cfg.train.weights.adv << "\n";
  os << "train.lambda_feat = " << cfg.train.weights.feat << "\n";
  os << "train.feat_eps = " << cfg.train.weights.eps << "\n";
  os << "sample_rate = " << cfg.sample_rate << "\n";
  if (!cfg.manifest.empty()) os << "data.manifest = " << cfg.manifest << "\n";
  os << "run.dir = " << cfg.run_dir << "\n";
  return os.str();
}

} // namespace swc::model
