// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <unordered_map>
#include <vector>

#include "swcodec/common.hpp"
#include "swcodec/types.hpp"

namespace swc::train {

// One named tensor. Payload bytes stay at the tensor's native width so that
// save/load round-trips are bit-exact for float and double models alike
// (dtype 0 = f32, 1 = f64).
struct TensorRecord {
  std::string name;
  uint8_t dtype = 1;
  uint32_t rows = 0, cols = 0;
  std::vector<uint8_t> bytes;
};

struct Checkpoint {
  uint64_t step = 0;
  std::string config_text; // the full run configuration, parseable as written
  std::string rng_state;   // data-stream generator state
  uint64_t gen_opt_steps = 0, disc_opt_steps = 0;
  std::vector<TensorRecord> records;
};

void save_checkpoint(const std::string& path, const Checkpoint& c);

/// Parses the whole file before returning; any defect raises ConfigError with
/// a byte offset, so a truncated or tampered file never yields partial state.
Checkpoint load_checkpoint(const std::string& path);

template <typename S> constexpr uint8_t dtype_of();
template <> constexpr uint8_t dtype_of<float>() { return 0; }
template <> constexpr uint8_t dtype_of<double>() { return 1; }

template <typename S>
TensorRecord make_record(const std::string& name, const Mat<S>& m) {
  TensorRecord r;
  r.name = name;
  r.dtype = dtype_of<S>();
  r.rows = static_cast<uint32_t>(m.rows());
  r.cols = static_cast<uint32_t>(m.cols());
  r.bytes.resize(static_cast<size_t>(m.size()) * sizeof(S));
  std::memcpy(r.bytes.data(), m.data(), r.bytes.size());
  return r;
}

template <typename S>
void read_record(const TensorRecord& r, Mat<S>& out) {
  require(r.dtype == dtype_of<S>(), "checkpoint: record '" + r.name + "' has dtype tag " +
                                        std::to_string(int(r.dtype)) +
                                        ", expected " + std::to_string(int(dtype_of<S>())));
  require(static_cast<Index>(r.rows) == out.rows() && static_cast<Index>(r.cols) == out.cols(),
          "checkpoint: record '" + r.name + "' is " + std::to_string(r.rows) + "x" +
              std::to_string(r.cols) + ", expected " + std::to_string(out.rows()) + "x" +
              std::to_string(out.cols()));
  std::memcpy(out.data(), r.bytes.data(), r.bytes.size());
}

/// Copies records into the named targets. With exact_set the record names
/// must match the target names exactly; otherwise extra records are ignored.
/// A missing target is always a refusal.
template <typename S>
void apply_records(const Checkpoint& c,
                   const std::vector<std::pair<std::string, Mat<S>*>>& targets,
                   bool exact_set) {
  std::unordered_map<std::string, const TensorRecord*> by_name;
  for (const TensorRecord& r : c.records) {
    require(by_name.emplace(r.name, &r).second, "checkpoint: duplicate record '" + r.name + "'");
  }
  for (const auto& [name, mat] : targets) {
    auto it = by_name.find(name);
    require(it != by_name.end(), "checkpoint: name-set mismatch, missing record '" + name + "'");
    read_record(*it->second, *mat);
  }
  if (exact_set && by_name.size() != targets.size()) {
    std::unordered_map<std::string, int> wanted;
    for (const auto& [name, mat] : targets) wanted.emplace(name, 0);
    for (const TensorRecord& r : c.records)
      require(wanted.count(r.name) > 0,
              "checkpoint: name-set mismatch, unexpected record '" + r.name + "'");
  }
}

} // namespace swc::train
