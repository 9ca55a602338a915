// SPDX-License-Identifier: Apache-2.0
#include "swcodec/model/fsq.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace swc::model {

namespace {

constexpr char kMagic[5] = {'S', 'W', 'T', 'O', 'K'};
constexpr uint16_t kVersion = 1;

} // namespace

void save_tokens(const std::string& path, const TokenStream& ts) {
  ts.spec.validate();
  require(ts.grid.n_groups() == ts.spec.n_groups, "tokens: grid/spec group count mismatch");
  std::ofstream out(path, std::ios::binary);
  require_runtime(out.good(), "tokens: cannot write '" + path + "'");
  out.write(kMagic, 5);
  out.write(reinterpret_cast<const char*>(&kVersion), 2);
  const uint8_t n_groups = static_cast<uint8_t>(ts.spec.n_groups);
  const uint8_t dims = static_cast<uint8_t>(ts.spec.dims_per_group());
  out.write(reinterpret_cast<const char*>(&n_groups), 1);
  out.write(reinterpret_cast<const char*>(&dims), 1);
  for (int l : ts.spec.levels) {
    const uint8_t b = static_cast<uint8_t>(l);
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
  const float rate = static_cast<float>(ts.grid.frame_rate);
  out.write(reinterpret_cast<const char*>(&rate), 4);
  out.write(reinterpret_cast<const char*>(&ts.original_50hz_frames), 4);
  const int32_t size = static_cast<int32_t>(ts.spec.codebook_size());
  for (Index t = 0; t < ts.grid.frames(); ++t)
    for (Index g = 0; g < ts.grid.n_groups(); ++g) {
      const int32_t idx = ts.grid.indices(t, g);
      require(idx >= 0 && idx < size, "tokens: index " + std::to_string(idx) +
                                          " out of range at frame " + std::to_string(t) +
                                          ", group " + std::to_string(g));
      const uint16_t code = static_cast<uint16_t>(idx);
      out.write(reinterpret_cast<const char*>(&code), 2);
    }
  require_runtime(out.good(), "tokens: write failed for '" + path + "'");
}

TokenStream load_tokens(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "tokens: cannot open '" + path + "'");

  auto offset = [&]() { return static_cast<long>(in.tellg()); };
  auto fail = [&](const std::string& what) {
    throw ConfigError("tokens: '" + path + "': " + what + " at byte offset " +
                      std::to_string(offset()));
  };

  char magic[5];
  in.read(magic, 5);
  if (!in.good() || std::memcmp(magic, kMagic, 5) != 0) {
    in.clear();
    fail("wrong magic");
  }
  uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 2);
  if (!in.good()) fail("truncated header");
  if (version != kVersion)
    fail("unsupported version " + std::to_string(version));

  uint8_t n_groups = 0, dims = 0;
  in.read(reinterpret_cast<char*>(&n_groups), 1);
  in.read(reinterpret_cast<char*>(&dims), 1);
  if (!in.good() || n_groups == 0 || dims == 0) fail("bad group/dim counts");

  TokenStream ts;
  ts.spec.n_groups = n_groups;
  ts.spec.levels.resize(dims);
  for (uint8_t j = 0; j < dims; ++j) {
    uint8_t l = 0;
    in.read(reinterpret_cast<char*>(&l), 1);
    if (!in.good() || l < 2) fail("bad level in header");
    ts.spec.levels[j] = l;
  }
  float rate = 0.0f;
  in.read(reinterpret_cast<char*>(&rate), 4);
  in.read(reinterpret_cast<char*>(&ts.original_50hz_frames), 4);
  if (!in.good()) fail("truncated header");
  ts.grid.frame_rate = rate;
  ts.spec.validate();

  std::vector<uint16_t> payload;
  uint16_t code = 0;
  while (in.read(reinterpret_cast<char*>(&code), 2)) payload.push_back(code);
  if (in.gcount() != 0) {
    in.clear();
    fail("odd trailing byte");
  }
  if (payload.size() % n_groups != 0) {
    in.clear();
    in.seekg(0, std::ios::end);
    fail("payload of " + std::to_string(payload.size()) +
         " codes is not a whole number of frames");
  }
  const Index frames = static_cast<Index>(payload.size() / n_groups);
  const int32_t size = static_cast<int32_t>(ts.spec.codebook_size());
  ts.grid.indices.resize(frames, n_groups);
  const long header_bytes = 5 + 2 + 2 + dims + 4 + 4;
  for (Index t = 0; t < frames; ++t)
    for (Index g = 0; g < n_groups; ++g) {
      const int32_t idx = payload[static_cast<size_t>(t * n_groups + g)];
      if (idx >= size)
        throw ConfigError("tokens: '" + path + "': index " + std::to_string(idx) +
                          " out of range (codebook " + std::to_string(size) +
                          ") at byte offset " +
                          std::to_string(header_bytes + 2 * (t * n_groups + g)) + " (frame " +
                          std::to_string(t) + ", group " + std::to_string(g) + ")");
      ts.grid.indices(t, g) = idx;
    }
  return ts;
}

} // namespace swc::model
