// SPDX-License-Identifier: Apache-2.0
#include "swcodec/train/checkpoint.hpp"

#include <fstream>

namespace swc::train {

namespace {

constexpr char kMagic[6] = {'S', 'W', 'C', 'K', 'P', 'T'};
constexpr uint16_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Cursor over an in-memory image; every read is bounds-checked so parsing a
// damaged file fails with an offset instead of reading garbage.
struct Reader {
  const std::string& path;
  const std::string& data;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("checkpoint: '" + path + "': " + what + " at byte offset " +
                      std::to_string(pos));
  }

  const char* take(size_t n, const char* what) {
    if (data.size() - pos < n) fail(std::string("truncated ") + what);
    const char* p = data.data() + pos;
    pos += n;
    return p;
  }

  uint16_t u16(const char* what) {
    const unsigned char* p = reinterpret_cast<const unsigned char*>(take(2, what));
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
  }

  uint32_t u32(const char* what) {
    const unsigned char* p = reinterpret_cast<const unsigned char*>(take(4, what));
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    return v;
  }

  uint64_t u64(const char* what) {
    const unsigned char* p = reinterpret_cast<const unsigned char*>(take(8, what));
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
  }

  std::string blob(uint32_t n, const char* what) { return std::string(take(n, what), n); }
};

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::string out;
  out.append(kMagic, 6);
  put_u16(out, kVersion);
  put_u64(out, c.step);
  put_u64(out, c.gen_opt_steps);
  put_u64(out, c.disc_opt_steps);
  put_u32(out, static_cast<uint32_t>(c.config_text.size()));
  out += c.config_text;
  put_u32(out, static_cast<uint32_t>(c.rng_state.size()));
  out += c.rng_state;
  put_u32(out, static_cast<uint32_t>(c.records.size()));
  for (const TensorRecord& r : c.records) {
    put_u16(out, static_cast<uint16_t>(r.name.size()));
    out += r.name;
    out.push_back(static_cast<char>(r.dtype));
    put_u32(out, r.rows);
    put_u32(out, r.cols);
    const size_t width = r.dtype == 0 ? 4 : 8;
    require(r.bytes.size() == static_cast<size_t>(r.rows) * r.cols * width,
            "checkpoint: record '" + r.name + "' payload size does not match its shape");
    out.append(reinterpret_cast<const char*>(r.bytes.data()), r.bytes.size());
  }
  std::ofstream f(path, std::ios::binary);
  require_runtime(f.good(), "checkpoint: cannot write '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require_runtime(f.good(), "checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "checkpoint: cannot open '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Reader in{path, data};
  const char* magic = in.take(6, "magic");
  if (std::memcmp(magic, kMagic, 6) != 0) {
    in.pos = 0;
    in.fail("wrong magic");
  }
  const uint16_t version = in.u16("version");
  if (version != kVersion) in.fail("unsupported version " + std::to_string(version));

  Checkpoint c;
  c.step = in.u64("step");
  c.gen_opt_steps = in.u64("optimizer step count");
  c.disc_opt_steps = in.u64("optimizer step count");
  c.config_text = in.blob(in.u32("config length"), "config text");
  c.rng_state = in.blob(in.u32("rng length"), "rng state");
  const uint32_t n_records = in.u32("record count");
  c.records.reserve(n_records);
  for (uint32_t k = 0; k < n_records; ++k) {
    TensorRecord r;
    r.name = in.blob(in.u16("record name length"), "record name");
    r.dtype = static_cast<uint8_t>(*in.take(1, "record dtype"));
    if (r.dtype > 1) in.fail("unknown dtype tag " + std::to_string(int(r.dtype)));
    r.rows = in.u32("record rows");
    r.cols = in.u32("record cols");
    const uint64_t n = static_cast<uint64_t>(r.rows) * r.cols * (r.dtype == 0 ? 4 : 8);
    const char* payload = in.take(static_cast<size_t>(n), "record payload");
    r.bytes.assign(payload, payload + n);
    c.records.push_back(std::move(r));
  }
  if (in.pos != data.size()) in.fail("trailing bytes after last record");
  return c;
}

} // namespace swc::train
