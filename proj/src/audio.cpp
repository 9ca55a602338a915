// SPDX-License-Identifier: Apache-2.0
#include "swcodec/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace swc {

namespace {

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (uint32_t(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return uint16_t(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ostream& out, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  out.write(reinterpret_cast<char*>(b), 2);
}

} // namespace

void validate_audio(const AudioBuffer& audio) {
  require(audio.sample_rate > 0, "audio: sample_rate must be positive");
  for (Index i = 0; i < audio.samples.size(); ++i) {
    const float s = audio.samples[i];
    require(std::isfinite(s), "audio: non-finite sample at index " + std::to_string(i));
    require(s >= -1.0f && s <= 1.0f,
            "audio: sample " + std::to_string(i) + " = " + std::to_string(s) +
                " clips beyond [-1, 1]");
  }
}

AudioBuffer load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "wav: cannot open '" + path + "'");

  char riff[4], wave[4];
  in.read(riff, 4);
  read_u32(in); // chunk size
  in.read(wave, 4);
  require(in.good() && std::memcmp(riff, "RIFF", 4) == 0 && std::memcmp(wave, "WAVE", 4) == 0,
          "wav: '" + path + "' is not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<int16_t> pcm;
  bool got_fmt = false, got_data = false;

  while (in.good() && !(got_fmt && got_data)) {
    char id[4];
    in.read(id, 4);
    if (!in.good()) break;
    uint32_t size = read_u32(in);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in); // byte rate
      read_u16(in); // block align
      bits = read_u16(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      got_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      pcm.resize(size / 2);
      in.read(reinterpret_cast<char*>(pcm.data()), size);
      require(in.good(), "wav: truncated data chunk in '" + path + "'");
      got_data = true;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }

  require(got_fmt && got_data, "wav: missing fmt/data chunk in '" + path + "'");
  require(format == 1, "wav: '" + path + "' is not PCM (format " + std::to_string(format) + ")");
  require(channels == 1, "wav: '" + path + "' has " + std::to_string(channels) +
                             " channels, only mono is supported");
  require(bits == 16, "wav: '" + path + "' has " + std::to_string(bits) +
                          "-bit samples, only 16-bit is supported");
  require(rate == 16000, "wav: '" + path + "' is " + std::to_string(rate) +
                             " Hz, only 16000 Hz is supported");

  AudioBuffer audio;
  audio.sample_rate = static_cast<int>(rate);
  audio.samples.resize(static_cast<Index>(pcm.size()));
  for (size_t i = 0; i < pcm.size(); ++i)
    audio.samples[static_cast<Index>(i)] = static_cast<float>(pcm[i]) / 32768.0f;
  validate_audio(audio);
  return audio;
}

void save_wav(const std::string& path, const AudioBuffer& audio) {
  require(audio.sample_rate == 16000, "wav: only 16000 Hz output is supported");
  std::ofstream out(path, std::ios::binary);
  require_runtime(out.good(), "wav: cannot write '" + path + "'");

  const uint32_t n = static_cast<uint32_t>(audio.samples.size());
  const uint32_t data_bytes = n * 2;
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, 16000);
  write_u32(out, 16000 * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (Index i = 0; i < audio.samples.size(); ++i) {
    // same 1/32768 scale the reader uses, so a round trip only loses the
    // rounding to the nearest integer level
    const float s = std::clamp(audio.samples[i], -1.0f, 1.0f);
    const long q = std::clamp<long>(std::lrint(s * 32768.0f), -32768, 32767);
    write_u16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  require_runtime(out.good(), "wav: write failed for '" + path + "'");
}

} // namespace swc
