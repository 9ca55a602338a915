// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "swcodec/dsp/griffin_lim.hpp"
#include "swcodec/model/bottleneck.hpp"
#include "swcodec/model/config.hpp"
#include "swcodec/model/decoder.hpp"
#include "swcodec/model/encoder.hpp"
#include "swcodec/model/fsq.hpp"

namespace swc::model {

// The full codec: mel -> encoder (100 -> 50 Hz) -> downsampler (-> 12.5 Hz)
// -> FSQ -> upsampler (-> 50 Hz) -> decoder (-> 100 Hz mel). Waveforms enter
// through the log-mel front end and leave through Griffin-Lim.
template <typename S>
class Generator {
public:
  Generator(const RunConfig& cfg, Rng& rng)
      : cfg_(cfg), encoder_(cfg.model, rng), down_(cfg.model, cfg.fsq, rng),
        up_(cfg.model, cfg.fsq, rng),
        decoder_(cfg.model, cfg.mel.log_floor, rng) {
    cfg.validate();
  }

  struct Forward {
    nn::Var<S> mel_hat;      // T x n_mels, trimmed to the input length
    CodeGrid codes;          // token indices at 12.5 Hz (includes pad frames)
    EncodeResult<S> enc;     // attention maps and per-layer outputs
    Index latent50_frames = 0; // ceil(T/2), before divisibility padding
  };

  /// End-to-end differentiable pass over a T x n_mels log-mel input.
  Forward forward(nn::Tape<S>& t, nn::Var<S> mel) {
    const Index T = mel.rows();
    Forward out;
    out.enc = encoder_.encode(t, mel);
    out.latent50_frames = out.enc.latent.rows();
    nn::Var<S> padded = pad_frames_to_multiple(out.enc.latent, Downsampler<S>::kFactor);
    nn::Var<S> z = down_.forward(t, padded);
    out.codes = fsq_quantize(z.value(), cfg_.fsq).codes;
    out.codes.frame_rate = token_rate();
    nn::Var<S> zq = fsq_ste(z, cfg_.fsq);
    nn::Var<S> u = nn::slice_rows(up_.forward(t, zq), 0, out.latent50_frames);
    out.mel_hat = nn::slice_rows(decoder_.decode(t, u), 0, T);
    return out;
  }

  /// Waveform -> token stream (inference path, gradients discarded).
  TokenStream encode_tokens(const AudioBuffer& audio) {
    const dsp::MelSpectrogram mel = dsp::log_mel(audio, cfg_.mel);
    nn::Tape<S> t;
    nn::Var<S> latent = encoder_.encode(t, t.constant(mel.values.template cast<S>())).latent;
    const Index T50 = latent.rows();
    nn::Var<S> z = down_.forward(t, pad_frames_to_multiple(latent, Downsampler<S>::kFactor));
    TokenStream ts;
    ts.grid = fsq_quantize(z.value(), cfg_.fsq).codes;
    ts.grid.frame_rate = token_rate();
    ts.spec = cfg_.fsq;
    ts.original_50hz_frames = static_cast<uint32_t>(T50);
    return ts;
  }

  /// Token stream -> log-mel, 2 * original_50hz_frames rows.
  Mat<S> decode_tokens(const TokenStream& ts) {
    require(ts.spec.levels == cfg_.fsq.levels && ts.spec.n_groups == cfg_.fsq.n_groups,
            "decode: token quantizer spec does not match the model config");
    const Index T50 = static_cast<Index>(ts.original_50hz_frames);
    require(T50 >= 1 && T50 <= ts.grid.frames() * Downsampler<S>::kFactor,
            "decode: original frame count " + std::to_string(T50) +
                " inconsistent with " + std::to_string(ts.grid.frames()) + " token frames");
    nn::Tape<S> t;
    nn::Var<S> zq = t.constant(fsq_dequantize<S>(ts.grid, cfg_.fsq));
    nn::Var<S> u = nn::slice_rows(up_.forward(t, zq), 0, T50);
    return decoder_.decode(t, u).value();
  }

  /// Log-mel -> waveform via iterative phase reconstruction.
  AudioBuffer synthesize(const Mat<S>& mel, int gl_iters) const {
    dsp::MelSpectrogram m;
    m.values = mel.template cast<float>();
    m.frame_rate = static_cast<double>(cfg_.sample_rate) / cfg_.mel.hop;
    return dsp::griffin_lim(m, cfg_.mel, gl_iters, cfg_.sample_rate);
  }

  /// All parameters in checkpoint order: encoder, downsampler, upsampler, decoder.
  std::vector<nn::Parameter<S>*> parameters() {
    std::vector<nn::Parameter<S>*> out;
    encoder_.collect(out);
    down_.collect(out);
    up_.collect(out);
    decoder_.collect(out);
    return out;
  }

  /// Parameters the optimizer may update; the encoder drops out when frozen.
  std::vector<nn::Parameter<S>*> trainable_parameters(bool freeze_encoder) {
    std::vector<nn::Parameter<S>*> out;
    if (!freeze_encoder) encoder_.collect(out);
    down_.collect(out);
    up_.collect(out);
    decoder_.collect(out);
    return out;
  }

  double token_rate() const {
    return static_cast<double>(cfg_.sample_rate) / cfg_.mel.hop / 2.0 /
           static_cast<double>(Downsampler<S>::kFactor);
  }

  const RunConfig& config() const { return cfg_; }
  Encoder<S>& encoder() { return encoder_; }
  Downsampler<S>& downsampler() { return down_; }
  Upsampler<S>& upsampler() { return up_; }
  Decoder<S>& decoder() { return decoder_; }

private:
  RunConfig cfg_;
  Encoder<S> encoder_;
  Downsampler<S> down_;
  Upsampler<S> up_;
  Decoder<S> decoder_;
};

} // namespace swc::model
