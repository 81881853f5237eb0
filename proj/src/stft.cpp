#include "beamsep/stft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "beamsep/fft.hpp"

namespace beamsep {

void StftConfig::validate() const {
  if (frame_len < 2 || hop < 1) throw ConfigError("invalid frame/hop sizes");
  if (frame_len % hop != 0)
    throw ConfigError("hop " + std::to_string(hop) + " must divide frame_len " +
                      std::to_string(frame_len));
  if (fft_size < frame_len) throw ConfigError("fft_size must be >= frame_len");
}

int StftConfig::frame_count(std::size_t n) const {
  // Smallest T so that frames at offsets 0, hop, ..., (T-1)*hop of the
  // head-padded stream give every input sample the full overlap count.
  const std::size_t total = n + static_cast<std::size_t>(head_pad());
  return static_cast<int>((total + hop - 1) / hop);
}

std::size_t StftConfig::padded_len(std::size_t n) const {
  return static_cast<std::size_t>(frame_count(n) - 1) * hop + frame_len;
}

std::vector<double> make_window(const StftConfig& config) {
  const int len = config.frame_len;
  std::vector<double> w(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i)
    w[i] = std::sin(std::numbers::pi * i / len);  // sqrt of periodic Hann
  return w;
}

ComplexSpectrogram make_spectrogram(int channels, int frames,
                                    const StftConfig& config,
                                    std::size_t original_len) {
  ComplexSpectrogram spec;
  spec.channels = channels;
  spec.frames = frames;
  spec.bins = config.bins();
  spec.config = config;
  spec.original_len = original_len;
  spec.data.assign(static_cast<std::size_t>(channels) * frames * spec.bins,
                   std::complex<double>(0.0, 0.0));
  return spec;
}

std::vector<std::complex<double>> analyze_frame(std::span<const double> padded,
                                                int t,
                                                const StftConfig& config) {
  const int len = config.frame_len;
  const std::size_t start = static_cast<std::size_t>(t) * config.hop;
  if (start + len > padded.size())
    throw DimensionError("frame " + std::to_string(t) +
                         " extends past the padded stream");
  static thread_local std::vector<double> window;
  static thread_local int window_len = 0;
  if (window_len != len) {
    window = make_window(config);
    window_len = len;
  }
  std::vector<double> buf(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) buf[i] = padded[start + i] * window[i];
  return fft::rfft(buf, config.fft_size);
}

ComplexSpectrogram analyze(const MultichannelWaveform& wave,
                           const StftConfig& config) {
  config.validate();
  wave.validate();
  const std::size_t n = wave.length();
  if (n == 0) throw DimensionError("cannot analyze an empty waveform");

  const int frames = config.frame_count(n);
  const std::size_t padded_len = config.padded_len(n);
  const std::size_t head = static_cast<std::size_t>(config.head_pad());

  ComplexSpectrogram spec =
      make_spectrogram(wave.channels(), frames, config, n);
  spec.sample_rate = wave.sample_rate;
  std::vector<double> padded(padded_len, 0.0);
  for (int c = 0; c < wave.channels(); ++c) {
    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy(wave.samples[c].begin(), wave.samples[c].end(),
              padded.begin() + head);
    for (int t = 0; t < frames; ++t) {
      auto bins = analyze_frame(padded, t, config);
      std::copy(bins.begin(), bins.end(), spec.frame(c, t).begin());
    }
  }
  return spec;
}

MultichannelWaveform synthesize(const ComplexSpectrogram& spec) {
  spec.config.validate();
  if (spec.channels < 1 || spec.frames < 1)
    throw DimensionError("empty spectrogram");
  const StftConfig& cfg = spec.config;
  const std::size_t head = static_cast<std::size_t>(cfg.head_pad());
  const std::size_t padded_len =
      static_cast<std::size_t>(spec.frames - 1) * cfg.hop + cfg.frame_len;
  if (head + spec.original_len > padded_len)
    throw DimensionError("spectrogram frame count too small for original_len");

  const std::vector<double> window = make_window(cfg);
  MultichannelWaveform out =
      make_waveform(spec.channels, spec.original_len, spec.sample_rate);
  std::vector<double> acc(padded_len);
  std::vector<double> norm(padded_len);
  for (int c = 0; c < spec.channels; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(norm.begin(), norm.end(), 0.0);
    for (int t = 0; t < spec.frames; ++t) {
      auto frame = fft::irfft(spec.frame(c, t), cfg.fft_size);
      const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
      for (int i = 0; i < cfg.frame_len; ++i) {
        acc[start + i] += frame[i] * window[i];
        norm[start + i] += window[i] * window[i];
      }
    }
    for (std::size_t i = 0; i < spec.original_len; ++i) {
      const double d = norm[head + i];
      out.samples[c][i] = d > 0.0 ? acc[head + i] / d : 0.0;
    }
  }
  return out;
}

OverlapAdd::OverlapAdd(const StftConfig& config)
    : config_(config), window_(make_window(config)) {
  config.validate();
}

void OverlapAdd::add_frame(int t, std::span<const std::complex<double>> bins) {
  if (t != next_frame_)
    throw ConfigError("overlap-add frames must arrive in order");
  ++next_frame_;
  const std::size_t start = static_cast<std::size_t>(t) * config_.hop;
  const std::size_t need = start + config_.frame_len;
  if (acc_.size() < need) {
    acc_.resize(need, 0.0);
    norm_.resize(need, 0.0);
  }
  auto frame = fft::irfft(bins, config_.fft_size);
  for (int i = 0; i < config_.frame_len; ++i) {
    acc_[start + i] += frame[i] * window_[i];
    norm_[start + i] += window_[i] * window_[i];
  }
}

std::vector<double> OverlapAdd::take_finalized(std::size_t upto) {
  const std::size_t safe =
      static_cast<std::size_t>(next_frame_) * config_.hop;  // next frame start
  upto = std::min(upto, std::max(safe, taken_));
  std::vector<double> out;
  out.reserve(upto > taken_ ? upto - taken_ : 0);
  for (std::size_t i = taken_; i < upto; ++i) {
    const double d = i < norm_.size() ? norm_[i] : 0.0;
    out.push_back(d > 0.0 ? acc_[i] / d : 0.0);
  }
  if (upto > taken_) taken_ = upto;
  return out;
}

}  // namespace beamsep
