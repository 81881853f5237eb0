#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "beamsep/signal.hpp"

namespace beamsep {

enum class Window { sqrt_hann_periodic };

// Analysis/synthesis filterbank settings. Defaults give 512 ms frames with a
// 128 ms hop at 8 kHz (4x overlap).
struct StftConfig {
  int frame_len = 4096;
  int hop = 1024;
  int fft_size = 4096;  // >= frame_len
  Window window = Window::sqrt_hann_periodic;

  int bins() const { return fft_size / 2 + 1; }

  // The input is zero-padded by frame_len - hop at the head so the first
  // sample sees every window phase, and at the tail until the last sample
  // does too. Frames then start at multiples of hop over the padded signal.
  int head_pad() const { return frame_len - hop; }
  int frame_count(std::size_t n) const;
  std::size_t padded_len(std::size_t n) const;

  void validate() const;
};

// Periodic square-root Hann of length frame_len, applied at both analysis
// and synthesis.
std::vector<double> make_window(const StftConfig& config);

struct ComplexSpectrogram {
  int channels = 0;
  int frames = 0;
  int bins = 0;
  StftConfig config;
  std::size_t original_len = 0;
  int sample_rate = 8000;
  std::vector<std::complex<double>> data;  // ((c * frames) + t) * bins + f

  std::complex<double>& at(int c, int t, int f) {
    return data[(static_cast<std::size_t>(c) * frames + t) * bins + f];
  }
  std::complex<double> at(int c, int t, int f) const {
    return data[(static_cast<std::size_t>(c) * frames + t) * bins + f];
  }
  std::span<const std::complex<double>> frame(int c, int t) const {
    return {data.data() + (static_cast<std::size_t>(c) * frames + t) * bins,
            static_cast<std::size_t>(bins)};
  }
  std::span<std::complex<double>> frame(int c, int t) {
    return {data.data() + (static_cast<std::size_t>(c) * frames + t) * bins,
            static_cast<std::size_t>(bins)};
  }
};

ComplexSpectrogram make_spectrogram(int channels, int frames,
                                    const StftConfig& config,
                                    std::size_t original_len);

// Windowed one-sided spectra per channel and frame. Deterministic.
ComplexSpectrogram analyze(const MultichannelWaveform& wave,
                           const StftConfig& config);

// Overlap-add with the synthesis window, normalized by the per-sample
// accumulated squared-window sum, truncated to original_len.
MultichannelWaveform synthesize(const ComplexSpectrogram& spec);

// One-sided spectrum of the windowed frame starting at tapped offset
// t * hop of the head-padded sample stream.
std::vector<std::complex<double>> analyze_frame(std::span<const double> padded,
                                                int t, const StftConfig& config);

// Incremental inverse transform + overlap-add, used by the streaming path.
// Frames must be added in order; padded positions before frame t+1's start
// are final once frame t has been added.
class OverlapAdd {
 public:
  explicit OverlapAdd(const StftConfig& config);

  void add_frame(int t, std::span<const std::complex<double>> bins);

  // Returns normalized samples of the padded stream in [taken, upto).
  std::vector<double> take_finalized(std::size_t upto);

 private:
  StftConfig config_;
  std::vector<double> window_;
  std::vector<double> acc_;
  std::vector<double> norm_;
  std::size_t taken_ = 0;
  int next_frame_ = 0;
};

}  // namespace beamsep
