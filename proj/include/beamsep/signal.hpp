#pragma once

#include <compare>
#include <cstddef>
#include <vector>

#include "beamsep/errors.hpp"

namespace beamsep {

// Time-domain multichannel audio. Channels share one length; samples are
// double precision throughout the numerical core, converted only at file
// boundaries.
struct MultichannelWaveform {
  std::vector<std::vector<double>> samples;  // [channel][sample]
  int sample_rate = 8000;

  int channels() const { return static_cast<int>(samples.size()); }
  std::size_t length() const { return samples.empty() ? 0 : samples[0].size(); }
  void validate() const;
};

MultichannelWaveform make_waveform(int channels, std::size_t length,
                                   int sample_rate = 8000);

enum class Provenance { estimated, beamformed, ground_truth };

// (stage, iteration) pair identifying where in the processing flow a signal
// set was produced. Stage 1 runs once (iteration 0); stage 2 runs for
// iterations 1..n. Stage 0 marks ground truth.
struct StageTag {
  int stage = 1;
  int iteration = 0;

  friend bool operator==(const StageTag&, const StageTag&) = default;
  friend auto operator<=>(const StageTag&, const StageTag&) = default;
};

// S per-source image estimates, each a C-channel waveform of equal length.
struct SourceImageSet {
  std::vector<MultichannelWaveform> images;  // [source]
  Provenance provenance = Provenance::estimated;
  StageTag stage_tag;

  int sources() const { return static_cast<int>(images.size()); }
  int channels() const { return images.empty() ? 0 : images[0].channels(); }
  std::size_t length() const { return images.empty() ? 0 : images[0].length(); }
  void validate() const;
};

// Additive image model: mixture[c][n] = sum over sources of images[s][c][n].
MultichannelWaveform mix_images(const SourceImageSet& images);

// Elementwise mixture - image.
MultichannelWaveform residual(const MultichannelWaveform& mixture,
                              const MultichannelWaveform& image);

}  // namespace beamsep
