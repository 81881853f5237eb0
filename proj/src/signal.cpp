#include "beamsep/signal.hpp"

#include <cmath>
#include <string>

namespace beamsep {

void MultichannelWaveform::validate() const {
  if (samples.empty()) throw DimensionError("waveform has no channels");
  if (sample_rate <= 0)
    throw ConfigError("sample_rate must be positive, got " +
                      std::to_string(sample_rate));
  const std::size_t n = samples[0].size();
  for (std::size_t c = 1; c < samples.size(); ++c) {
    if (samples[c].size() != n)
      throw DimensionError("channel " + std::to_string(c + 1) + " has " +
                           std::to_string(samples[c].size()) +
                           " samples, expected " + std::to_string(n));
  }
}

MultichannelWaveform make_waveform(int channels, std::size_t length,
                                   int sample_rate) {
  if (channels < 1) throw DimensionError("channel count must be >= 1");
  MultichannelWaveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(static_cast<std::size_t>(channels),
                   std::vector<double>(length, 0.0));
  return w;
}

void SourceImageSet::validate() const {
  if (images.empty()) throw DimensionError("image set has no sources");
  if (stage_tag.iteration < 0)
    throw ConfigError("stage_tag iteration must be >= 0");
  images[0].validate();
  const int c = images[0].channels();
  const std::size_t n = images[0].length();
  const int rate = images[0].sample_rate;
  for (std::size_t s = 1; s < images.size(); ++s) {
    images[s].validate();
    if (images[s].channels() != c || images[s].length() != n ||
        images[s].sample_rate != rate)
      throw DimensionError("source " + std::to_string(s + 1) +
                           " does not match source 1 dimensions");
  }
}

MultichannelWaveform mix_images(const SourceImageSet& images) {
  if (images.images.empty()) throw DimensionError("image set has no sources");
  const MultichannelWaveform& first = images.images[0];
  first.validate();
  MultichannelWaveform mix = first;
  for (std::size_t s = 1; s < images.images.size(); ++s) {
    const MultichannelWaveform& img = images.images[s];
    if (img.channels() != mix.channels() || img.length() != mix.length())
      throw DimensionError("source " + std::to_string(s + 1) +
                           " dimensions do not match source 1");
    for (int c = 0; c < mix.channels(); ++c)
      for (std::size_t n = 0; n < mix.length(); ++n)
        mix.samples[c][n] += img.samples[c][n];
  }
  return mix;
}

MultichannelWaveform residual(const MultichannelWaveform& mixture,
                              const MultichannelWaveform& image) {
  if (mixture.channels() != image.channels() ||
      mixture.length() != image.length())
    throw DimensionError("residual operands differ in shape");
  MultichannelWaveform out = mixture;
  for (int c = 0; c < out.channels(); ++c)
    for (std::size_t n = 0; n < out.length(); ++n)
      out.samples[c][n] -= image.samples[c][n];
  return out;
}

}  // namespace beamsep
