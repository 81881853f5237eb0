#include "beamsep/mvdr.hpp"

#include <cmath>
#include <string>

namespace beamsep {

namespace {

constexpr double kTraceFloor = 1e-12;

// One (source, bin) filter. Returns true when the fallback fired.
bool souden_filter(const HermitianMatrix& target, const HermitianMatrix& interfer,
                   int ref, double loading, std::span<cxd> w) {
  const int chans = target.dim();
  const HermitianMatrix inv = regularized_inverse(interfer, loading);
  const CMatrix num = matmul(inv.matrix(), target.matrix());
  const cxd tr = trace(num);
  if (std::abs(tr) < kTraceFloor) {
    for (int c = 0; c < chans; ++c) w[c] = cxd(c == ref - 1 ? 1.0 : 0.0, 0.0);
    return true;
  }
  for (int c = 0; c < chans; ++c) w[c] = num.at(c, ref - 1) / tr;
  return false;
}

}  // namespace

BeamformerWeights souden_weights(const ScmField& scms, int reference_channel,
                                 double loading) {
  if (reference_channel < 1 || reference_channel > scms.channels)
    throw ConfigError("reference channel " + std::to_string(reference_channel) +
                      " outside [1, " + std::to_string(scms.channels) + "]");
  BeamformerWeights out;
  out.sources = scms.sources;
  out.channels = scms.channels;
  out.bins = scms.bins;
  out.reference_channel = reference_channel;
  out.w.assign(static_cast<std::size_t>(scms.sources) * scms.bins * scms.channels,
               cxd(0.0, 0.0));
  for (int s = 0; s < scms.sources; ++s)
    for (int f = 0; f < scms.bins; ++f)
      if (souden_filter(scms.target_at(s, f), scms.interfer_at(s, f),
                        reference_channel, loading, out.at(s, f)))
        ++out.fallback_bins;
  for (const cxd& v : out.w)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalError("non-finite beamformer weight");
  return out;
}

std::vector<ComplexSpectrogram> beamform_apply(
    const BeamformerWeights& weights, const ComplexSpectrogram& mixture) {
  if (weights.channels != mixture.channels || weights.bins != mixture.bins)
    throw DimensionError("weights do not match mixture spectrogram");
  std::vector<ComplexSpectrogram> out;
  out.reserve(static_cast<std::size_t>(weights.sources));
  for (int s = 0; s < weights.sources; ++s) {
    ComplexSpectrogram enh =
        make_spectrogram(1, mixture.frames, mixture.config, mixture.original_len);
    enh.sample_rate = mixture.sample_rate;
    for (int f = 0; f < weights.bins; ++f) {
      const auto w = weights.at(s, f);
      for (int t = 0; t < mixture.frames; ++t) {
        cxd acc(0.0, 0.0);
        for (int c = 0; c < mixture.channels; ++c)
          acc += std::conj(w[c]) * mixture.at(c, t, f);
        enh.at(0, t, f) = acc;
      }
    }
    out.push_back(std::move(enh));
  }
  return out;
}

SourceImageSet mimmo_beamform(const ScmField& scms,
                              const ComplexSpectrogram& mixture,
                              double loading, long* fallback_count) {
  SourceImageSet set;
  set.provenance = Provenance::beamformed;
  set.images.assign(static_cast<std::size_t>(scms.sources),
                    make_waveform(scms.channels, mixture.original_len,
                                  mixture.sample_rate));
  if (fallback_count) *fallback_count = 0;
  for (int ref = 1; ref <= scms.channels; ++ref) {
    const BeamformerWeights w = souden_weights(scms, ref, loading);
    if (fallback_count) *fallback_count += w.fallback_bins;
    const std::vector<ComplexSpectrogram> enh = beamform_apply(w, mixture);
    for (int s = 0; s < scms.sources; ++s) {
      MultichannelWaveform wave = synthesize(enh[s]);
      set.images[s].samples[ref - 1] = std::move(wave.samples[0]);
    }
  }
  return set;
}

std::vector<CVector> causal_mvdr_frame(const ScmField& state,
                                       const FrameSpectra& mixture_frame,
                                       int reference_channel, double loading) {
  if (state.frames_seen < 1)
    throw ConfigError("causal MVDR needs at least one folded frame");
  if (mixture_frame.channels != state.channels ||
      mixture_frame.bins != state.bins)
    throw DimensionError("mixture frame does not match SCM state");
  std::vector<CVector> out(
      static_cast<std::size_t>(state.sources),
      CVector(static_cast<std::size_t>(state.bins), cxd(0.0, 0.0)));
  CVector w(static_cast<std::size_t>(state.channels));
  for (int s = 0; s < state.sources; ++s) {
    for (int f = 0; f < state.bins; ++f) {
      souden_filter(state.target_at(s, f), state.interfer_at(s, f),
                    reference_channel, loading, w);
      cxd acc(0.0, 0.0);
      for (int c = 0; c < state.channels; ++c)
        acc += std::conj(w[c]) * mixture_frame.at(c, f);
      out[s][f] = acc;
    }
  }
  return out;
}

}  // namespace beamsep
