#pragma once

#include <vector>

#include "beamsep/scm.hpp"
#include "beamsep/signal.hpp"

namespace beamsep {

// Per-source, per-bin complex filter vectors for one reference channel.
struct BeamformerWeights {
  int sources = 0;
  int channels = 0;
  int bins = 0;
  int reference_channel = 1;  // 1-based
  std::vector<cxd> w;         // (s * bins + f) * channels + c
  long fallback_bins = 0;     // bins where the passthrough fallback fired

  std::span<cxd> at(int s, int f) {
    return {w.data() + (static_cast<std::size_t>(s) * bins + f) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<const cxd> at(int s, int f) const {
    return {w.data() + (static_cast<std::size_t>(s) * bins + f) * channels,
            static_cast<std::size_t>(channels)};
  }
};

// w[s][f] = (Phi_I^-1 Phi_T / trace(Phi_I^-1 Phi_T)) u_ref. Degenerate
// traces (|tr| < 1e-12) fall back to the reference-channel selector so the
// filter always produces output.
BeamformerWeights souden_weights(const ScmField& scms, int reference_channel,
                                 double loading = kDefaultLoading);

// out[s](0, t, f) = w[s][f]^H Y(:, t, f); one single-channel spectrogram per
// source, carrying the mixture's config and original length.
std::vector<ComplexSpectrogram> beamform_apply(
    const BeamformerWeights& weights, const ComplexSpectrogram& mixture);

// Runs the single-reference path once per channel and assembles the S x C
// beamformed image set ("multi-channel multi-source output").
// fallback_count, when given, receives the passthrough-bin total.
SourceImageSet mimmo_beamform(const ScmField& scms,
                              const ComplexSpectrogram& mixture,
                              double loading = kDefaultLoading,
                              long* fallback_count = nullptr);

// Weights recomputed from the running SCMs, applied to one frame.
// out[s][f] = w[s][f]^H y[f]. Depends only on frames folded into the state.
std::vector<CVector> causal_mvdr_frame(const ScmField& state,
                                       const FrameSpectra& mixture_frame,
                                       int reference_channel,
                                       double loading = kDefaultLoading);

}  // namespace beamsep
