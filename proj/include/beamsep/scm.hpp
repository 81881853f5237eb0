#pragma once

#include <vector>

#include "beamsep/hermitian.hpp"
#include "beamsep/stft.hpp"

namespace beamsep {

// One frame of multichannel spectra, C x F.
struct FrameSpectra {
  int channels = 0;
  int bins = 0;
  std::vector<cxd> v;  // c * bins + f

  cxd& at(int c, int f) { return v[static_cast<std::size_t>(c) * bins + f]; }
  cxd at(int c, int f) const {
    return v[static_cast<std::size_t>(c) * bins + f];
  }
};

FrameSpectra make_frame(int channels, int bins);
FrameSpectra frame_of(const ComplexSpectrogram& spec, int t);

// Per-source target and interference spatial correlation matrices, one C x C
// Hermitian pair per frequency bin. Matrices are stored bin-major within
// each source; no smoothing across bins is applied.
struct ScmField {
  int sources = 0;
  int channels = 0;
  int bins = 0;
  long frames_seen = 0;
  std::vector<HermitianMatrix> target;    // s * bins + f
  std::vector<HermitianMatrix> interfer;  // s * bins + f

  HermitianMatrix& target_at(int s, int f) {
    return target[static_cast<std::size_t>(s) * bins + f];
  }
  const HermitianMatrix& target_at(int s, int f) const {
    return target[static_cast<std::size_t>(s) * bins + f];
  }
  HermitianMatrix& interfer_at(int s, int f) {
    return interfer[static_cast<std::size_t>(s) * bins + f];
  }
  const HermitianMatrix& interfer_at(int s, int f) const {
    return interfer[static_cast<std::size_t>(s) * bins + f];
  }
};

ScmField make_scm_field(int sources, int channels, int bins);

// Utterance-level averages:
//   target[s][f]   = (1/T) sum_t Z_{s,t,f} Z_{s,t,f}^H
//   interfer[s][f] = (1/T) sum_t (Y_{t,f} - Z_{s,t,f})(Y_{t,f} - Z_{s,t,f})^H
ScmField batch_scms(const ComplexSpectrogram& mixture,
                    const std::vector<ComplexSpectrogram>& sources);

// Growing-average recursion for frame t = frames_seen + 1:
//   phi_t = ((t-1)/t) phi_{t-1} + (1/t) * (current outer product)
void causal_scm_update(ScmField& state, const FrameSpectra& mixture_frame,
                       const std::vector<FrameSpectra>& source_frames);

}  // namespace beamsep
