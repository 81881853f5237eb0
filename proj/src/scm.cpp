#include "beamsep/scm.hpp"

#include <string>

namespace beamsep {

FrameSpectra make_frame(int channels, int bins) {
  FrameSpectra fr;
  fr.channels = channels;
  fr.bins = bins;
  fr.v.assign(static_cast<std::size_t>(channels) * bins, cxd(0.0, 0.0));
  return fr;
}

FrameSpectra frame_of(const ComplexSpectrogram& spec, int t) {
  FrameSpectra fr = make_frame(spec.channels, spec.bins);
  for (int c = 0; c < spec.channels; ++c) {
    auto src = spec.frame(c, t);
    std::copy(src.begin(), src.end(), fr.v.begin() + static_cast<std::size_t>(c) * spec.bins);
  }
  return fr;
}

ScmField make_scm_field(int sources, int channels, int bins) {
  ScmField field;
  field.sources = sources;
  field.channels = channels;
  field.bins = bins;
  field.frames_seen = 0;
  field.target.assign(static_cast<std::size_t>(sources) * bins,
                      HermitianMatrix(channels));
  field.interfer.assign(static_cast<std::size_t>(sources) * bins,
                        HermitianMatrix(channels));
  return field;
}

namespace {

void check_frame_dims(const ScmField& field, const FrameSpectra& mixture,
                      const std::vector<FrameSpectra>& sources) {
  if (static_cast<int>(sources.size()) != field.sources)
    throw DimensionError("source frame count does not match SCM field");
  if (mixture.channels != field.channels || mixture.bins != field.bins)
    throw DimensionError("mixture frame dimensions do not match SCM field");
  for (std::size_t s = 0; s < sources.size(); ++s)
    if (sources[s].channels != field.channels || sources[s].bins != field.bins)
      throw DimensionError("source " + std::to_string(s + 1) +
                           " frame dimensions do not match SCM field");
}

}  // namespace

ScmField batch_scms(const ComplexSpectrogram& mixture,
                    const std::vector<ComplexSpectrogram>& sources) {
  if (sources.empty()) throw DimensionError("no source spectrograms");
  const int chans = mixture.channels;
  const int frames = mixture.frames;
  const int bins = mixture.bins;
  if (frames < 1) throw DimensionError("mixture spectrogram has no frames");
  for (std::size_t s = 0; s < sources.size(); ++s)
    if (sources[s].channels != chans || sources[s].frames != frames ||
        sources[s].bins != bins)
      throw DimensionError("source " + std::to_string(s + 1) +
                           " spectrogram dimensions do not match mixture");

  ScmField field =
      make_scm_field(static_cast<int>(sources.size()), chans, bins);
  const double w = 1.0 / frames;
  CVector z(static_cast<std::size_t>(chans));
  CVector r(static_cast<std::size_t>(chans));
  for (int s = 0; s < field.sources; ++s) {
    for (int f = 0; f < bins; ++f) {
      HermitianMatrix& tgt = field.target_at(s, f);
      HermitianMatrix& itf = field.interfer_at(s, f);
      for (int t = 0; t < frames; ++t) {
        for (int c = 0; c < chans; ++c) {
          z[c] = sources[s].at(c, t, f);
          r[c] = mixture.at(c, t, f) - z[c];
        }
        tgt.accumulate_outer(z, w);
        itf.accumulate_outer(r, w);
      }
    }
  }
  field.frames_seen = frames;
  return field;
}

void causal_scm_update(ScmField& state, const FrameSpectra& mixture_frame,
                       const std::vector<FrameSpectra>& source_frames) {
  check_frame_dims(state, mixture_frame, source_frames);
  const long t = state.frames_seen + 1;
  const double keep = static_cast<double>(t - 1) / t;
  const double w = 1.0 / t;
  CVector z(static_cast<std::size_t>(state.channels));
  CVector r(static_cast<std::size_t>(state.channels));
  for (int s = 0; s < state.sources; ++s) {
    for (int f = 0; f < state.bins; ++f) {
      for (int c = 0; c < state.channels; ++c) {
        z[c] = source_frames[s].at(c, f);
        r[c] = mixture_frame.at(c, f) - z[c];
      }
      HermitianMatrix& tgt = state.target_at(s, f);
      HermitianMatrix& itf = state.interfer_at(s, f);
      tgt.scale(keep);
      tgt.accumulate_outer(z, w);
      itf.scale(keep);
      itf.accumulate_outer(r, w);
    }
  }
  state.frames_seen = t;
}

}  // namespace beamsep
