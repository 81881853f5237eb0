#include "beamsep/estimator.hpp"

#include <cmath>
#include <string>

namespace beamsep {

namespace {

void check_truth(const EstimatorSpec& spec,
                 const MultichannelWaveform& mixture) {
  if (spec.truth.images.empty())
    throw ConfigError("oracle estimator needs ground-truth images");
  spec.truth.validate();
  if (spec.truth.channels() != mixture.channels() ||
      spec.truth.length() != mixture.length())
    throw DimensionError("ground truth does not match mixture dimensions");
}

SourceImageSet oracle_irm_estimate(const EstimatorSpec& spec,
                                   const MultichannelWaveform& mixture,
                                   const StftConfig& stft) {
  check_truth(spec, mixture);
  const double p = spec.irm_exponent;
  const ComplexSpectrogram mix_spec = analyze(mixture, stft);
  std::vector<ComplexSpectrogram> truth_specs;
  truth_specs.reserve(spec.truth.images.size());
  for (const auto& img : spec.truth.images)
    truth_specs.push_back(analyze(img, stft));

  SourceImageSet out;
  out.provenance = Provenance::estimated;
  const int nsrc = spec.truth.sources();
  for (int s = 0; s < nsrc; ++s) {
    ComplexSpectrogram masked = mix_spec;
    for (int c = 0; c < mix_spec.channels; ++c)
      for (int t = 0; t < mix_spec.frames; ++t)
        for (int f = 0; f < mix_spec.bins; ++f) {
          double num = std::pow(std::abs(truth_specs[s].at(c, t, f)), p);
          double den = 0.0;
          for (int s2 = 0; s2 < nsrc; ++s2)
            den += std::pow(std::abs(truth_specs[s2].at(c, t, f)), p);
          const double mask = den > 0.0 ? num / den : 0.0;
          masked.at(c, t, f) *= mask;
        }
    out.images.push_back(synthesize(masked));
  }
  return out;
}

}  // namespace

SourceImageSet estimate(const EstimatorSpec& spec,
                        const MultichannelWaveform& mixture,
                        const std::optional<SourceImageSet>& guidance,
                        StageTag stage_tag, const StftConfig& stft) {
  mixture.validate();
  const bool second_stage = stage_tag.stage == 2;
  if (second_stage != guidance.has_value())
    throw ConfigError(second_stage
                          ? "stage 2 estimation requires guidance"
                          : "guidance is only accepted at stage 2");
  if (guidance) {
    guidance->validate();
    if (guidance->channels() != mixture.channels() ||
        guidance->length() != mixture.length())
      throw DimensionError("guidance does not match mixture dimensions");
  }

  SourceImageSet out;
  switch (spec.kind) {
    case EstimatorKind::oracle_signal:
      check_truth(spec, mixture);
      out = spec.truth;
      out.provenance = Provenance::estimated;
      break;
    case EstimatorKind::oracle_irm:
      out = oracle_irm_estimate(spec, mixture, stft);
      break;
    case EstimatorKind::external: {
      auto it = spec.external.find(stage_tag);
      if (it == spec.external.end())
        throw ConfigError("no external estimate for stage " +
                          std::to_string(stage_tag.stage) + " iteration " +
                          std::to_string(stage_tag.iteration));
      out = it->second;
      out.validate();
      if (out.channels() != mixture.channels() ||
          out.length() != mixture.length())
        throw DimensionError("external estimate does not match mixture");
      out.provenance = Provenance::estimated;
      break;
    }
    case EstimatorKind::guided_passthrough:
      if (!guidance)
        throw ConfigError("guided_passthrough needs stage-2 guidance");
      out = *guidance;
      out.provenance = Provenance::estimated;
      break;
  }
  out.stage_tag = stage_tag;
  return out;
}

}  // namespace beamsep
