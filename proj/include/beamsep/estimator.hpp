#pragma once

#include <map>
#include <optional>

#include "beamsep/signal.hpp"
#include "beamsep/stft.hpp"

namespace beamsep {

// Source-estimation stage. A trained separation network would slot in here;
// the built-in kinds cover oracle bounds and file-based plug-ins.
enum class EstimatorKind {
  oracle_signal,       // returns the ground-truth images
  oracle_irm,          // ratio-mask estimate from the ground truth
  external,            // waveforms supplied per (stage, iteration)
  guided_passthrough,  // returns the guidance unchanged (stage 2 only)
};

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::oracle_signal;
  SourceImageSet truth;   // required by the oracle kinds
  double irm_exponent = 2.0;
  // Resolved eagerly by the app layer so estimate() never touches files.
  std::map<StageTag, SourceImageSet> external;
};

// Produces S x C image estimates for the mixture. Guidance must be present
// exactly when stage_tag.stage == 2. The STFT config is the one the
// beamformer uses; oracle_irm masks are computed with it.
SourceImageSet estimate(const EstimatorSpec& spec,
                        const MultichannelWaveform& mixture,
                        const std::optional<SourceImageSet>& guidance,
                        StageTag stage_tag, const StftConfig& stft);

}  // namespace beamsep
