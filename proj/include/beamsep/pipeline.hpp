#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "beamsep/estimator.hpp"
#include "beamsep/mvdr.hpp"
#include "beamsep/permute.hpp"
#include "beamsep/scm.hpp"

namespace beamsep {

enum class PipelineMode { batch, causal };

struct PipelineConfig {
  StftConfig stft;
  int iterations = 4;
  double loading = kDefaultLoading;
  int reference_channel = 1;
  PipelineMode mode = PipelineMode::batch;
  EstimatorSpec estimator_stage1;
  EstimatorSpec estimator_stage2;

  void validate() const;
};

struct ScmSummary {
  std::vector<double> mean_target_trace;    // per source, mean over bins
  std::vector<double> mean_interfer_trace;  // per source, mean over bins
  long fallback_bins = 0;  // passthrough fallbacks summed over reference runs
};

// One estimator -> align -> SCM -> MVDR pass.
struct StageTraceEntry {
  StageTag tag;
  SourceImageSet estimator_output;  // aligned estimates feeding the SCMs
  SourceImageSet beamformed;        // all reference channels (S x C)
  PermutationMap permutations;
  ScmSummary scm;
};
using StageTrace = std::vector<StageTraceEntry>;

// estimate -> batch_align -> batch_scms -> mimmo_beamform.
StageTraceEntry run_stage(const PipelineConfig& config,
                          const EstimatorSpec& estimator,
                          const MultichannelWaveform& mixture,
                          const std::optional<SourceImageSet>& guidance,
                          StageTag tag);

// Stage 1 once, then the guided stage 2 cycled `iterations` times, each pass
// fed the previous beamformed output. Returns the final beamformed set and
// the full trace (length 1 + iterations).
std::pair<SourceImageSet, StageTrace> run_iterative(
    const PipelineConfig& config, const MultichannelWaveform& mixture);

// Streaming session: push input in order, each completed frame runs
// estimator slice -> causal alignment -> recursive SCM update -> per-frame
// MVDR -> overlap-add. Emitted samples depend only on input received so
// far; the algorithmic latency is frame_len - hop samples.
class CausalSession {
 public:
  explicit CausalSession(const PipelineConfig& config);
  ~CausalSession();

  CausalSession(const CausalSession&) = delete;
  CausalSession& operator=(const CausalSession&) = delete;

  void push(const MultichannelWaveform& block);
  // Pads the tail and processes the remaining frames; no pushes afterwards.
  void finish();

  // S source signals at the reference channel, emitted so far. After
  // finish() their length equals the input length.
  const std::vector<std::vector<double>>& emitted() const;
  const std::vector<PermutationMap>& permutation_history() const;
  const ScmField& scms() const;
  int frames_processed() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience wrapper: streams the whole utterance and returns the S x 1
// output at the reference channel.
SourceImageSet run_causal_stream(const PipelineConfig& config,
                                 const MultichannelWaveform& mixture);

}  // namespace beamsep
