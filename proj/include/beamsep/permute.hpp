#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "beamsep/signal.hpp"

namespace beamsep {

// Exhaustive alignment is limited to S! <= 720 assignments.
constexpr int kMaxAlignSources = 6;

// Per-channel source orderings. pi[c][s] is the input source index feeding
// output slot s on channel c; channel 1 is the reference ordering, so
// pi[0] is always the identity.
struct PermutationMap {
  std::vector<std::vector<int>> pi;

  bool is_identity() const;
};

// Reorders sources per channel so slot s refers to the same physical source
// everywhere, maximizing the summed SNR against channel 1 over all S!
// permutations per channel.
std::pair<SourceImageSet, PermutationMap> batch_align(
    const SourceImageSet& images);

// Streaming alignment: cumulative SNR statistics against the channel-1
// signals, decided again at every frame over all samples received so far.
// A zero-energy reference pair contributes 0 dB; ties resolve to the
// lexicographically smallest permutation.
class CausalAligner {
 public:
  CausalAligner(int sources, int channels);

  // Folds samples [n0, n1) of the estimator signals into the statistics and
  // returns the ordering for the current frame.
  PermutationMap update(const SourceImageSet& estimates, std::size_t n0,
                        std::size_t n1);

  const std::vector<PermutationMap>& history() const { return history_; }
  std::size_t samples_seen() const { return samples_seen_; }

 private:
  int sources_;
  int channels_;
  std::size_t samples_seen_ = 0;
  std::vector<double> ref_energy_;  // [s]
  std::vector<double> err_energy_;  // [(s * sources + cand) * channels + c]
  std::vector<PermutationMap> history_;
};

}  // namespace beamsep
