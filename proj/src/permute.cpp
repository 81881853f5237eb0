#include "beamsep/permute.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "beamsep/metrics.hpp"

namespace beamsep {

namespace {

// Cumulative-energy SNR with the metric module's conventions: zero-energy
// reference scores 0 dB, exact matches clamp at +100 dB.
double snr_db_from_energies(double ref_e, double err_e) {
  if (ref_e <= 0.0) return 0.0;
  if (err_e <= 0.0) return kMetricClampDb;
  const double db = 10.0 * std::log10(ref_e / err_e);
  return std::clamp(db, -kMetricClampDb, kMetricClampDb);
}

// Best assignment for one channel given score[s][cand]; ties keep the
// lexicographically smallest permutation.
std::vector<int> best_permutation(const std::vector<std::vector<double>>& score,
                                  int nsrc) {
  std::vector<int> perm(static_cast<std::size_t>(nsrc));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_score = -1e300;
  do {
    double total = 0.0;
    for (int s = 0; s < nsrc; ++s) total += score[s][perm[s]];
    if (total > best_score) {
      best_score = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

bool PermutationMap::is_identity() const {
  for (const auto& p : pi)
    for (std::size_t s = 0; s < p.size(); ++s)
      if (p[s] != static_cast<int>(s)) return false;
  return true;
}

std::pair<SourceImageSet, PermutationMap> batch_align(
    const SourceImageSet& images) {
  images.validate();
  const int nsrc = images.sources();
  const int chans = images.channels();
  if (nsrc > kMaxAlignSources)
    throw ConfigError(
        "exhaustive alignment supports at most " +
        std::to_string(kMaxAlignSources) +
        " sources; a Hungarian assignment solver is not provided");

  PermutationMap map;
  map.pi.assign(static_cast<std::size_t>(chans),
                std::vector<int>(static_cast<std::size_t>(nsrc)));
  std::iota(map.pi[0].begin(), map.pi[0].end(), 0);

  std::vector<std::vector<double>> score(
      static_cast<std::size_t>(nsrc), std::vector<double>(nsrc, 0.0));
  for (int c = 1; c < chans; ++c) {
    for (int s = 0; s < nsrc; ++s)
      for (int cand = 0; cand < nsrc; ++cand)
        score[s][cand] = snr(images.images[cand].samples[c],
                             images.images[s].samples[0])
                             .db;
    map.pi[c] = best_permutation(score, nsrc);
  }

  SourceImageSet aligned = images;
  for (int c = 0; c < chans; ++c)
    for (int s = 0; s < nsrc; ++s)
      aligned.images[s].samples[c] = images.images[map.pi[c][s]].samples[c];
  return {std::move(aligned), std::move(map)};
}

CausalAligner::CausalAligner(int sources, int channels)
    : sources_(sources), channels_(channels) {
  if (sources < 1 || channels < 1)
    throw DimensionError("aligner needs at least one source and channel");
  if (sources > kMaxAlignSources)
    throw ConfigError(
        "exhaustive alignment supports at most " +
        std::to_string(kMaxAlignSources) +
        " sources; a Hungarian assignment solver is not provided");
  ref_energy_.assign(static_cast<std::size_t>(sources), 0.0);
  err_energy_.assign(
      static_cast<std::size_t>(sources) * sources * channels, 0.0);
}

PermutationMap CausalAligner::update(const SourceImageSet& estimates,
                                     std::size_t n0, std::size_t n1) {
  if (estimates.sources() != sources_ || estimates.channels() != channels_)
    throw DimensionError("estimate set does not match aligner dimensions");
  if (n0 != samples_seen_ || n1 < n0 || n1 > estimates.length())
    throw ConfigError("causal aligner samples must arrive in order");

  for (std::size_t n = n0; n < n1; ++n) {
    for (int s = 0; s < sources_; ++s) {
      const double r = estimates.images[s].samples[0][n];
      ref_energy_[s] += r * r;
      for (int cand = 0; cand < sources_; ++cand)
        for (int c = 0; c < channels_; ++c) {
          const double d = r - estimates.images[cand].samples[c][n];
          err_energy_[(static_cast<std::size_t>(s) * sources_ + cand) *
                          channels_ +
                      c] += d * d;
        }
    }
  }
  samples_seen_ = n1;

  PermutationMap map;
  map.pi.assign(static_cast<std::size_t>(channels_),
                std::vector<int>(static_cast<std::size_t>(sources_)));
  std::iota(map.pi[0].begin(), map.pi[0].end(), 0);
  std::vector<std::vector<double>> score(
      static_cast<std::size_t>(sources_), std::vector<double>(sources_, 0.0));
  for (int c = 1; c < channels_; ++c) {
    for (int s = 0; s < sources_; ++s)
      for (int cand = 0; cand < sources_; ++cand)
        score[s][cand] = snr_db_from_energies(
            ref_energy_[s],
            err_energy_[(static_cast<std::size_t>(s) * sources_ + cand) *
                            channels_ +
                        c]);
    map.pi[c] = best_permutation(score, sources_);
  }
  history_.push_back(map);
  return map;
}

}  // namespace beamsep
