#pragma once

#include <span>
#include <vector>

#include "beamsep/signal.hpp"

namespace beamsep {

// Values outside +-100 dB are reported at the clamp; exact-match cases land
// on +100 so "infinite" rows have a concrete machine representation.
constexpr double kMetricClampDb = 100.0;

struct MetricValue {
  double db = 0.0;
  bool clamped = false;
};

// 10 log10(||ref||^2 / ||ref - est||^2), clamped to +-100 dB. A zero-energy
// reference is defined as 0 dB and marked clamped.
MetricValue snr(std::span<const double> estimate,
                std::span<const double> reference);

// BSS-Eval style SDR: the estimate is projected onto the span of the
// reference delayed by 0..taps-1 samples (least squares over the
// zero-extended support, Toeplitz normal equations with 1e-10 relative
// diagonal regularization); SDR = 10 log10(target / error), clamped.
MetricValue bsseval_sdr(std::span<const double> estimate,
                        std::span<const double> reference, int taps = 512);

struct MetricEntry {
  double snr_db = 0.0;
  double sdr_db = 0.0;
  bool snr_clamped = false;
  bool sdr_clamped = false;
};

struct MetricReport {
  int reference_channel = 1;
  // permutation[s] = estimate index scored against truth source s.
  std::vector<int> permutation;
  std::vector<std::vector<MetricEntry>> by_source;  // [s][channel]
  double mean_snr_db = 0.0;  // over sources, at the reference channel
  double mean_sdr_db = 0.0;
};

// Best-permutation scoring: the source pairing maximizing mean SDR at the
// reference channel is searched exhaustively (S <= 6), so label swaps never
// hurt the reported numbers.
MetricReport report(const SourceImageSet& output, const SourceImageSet& truth,
                    int reference_channel, int taps = 512);

}  // namespace beamsep
