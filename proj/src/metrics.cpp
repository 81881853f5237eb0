#include "beamsep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace beamsep {

namespace {

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

MetricValue clamp_db(double num, double den) {
  if (den <= 0.0) return {kMetricClampDb, true};
  if (num <= 0.0) return {-kMetricClampDb, true};
  const double db = 10.0 * std::log10(num / den);
  if (db > kMetricClampDb) return {kMetricClampDb, true};
  if (db < -kMetricClampDb) return {-kMetricClampDb, true};
  return {db, false};
}

// Symmetric positive definite solve via Cholesky, in place.
void solve_spd(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int j = 0; j < n; ++j) {
    double d = a[static_cast<std::size_t>(j) * n + j];
    for (int k = 0; k < j; ++k) {
      const double l = a[static_cast<std::size_t>(j) * n + k];
      d -= l * l;
    }
    if (!(d > 0.0))
      throw NumericalError("Toeplitz system not positive definite");
    const double l = std::sqrt(d);
    a[static_cast<std::size_t>(j) * n + j] = l;
    for (int i = j + 1; i < n; ++i) {
      double s = a[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k)
        s -= a[static_cast<std::size_t>(i) * n + k] *
             a[static_cast<std::size_t>(j) * n + k];
      a[static_cast<std::size_t>(i) * n + j] = s / l;
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k)
      s -= a[static_cast<std::size_t>(i) * n + k] * b[k];
    b[i] = s / a[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k)
      s -= a[static_cast<std::size_t>(k) * n + i] * b[k];
    b[i] = s / a[static_cast<std::size_t>(i) * n + i];
  }
}

}  // namespace

MetricValue snr(std::span<const double> estimate,
                std::span<const double> reference) {
  if (estimate.size() != reference.size())
    throw DimensionError("snr operands differ in length");
  const double ref_e = energy(reference);
  if (ref_e == 0.0) return {0.0, true};
  double err_e = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    err_e += d * d;
  }
  return clamp_db(ref_e, err_e);
}

MetricValue bsseval_sdr(std::span<const double> estimate,
                        std::span<const double> reference, int taps) {
  if (estimate.size() != reference.size())
    throw DimensionError("sdr operands differ in length");
  if (taps < 1) throw ConfigError("taps must be >= 1");
  const std::size_t n = reference.size();
  if (n <= static_cast<std::size_t>(taps))
    throw ConfigError("signals must be longer than the distortion filter");
  if (energy(reference) == 0.0)
    throw ConfigError("reference signal is all zero");

  // Autocorrelation over the zero-extended support; the Gram matrix of the
  // delayed references is exactly Toeplitz there.
  std::vector<double> rho(static_cast<std::size_t>(taps), 0.0);
  for (int k = 0; k < taps; ++k) {
    double s = 0.0;
    for (std::size_t m = static_cast<std::size_t>(k); m < n; ++m)
      s += reference[m] * reference[m - k];
    rho[k] = s;
  }
  std::vector<double> g(static_cast<std::size_t>(taps) * taps);
  for (int i = 0; i < taps; ++i)
    for (int j = 0; j < taps; ++j)
      g[static_cast<std::size_t>(i) * taps + j] = rho[std::abs(i - j)];
  const double reg = 1e-10 * rho[0];
  for (int i = 0; i < taps; ++i)
    g[static_cast<std::size_t>(i) * taps + i] += reg;

  std::vector<double> h(static_cast<std::size_t>(taps), 0.0);
  for (int i = 0; i < taps; ++i) {
    double s = 0.0;
    for (std::size_t m = static_cast<std::size_t>(i); m < n; ++m)
      s += estimate[m] * reference[m - i];
    h[i] = s;
  }
  solve_spd(g, h, taps);

  // s_target = h * reference, evaluated over the extended support.
  const std::size_t ext = n + taps - 1;
  double target_e = 0.0;
  double err_e = 0.0;
  for (std::size_t m = 0; m < ext; ++m) {
    double st = 0.0;
    const int i_lo = m >= n ? static_cast<int>(m - n + 1) : 0;
    const int i_hi = std::min<int>(taps - 1, static_cast<int>(m));
    for (int i = i_lo; i <= i_hi; ++i) st += h[i] * reference[m - i];
    const double est_m = m < n ? estimate[m] : 0.0;
    target_e += st * st;
    const double d = est_m - st;
    err_e += d * d;
  }
  return clamp_db(target_e, err_e);
}

MetricReport report(const SourceImageSet& output, const SourceImageSet& truth,
                    int reference_channel, int taps) {
  output.validate();
  truth.validate();
  if (output.sources() != truth.sources() ||
      output.channels() != truth.channels() ||
      output.length() != truth.length())
    throw DimensionError("output and truth image sets differ in shape");
  const int nsrc = truth.sources();
  if (nsrc > 6)
    throw ConfigError("best-permutation scoring is exhaustive; S <= 6 only");
  if (reference_channel < 1 || reference_channel > truth.channels())
    throw ConfigError("reference channel out of range");
  const int ref = reference_channel - 1;

  // Pairwise SDR at the reference channel feeds the assignment search.
  std::vector<std::vector<double>> pair_sdr(
      static_cast<std::size_t>(nsrc), std::vector<double>(nsrc, 0.0));
  for (int s = 0; s < nsrc; ++s)
    for (int e = 0; e < nsrc; ++e)
      pair_sdr[s][e] = bsseval_sdr(output.images[e].samples[ref],
                                   truth.images[s].samples[ref], taps)
                           .db;

  std::vector<int> perm(static_cast<std::size_t>(nsrc));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_score = -1e300;
  do {
    double score = 0.0;
    for (int s = 0; s < nsrc; ++s) score += pair_sdr[s][perm[s]];
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  MetricReport rep;
  rep.reference_channel = reference_channel;
  rep.permutation = best;
  rep.by_source.assign(static_cast<std::size_t>(nsrc),
                       std::vector<MetricEntry>(truth.channels()));
  double snr_sum = 0.0;
  double sdr_sum = 0.0;
  for (int s = 0; s < nsrc; ++s) {
    for (int c = 0; c < truth.channels(); ++c) {
      const auto& est = output.images[best[s]].samples[c];
      const auto& exp = truth.images[s].samples[c];
      const MetricValue sv = snr(est, exp);
      const MetricValue dv = bsseval_sdr(est, exp, taps);
      rep.by_source[s][c] = {sv.db, dv.db, sv.clamped, dv.clamped};
    }
    snr_sum += rep.by_source[s][ref].snr_db;
    sdr_sum += rep.by_source[s][ref].sdr_db;
  }
  rep.mean_snr_db = snr_sum / nsrc;
  rep.mean_sdr_db = sdr_sum / nsrc;
  return rep;
}

}  // namespace beamsep
