#include "beamsep/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "beamsep/errors.hpp"

namespace beamsep::fft {
namespace {

// FFTW plan creation is not thread-safe; execution via the new-array
// interface is. Plans are cached per transform size and reused.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan forward_plan(int n, double* in, fftw_complex* out) {
  static std::map<int, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(n);
  if (it == cache.end()) {
    fftw_plan p = fftw_plan_dft_r2c_1d(n, in, out,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    it = cache.emplace(n, p).first;
  }
  return it->second;
}

fftw_plan inverse_plan(int n, fftw_complex* in, double* out) {
  static std::map<int, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(n);
  if (it == cache.end()) {
    fftw_plan p = fftw_plan_dft_c2r_1d(n, in, out,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    it = cache.emplace(n, p).first;
  }
  return it->second;
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x, int n) {
  if (n < 1) throw ConfigError("fft size must be >= 1");
  if (x.size() > static_cast<std::size_t>(n))
    throw DimensionError("input longer than fft size");
  std::vector<double> in(static_cast<std::size_t>(n), 0.0);
  std::copy(x.begin(), x.end(), in.begin());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan p = forward_plan(n, in.data(),
                             reinterpret_cast<fftw_complex*>(out.data()));
  fftw_execute_dft_r2c(p, in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> irfft(std::span<const std::complex<double>> bins, int n) {
  if (n < 1) throw ConfigError("fft size must be >= 1");
  if (bins.size() != static_cast<std::size_t>(n / 2 + 1))
    throw DimensionError("bin count does not match fft size");
  // c2r destroys its input, so work on a copy.
  std::vector<std::complex<double>> in(bins.begin(), bins.end());
  std::vector<double> out(static_cast<std::size_t>(n));
  fftw_plan p = inverse_plan(n, reinterpret_cast<fftw_complex*>(in.data()),
                             out.data());
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  const double scale = 1.0 / n;
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace beamsep::fft
