#pragma once

#include <complex>
#include <span>
#include <vector>

namespace beamsep::fft {

// One-sided real-to-complex DFT of length n; returns n/2 + 1 bins.
// x shorter than n is zero-padded; longer is an error.
std::vector<std::complex<double>> rfft(std::span<const double> x, int n);

// Inverse of rfft, scaled so irfft(rfft(x, n), n) reproduces x.
std::vector<double> irfft(std::span<const std::complex<double>> bins, int n);

}  // namespace beamsep::fft
