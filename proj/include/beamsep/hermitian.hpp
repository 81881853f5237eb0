#pragma once

#include <complex>
#include <span>
#include <vector>

#include "beamsep/errors.hpp"

namespace beamsep {

using cxd = std::complex<double>;
using CVector = std::vector<cxd>;

// Default diagonal loading coefficient, relative to the mean diagonal.
constexpr double kDefaultLoading = 1e-6;
// Absolute floor on the mean diagonal inside regularized_inverse; keeps the
// all-zero SCM of a silent source invertible.
constexpr double kLoadingFloor = 1e-10;

// Dense complex square matrix, row-major. Dimensions stay small (<= 8).
struct CMatrix {
  int dim = 0;
  std::vector<cxd> e;

  explicit CMatrix(int d = 0) : dim(d), e(static_cast<std::size_t>(d) * d) {}
  cxd& at(int i, int j) { return e[static_cast<std::size_t>(i) * dim + j]; }
  cxd at(int i, int j) const { return e[static_cast<std::size_t>(i) * dim + j]; }
};

// C x C matrix kept Hermitian by construction: mutators write the upper
// triangle and mirror the conjugate, diagonal imaginary parts are dropped.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(int dim = 0) : m_(dim) {}

  int dim() const { return m_.dim; }
  cxd at(int i, int j) const { return m_.at(i, j); }
  void set(int i, int j, cxd v);
  const CMatrix& matrix() const { return m_; }

  // this += weight * v v^H
  void accumulate_outer(std::span<const cxd> v, double weight);
  // this = a * this + b * other
  void blend(double a, const HermitianMatrix& other, double b);
  void scale(double a);
  cxd trace() const;

 private:
  CMatrix m_;
};

// acc + weight * v v^H, Hermitian symmetry enforced exactly.
HermitianMatrix outer_product_accumulate(const HermitianMatrix& acc,
                                         std::span<const cxd> v,
                                         double weight);

// Inverse of (m + eps*I) with eps = loading * max(trace(m)/C, floor),
// computed by Cholesky factorization. Result is exactly Hermitian.
HermitianMatrix regularized_inverse(const HermitianMatrix& m, double loading);

CMatrix matmul(const CMatrix& a, const CMatrix& b);
cxd trace(const CMatrix& m);
CVector matvec(const CMatrix& m, std::span<const cxd> v);

// 1.0 at 1-based position channel, else 0.0.
std::vector<double> one_hot(int channel, int dim);

}  // namespace beamsep
