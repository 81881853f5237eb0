#include "beamsep/hermitian.hpp"

#include <cmath>
#include <string>

namespace beamsep {

void HermitianMatrix::set(int i, int j, cxd v) {
  if (i == j) v.imag(0.0);
  m_.at(i, j) = v;
  m_.at(j, i) = std::conj(v);
}

void HermitianMatrix::accumulate_outer(std::span<const cxd> v, double weight) {
  if (static_cast<int>(v.size()) != dim())
    throw DimensionError("outer-product vector length does not match matrix");
  if (!std::isfinite(weight))
    throw NumericalError("outer-product weight is not finite");
  for (int i = 0; i < dim(); ++i) {
    m_.at(i, i) += cxd(weight * std::norm(v[i]), 0.0);
    for (int j = i + 1; j < dim(); ++j) {
      const cxd upd = weight * v[i] * std::conj(v[j]);
      m_.at(i, j) += upd;
      m_.at(j, i) = std::conj(m_.at(i, j));
    }
  }
}

void HermitianMatrix::blend(double a, const HermitianMatrix& other, double b) {
  if (other.dim() != dim())
    throw DimensionError("blend operands differ in dimension");
  for (std::size_t k = 0; k < m_.e.size(); ++k)
    m_.e[k] = a * m_.e[k] + b * other.m_.e[k];
}

void HermitianMatrix::scale(double a) {
  for (cxd& v : m_.e) v *= a;
}

cxd HermitianMatrix::trace() const { return beamsep::trace(m_); }

HermitianMatrix outer_product_accumulate(const HermitianMatrix& acc,
                                         std::span<const cxd> v,
                                         double weight) {
  HermitianMatrix out = acc;
  out.accumulate_outer(v, weight);
  return out;
}

namespace {

// In-place Cholesky m = L L^H; lower triangle of a holds L on return.
void cholesky(CMatrix& a) {
  const int n = a.dim;
  for (int j = 0; j < n; ++j) {
    double d = a.at(j, j).real();
    for (int k = 0; k < j; ++k) d -= std::norm(a.at(j, k));
    if (!(d > 0.0) || !std::isfinite(d))
      throw NumericalError("Cholesky pivot " + std::to_string(j + 1) +
                           " is not positive");
    const double l = std::sqrt(d);
    a.at(j, j) = cxd(l, 0.0);
    for (int i = j + 1; i < n; ++i) {
      cxd s = a.at(i, j);
      for (int k = 0; k < j; ++k) s -= a.at(i, k) * std::conj(a.at(j, k));
      a.at(i, j) = s / l;
    }
  }
}

}  // namespace

HermitianMatrix regularized_inverse(const HermitianMatrix& m, double loading) {
  const int n = m.dim();
  if (n < 1) throw DimensionError("cannot invert an empty matrix");
  if (loading < 0.0) throw ConfigError("loading must be >= 0");
  for (const cxd& v : m.matrix().e)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalError("matrix has non-finite entries");

  const double mean_diag = m.trace().real() / n;
  const double eps = loading * std::max(mean_diag, kLoadingFloor);

  CMatrix a = m.matrix();
  for (int i = 0; i < n; ++i) a.at(i, i) += eps;
  cholesky(a);

  // Solve L L^H X = I column by column.
  CMatrix inv(n);
  CVector y(static_cast<std::size_t>(n));
  for (int col = 0; col < n; ++col) {
    for (int i = 0; i < n; ++i) {
      cxd s = (i == col) ? cxd(1.0, 0.0) : cxd(0.0, 0.0);
      for (int k = 0; k < i; ++k) s -= a.at(i, k) * y[k];
      y[i] = s / a.at(i, i).real();
    }
    for (int i = n - 1; i >= 0; --i) {
      cxd s = y[i];
      for (int k = i + 1; k < n; ++k) s -= std::conj(a.at(k, i)) * inv.at(k, col);
      inv.at(i, col) = s / a.at(i, i).real();
    }
  }

  // Symmetrize so the result is Hermitian to the last bit.
  HermitianMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      out.set(i, j, 0.5 * (inv.at(i, j) + std::conj(inv.at(j, i))));
  return out;
}

CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  if (a.dim != b.dim) throw DimensionError("matmul operands differ in dimension");
  CMatrix out(a.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int k = 0; k < a.dim; ++k) {
      const cxd aik = a.at(i, k);
      if (aik == cxd(0.0, 0.0)) continue;
      for (int j = 0; j < a.dim; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

cxd trace(const CMatrix& m) {
  cxd t(0.0, 0.0);
  for (int i = 0; i < m.dim; ++i) t += m.at(i, i);
  return t;
}

CVector matvec(const CMatrix& m, std::span<const cxd> v) {
  if (static_cast<int>(v.size()) != m.dim)
    throw DimensionError("matvec vector length does not match matrix");
  CVector out(static_cast<std::size_t>(m.dim), cxd(0.0, 0.0));
  for (int i = 0; i < m.dim; ++i)
    for (int j = 0; j < m.dim; ++j) out[i] += m.at(i, j) * v[j];
  return out;
}

std::vector<double> one_hot(int channel, int dim) {
  if (channel < 1 || channel > dim)
    throw ConfigError("one_hot channel " + std::to_string(channel) +
                      " outside [1, " + std::to_string(dim) + "]");
  std::vector<double> u(static_cast<std::size_t>(dim), 0.0);
  u[channel - 1] = 1.0;
  return u;
}

}  // namespace beamsep
