#pragma once

// Dense full-space operators built from Kronecker products, independent of
// the sector machinery.

#include <Eigen/Dense>
#include <complex>

#include "ethlab/basis.hpp"

namespace oracle {

using Mat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

inline Mat sz() {
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = -1.0;
  m(2, 2) = 1.0;
  return m;
}
// S^+ on trits t = 0, 1, 2 (S^z = -1, 0, 1)
inline Mat sp() {
  Mat m = Mat::Zero(3, 3);
  m(1, 0) = std::sqrt(2.0);
  m(2, 1) = std::sqrt(2.0);
  return m;
}
inline Mat sm() { return sp().adjoint(); }
inline Mat sx() { return 0.5 * (sp() + sm()); }
inline Mat sy() { return cplx(0, -0.5) * (sp() - sm()); }

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// m acting on `site`; code = sum_j t_j 3^j so site 0 is the fastest index.
inline Mat at(const Mat& m, int site, int L) {
  Mat out = Mat::Identity(1, 1);
  for (int j = L - 1; j >= 0; --j) out = kron(out, j == site ? m : Mat::Identity(3, 3));
  return out;
}

inline Mat hamiltonian(int L, double delta, double lambda, bool periodic = true, double hz1 = 0.0) {
  const int n = static_cast<int>(std::pow(3, L));
  const double mu = delta - 1.0, nu = 2.0 - std::sqrt(2.0 * (1.0 + delta));
  Mat h = Mat::Zero(n, n);
  const int bonds = periodic ? L : L - 1;
  for (int j = 0; j < bonds; ++j) {
    const int k = (j + 1) % L;
    const Mat xx = at(sx(), j, L) * at(sx(), k, L) + at(sy(), j, L) * at(sy(), k, L);
    const Mat zz = at(sz(), j, L) * at(sz(), k, L);
    const Mat ss = xx + zz;
    const Mat zj = at(sz(), j, L);
    h -= xx + delta * zz;
    const Mat cross = xx * zz;
    h += lambda * (ss * ss - mu * (2.0 * zj * zj - zz * zz) - nu * (cross + cross.adjoint()));
  }
  if (!periodic) {
    h += hz1 * at(sz(), 0, L);
  }
  return h;
}

// Columns are the symmetry-adapted states of b in the 3^L product basis.
inline Mat embedding(const ethlab::basis::SymBasis& b) {
  const int L = b.sites();
  Mat v = Mat::Zero(static_cast<Eigen::Index>(std::pow(3, L)), static_cast<Eigen::Index>(b.dim()));
  for (std::size_t i = 0; i < b.dim(); ++i)
    for (const auto& e : b.expansion(i)) v(static_cast<Eigen::Index>(e.code), static_cast<Eigen::Index>(i)) = e.amplitude;
  return v;
}

}  // namespace oracle
