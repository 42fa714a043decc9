#pragma once

// Random reverse probes for property tests.

#include <random>

#include "sqkd/channels.hpp"

namespace sqkd {

/// Haar-distributed n x n unitary (QR of a complex Ginibre matrix with the
/// phases of R's diagonal divided out).
template <typename Real, typename Rng>
CMatrix<Real> haar_unitary(Eigen::Index n, Rng& rng) {
  std::normal_distribution<Real> gauss(Real(0), Real(M_SQRT1_2));
  CMatrix<Real> z(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = {gauss(rng), gauss(rng)};
  Eigen::HouseholderQR<CMatrix<Real>> qr(z);
  CMatrix<Real> q = qr.householderQ();
  const CMatrix<Real> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Real mag = std::abs(r(j, j));
    if (mag > Real(0)) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

template <typename Real, typename Rng>
ReverseAttack<Real> random_attack(Eigen::Index eve_dim, Rng& rng) {
  return reverse_attack_from_unitary<Real>(haar_unitary<Real>(2 * eve_dim, rng), eve_dim,
                                           std::max(eve_dim, ReverseAttack<Real>::default_max_eve_dim));
}

/// A unitary whose probe satisfies <e10|e10> = <e01|e01>.
///
/// U|0,0> is taken from a Haar unitary. U|1,0> is then moved along a great
/// circle inside the orthogonal complement of U|0,0>, from a Haar-random
/// start towards an extremal vector of the |0>_T-weight, until its
/// |0>_T-weight equals the |1>_T-weight of U|0,0>. Requires eve_dim >= 2 so
/// that the complement always contains weights 0 and 1.
template <typename Real, typename Rng>
CMatrix<Real> random_symmetric_unitary(Eigen::Index eve_dim, Rng& rng) {
  const Eigen::Index d = eve_dim;
  if (d < 2) throw DimensionError("random_symmetric_unitary: needs eve_dim >= 2");
  const Eigen::Index n = 2 * d;
  const CMatrix<Real> haar = haar_unitary<Real>(n, rng);
  const CVector<Real> v0 = haar.col(0);
  const Real target = v0.tail(d).squaredNorm();

  // Orthonormal basis of the complement of v0 and the |0>_T-weight compressed onto it.
  const CMatrix<Real> basis = haar.rightCols(n - 1);
  CMatrix<Real> weight = basis.topRows(d).adjoint() * basis.topRows(d);
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(weight);
  if (es.info() != Eigen::Success) throw NumericError("random_symmetric_unitary: eigensolver failed");

  auto weight0 = [d](const CVector<Real>& v) { return v.head(d).squaredNorm(); };
  const CVector<Real> start = haar.col(d);
  const bool go_down = weight0(start) > target;
  CVector<Real> towards = basis * es.eigenvectors().col(go_down ? 0 : n - 2);

  // Rotate `towards` so <start|towards> is real and non-negative, then split off start.
  const std::complex<Real> overlap = start.dot(towards);
  if (std::abs(overlap) > Real(0)) towards *= std::conj(overlap) / std::abs(overlap);
  const Real c = start.dot(towards).real();
  CVector<Real> perp = towards - c * start;
  const Real perp_norm = perp.norm();

  CVector<Real> v1 = start;
  if (perp_norm > Real(1e-14)) {
    perp /= perp_norm;
    const Real phi = std::atan2(perp_norm, c);
    auto at = [&](Real theta) -> CVector<Real> { return std::cos(theta) * start + std::sin(theta) * perp; };
    Real lo = 0, hi = phi;
    for (int it = 0; it < 200 && hi - lo > Real(1e-15); ++it) {
      const Real mid = Real(0.5) * (lo + hi);
      const bool past = go_down ? weight0(at(mid)) < target : weight0(at(mid)) > target;
      (past ? hi : lo) = mid;
    }
    v1 = at(Real(0.5) * (lo + hi));
  }

  // Complete {v0, v1} to a unitary with v0 at |0,0> and v1 at |1,0>.
  CMatrix<Real> seed(n, n + 2);
  seed << v0, v1, haar;
  Eigen::HouseholderQR<CMatrix<Real>> qr(seed);
  const CMatrix<Real> q = qr.householderQ();
  CMatrix<Real> u(n, n);
  Eigen::Index next = 2;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == 0)
      u.col(j) = v0;
    else if (j == d)
      u.col(j) = v1;
    else
      u.col(j) = q.col(next++);
  }
  return u;
}

template <typename Real, typename Rng>
ReverseAttack<Real> random_symmetric_attack(Eigen::Index eve_dim, Rng& rng) {
  auto atk = reverse_attack_from_unitary<Real>(random_symmetric_unitary<Real>(eve_dim, rng), eve_dim,
                                               std::max(eve_dim, ReverseAttack<Real>::default_max_eve_dim));
  if (atk.asymmetry() >= Real(1e-6)) throw NumericError("random_symmetric_attack: symmetry not reached");
  return atk;
}

}  // namespace sqkd
