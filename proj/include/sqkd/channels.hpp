#pragma once

// Eve's restricted attack (b, U) and the depolarizing reverse channel.
//
// Hilbert space ordering for the reverse probe is transit (x) Eve, with the
// transit qubit as the most significant factor: |t, k> has flat index t*d + k.
// Eve's ancilla starts in |0>_E, so only the columns U|0,0> and U|1,0> matter.
//
//   U|0,0> = |0,e00> + |1,e01>
//   U|1,0> = |0,e10> + |1,e11>

#include <cmath>
#include <string>

#include "sqkd/qmath.hpp"

namespace sqkd {

/// Forward substitution |+> -> |e(b)> = alpha|0> + beta|1>.
template <typename Real>
class ForwardAttack {
 public:
  explicit ForwardAttack(Real b) : b_(b) {
    if (!(std::abs(b) < Real(0.5))) {
      throw DomainError("ForwardAttack: b = " + std::to_string(double(b)) + " outside (-1/2, 1/2)");
    }
  }

  Real b() const { return b_; }
  Real alpha() const { return std::sqrt(Real(0.5) + b_); }
  Real beta() const { return std::sqrt(Real(0.5) - b_); }

 private:
  Real b_;
};

template <typename Real>
PureState<Real> e_state(const ForwardAttack<Real>& fwd) {
  CVector<Real> v(2);
  v << fwd.alpha(), fwd.beta();
  return PureState<Real>(std::move(v));
}

template <typename Real>
PureState<Real> e_perp_state(const ForwardAttack<Real>& fwd) {
  CVector<Real> v(2);
  v << fwd.beta(), -fwd.alpha();
  return PureState<Real>(std::move(v));
}

/// The four (generally unnormalized) Eve vectors of a reverse probe.
template <typename Real>
class ReverseAttack {
 public:
  using Vector = CVector<Real>;
  static constexpr Eigen::Index default_max_eve_dim = 4;

  ReverseAttack(Vector e00, Vector e01, Vector e10, Vector e11,
                Eigen::Index max_eve_dim = default_max_eve_dim)
      : e00_(std::move(e00)), e01_(std::move(e01)), e10_(std::move(e10)), e11_(std::move(e11)) {
    const Eigen::Index d = e00_.size();
    if (d == 0 || e01_.size() != d || e10_.size() != d || e11_.size() != d) {
      throw DimensionError("ReverseAttack: Eve vectors must share a positive dimension");
    }
    if (d > max_eve_dim) {
      throw DimensionError("ReverseAttack: Eve dimension " + std::to_string(d) + " exceeds cap " +
                           std::to_string(max_eve_dim));
    }
    const Real tol = Tolerance<Real>::state;
    const auto r = residuals();
    if (r.orthogonality > tol || r.norm0 > tol || r.norm1 > tol) {
      throw InvariantError("ReverseAttack: vectors are not the image of a unitary");
    }
  }

  struct Residuals {
    Real orthogonality;  // |<e00|e10> + <e01|e11>|
    Real norm0;          // |<e00|e00> + <e01|e01> - 1|
    Real norm1;          // |<e10|e10> + <e11|e11> - 1|
  };

  Residuals residuals() const {
    return {std::abs(e00_.dot(e10_) + e01_.dot(e11_)),
            std::abs(e00_.squaredNorm() + e01_.squaredNorm() - Real(1)),
            std::abs(e10_.squaredNorm() + e11_.squaredNorm() - Real(1))};
  }

  Eigen::Index eve_dim() const { return e00_.size(); }
  const Vector& e00() const { return e00_; }
  const Vector& e01() const { return e01_; }
  const Vector& e10() const { return e10_; }
  const Vector& e11() const { return e11_; }

  /// Isometry |t> -> U|t,0>, a (2d x 2) matrix.
  CMatrix<Real> isometry() const {
    const Eigen::Index d = eve_dim();
    CMatrix<Real> v(2 * d, 2);
    v.col(0) << e00_, e01_;
    v.col(1) << e10_, e11_;
    return v;
  }

  /// |<e10|e10> - <e01|e01>|; zero for attacks with the symmetric error property.
  Real asymmetry() const { return std::abs(e10_.squaredNorm() - e01_.squaredNorm()); }

 private:
  Vector e00_, e01_, e10_, e11_;
};

/// The no-interaction probe on a d-dimensional ancilla.
template <typename Real>
ReverseAttack<Real> identity_attack(Eigen::Index eve_dim = 1) {
  using V = CVector<Real>;
  const V zero = V::Zero(eve_dim);
  V first = zero;
  first(0) = Real(1);
  return ReverseAttack<Real>(first, zero, zero, first, std::max(eve_dim, ReverseAttack<Real>::default_max_eve_dim));
}

template <typename Real>
ReverseAttack<Real> reverse_attack_from_unitary(const CMatrix<Real>& u, Eigen::Index eve_dim,
                                                Eigen::Index max_eve_dim = ReverseAttack<Real>::default_max_eve_dim) {
  const Eigen::Index d = eve_dim;
  if (d <= 0 || u.rows() != 2 * d || u.cols() != 2 * d) {
    throw DimensionError("reverse_attack_from_unitary: expected a 2d x 2d matrix");
  }
  const auto id = CMatrix<Real>::Identity(2 * d, 2 * d);
  if ((u.adjoint() * u - id).cwiseAbs().maxCoeff() > Tolerance<Real>::state) {
    throw InvariantError("reverse_attack_from_unitary: matrix is not unitary");
  }
  return ReverseAttack<Real>(u.col(0).head(d), u.col(0).tail(d), u.col(d).head(d), u.col(d).tail(d),
                             max_eve_dim);
}

/// Transit-qubit channel induced by the probe: rho -> tr_E(V rho V^dagger).
template <typename Real>
DensityOperator<Real> induced_channel(const ReverseAttack<Real>& atk, const DensityOperator<Real>& rho) {
  if (rho.dim() != 2) throw DimensionError("induced_channel: input must be a qubit state");
  const CMatrix<Real> v = atk.isometry();
  const DensityOperator<Real> joint(v * rho.matrix() * v.adjoint());
  return partial_trace(joint, {2, std::size_t(atk.eve_dim())}, {0});
}

/// xi_p(rho) = (1 - p) rho + (p/2) I
template <typename Real>
class DepolarizingChannel {
 public:
  explicit DepolarizingChannel(Real p) : p_(p) {
    if (!(p >= Real(0) && p <= Real(1))) {
      throw DomainError("DepolarizingChannel: p = " + std::to_string(double(p)) + " outside [0, 1]");
    }
  }
  Real p() const { return p_; }

 private:
  Real p_;
};

template <typename Real>
DensityOperator<Real> apply_depolarizing(const DensityOperator<Real>& rho, const DepolarizingChannel<Real>& ch) {
  if (rho.dim() != 2) throw DimensionError("apply_depolarizing: input must be a qubit state");
  const Real p = ch.p();
  return DensityOperator<Real>((Real(1) - p) * rho.matrix() +
                               (p / Real(2)) * CMatrix<Real>::Identity(2, 2));
}

/// Stinespring dilation of the depolarizing channel on a 4-dim ancilla.
///
/// Branches, in ancilla order: identity with weight sqrt(1 - 3p/4), then
/// X, Z and XZ each with weight sqrt(p/4).
template <typename Real>
ReverseAttack<Real> depolarizing_dilation(Real p) {
  const DepolarizingChannel<Real> ch(p);
  const Real a = std::sqrt(std::max(Real(0), Real(1) - Real(3) * ch.p() / Real(4)));
  const Real c = std::sqrt(ch.p() / Real(4));
  CVector<Real> e00(4), e01(4), e10(4), e11(4);
  // K_k|0> = I|0>, X|0> = |1>, Z|0> = |0>, XZ|0> = |1>
  e00 << a, 0, c, 0;
  e01 << 0, c, 0, c;
  // K_k|1> = I|1>, X|1> = |0>, Z|1> = -|1>, XZ|1> = -|0>
  e10 << 0, c, 0, -c;
  e11 << a, 0, -c, 0;
  return ReverseAttack<Real>(e00, e01, e10, e11);
}

/// Eve's states conditioned on the transit basis after the CTRL branch.
template <typename Real>
struct DerivedVectors {
  CVector<Real> f_p0, f_p1, f_m0, f_m1;  // U|+,0> = |+,f_p0> + |-,f_p1>, U|-,0> likewise
  CVector<Real> g_plus, g_minus;         // U|e,0> = |+,g_plus> + |-,g_minus>
  CVector<Real> l1, l2;                  // l1 = g_plus - g_minus, l2 = e00 - e01
};

template <typename Real>
DerivedVectors<Real> derive_vectors(const ForwardAttack<Real>& fwd, const ReverseAttack<Real>& atk) {
  const auto& e00 = atk.e00();
  const auto& e01 = atk.e01();
  const auto& e10 = atk.e10();
  const auto& e11 = atk.e11();
  const Real s = Real(M_SQRT1_2);
  const Real a = fwd.alpha() * s;
  const Real b = fwd.beta() * s;

  DerivedVectors<Real> out;
  out.f_p0 = Real(0.5) * (e00 + e01 + e10 + e11);
  out.f_p1 = Real(0.5) * (e00 - e01 + e10 - e11);
  out.f_m0 = Real(0.5) * (e00 + e01 - e10 - e11);
  out.f_m1 = Real(0.5) * (e00 - e01 - e10 + e11);
  out.g_plus = a * e00 + a * e01 + b * e10 + b * e11;
  out.g_minus = a * e00 - a * e01 + b * e10 - b * e11;
  out.l1 = out.g_plus - out.g_minus;
  out.l2 = e00 - e01;
  return out;
}

using ForwardAttackd = ForwardAttack<double>;
using ReverseAttackd = ReverseAttack<double>;
using DepolarizingChanneld = DepolarizingChannel<double>;
using DerivedVectorsd = DerivedVectors<double>;

}  // namespace sqkd
