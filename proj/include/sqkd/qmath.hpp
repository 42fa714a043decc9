#pragma once

// Small-dimension complex linear algebra and entropy primitives.
//
// Everything here is templated on the real scalar type; the `d`-suffixed
// aliases at the bottom are what the rest of the library uses. All
// entropies are in bits.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sqkd/errors.hpp"

namespace sqkd {

template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
struct Tolerance {
  /// State-validity slack (normalization, hermiticity, PSD).
  static constexpr Real state = Real(1e-9);
  /// Slack when clamping a probability or entropy argument into [0, 1].
  static constexpr Real clamp = Real(1e-12);
};

/// Unit vector in a `dim`-dimensional Hilbert space.
template <typename Real>
class PureState {
 public:
  using Vector = CVector<Real>;

  explicit PureState(Vector amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() == 0) throw DimensionError("PureState: empty amplitude vector");
    const Real norm2 = amps_.squaredNorm();
    if (std::abs(norm2 - Real(1)) > Tolerance<Real>::state) {
      throw InvariantError("PureState: squared norm " + std::to_string(double(norm2)) +
                           " differs from 1");
    }
  }

  /// Computational basis vector |k> in dimension dim.
  static PureState basis(Eigen::Index dim, Eigen::Index k) {
    if (k < 0 || k >= dim) throw DimensionError("PureState::basis: index out of range");
    Vector v = Vector::Zero(dim);
    v(k) = Real(1);
    return PureState(std::move(v));
  }

  Eigen::Index dim() const { return amps_.size(); }
  const Vector& amplitudes() const { return amps_; }
  std::complex<Real> operator()(Eigen::Index k) const { return amps_(k); }

  /// <this|other>
  std::complex<Real> inner(const PureState& other) const {
    if (other.dim() != dim()) throw DimensionError("PureState::inner: dimension mismatch");
    return amps_.dot(other.amps_);
  }

  CMatrix<Real> projector() const { return amps_ * amps_.adjoint(); }

 private:
  Vector amps_;
};

/// Hermitian, trace-one, positive semidefinite matrix.
template <typename Real>
class DensityOperator {
 public:
  using Matrix = CMatrix<Real>;

  explicit DensityOperator(Matrix m) : m_(std::move(m)) { validate(); }

  static DensityOperator pure(const PureState<Real>& psi) {
    return DensityOperator(psi.projector());
  }

  static DensityOperator maximally_mixed(Eigen::Index dim) {
    return DensityOperator(Matrix::Identity(dim, dim) / Real(dim));
  }

  static DensityOperator diagonal(std::span<const Real> spectrum) {
    Matrix m = Matrix::Zero(Eigen::Index(spectrum.size()), Eigen::Index(spectrum.size()));
    for (std::size_t i = 0; i < spectrum.size(); ++i) m(Eigen::Index(i), Eigen::Index(i)) = spectrum[i];
    return DensityOperator(std::move(m));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

  /// Eigenvalues in ascending order, not clamped.
  Eigen::Matrix<Real, Eigen::Dynamic, 1> spectrum() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("DensityOperator: eigendecomposition failed");
    return es.eigenvalues();
  }

 private:
  void validate() const {
    if (m_.rows() == 0 || m_.rows() != m_.cols()) {
      throw DimensionError("DensityOperator: matrix must be square and non-empty");
    }
    const Real tol = Tolerance<Real>::state;
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tol) {
      throw InvariantError("DensityOperator: matrix is not Hermitian");
    }
    const std::complex<Real> tr = m_.trace();
    if (std::abs(tr.real() - Real(1)) > tol || std::abs(tr.imag()) > tol) {
      throw InvariantError("DensityOperator: trace " + std::to_string(double(tr.real())) +
                           " differs from 1");
    }
    if (spectrum().minCoeff() < -tol) {
      throw InvariantError("DensityOperator: negative eigenvalue beyond tolerance");
    }
  }

  Matrix m_;
};

/// Normalized probability vector.
template <typename Real>
class ProbDist {
 public:
  explicit ProbDist(std::vector<Real> weights) : w_(std::move(weights)) {
    const Real tol = Tolerance<Real>::state;
    Real sum = 0;
    for (Real x : w_) {
      if (!(x >= Real(0) && x <= Real(1))) throw InvariantError("ProbDist: weight outside [0, 1]");
      sum += x;
    }
    if (std::abs(sum - Real(1)) > tol) throw InvariantError("ProbDist: weights do not sum to 1");
  }

  std::span<const Real> weights() const { return w_; }
  std::size_t size() const { return w_.size(); }

 private:
  std::vector<Real> w_;
};

namespace detail {

template <typename Real>
Real xlog2x(Real x) {
  return x > Real(0) ? x * std::log2(x) : Real(0);
}

inline std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace detail

/// h(x) = -x log2 x - (1-x) log2 (1-x), with 0 log 0 = 0.
template <typename Real>
Real binary_entropy(Real x) {
  const Real slack = Tolerance<Real>::clamp;
  if (!(x >= -slack && x <= Real(1) + slack)) {
    throw DomainError("binary_entropy: argument " + std::to_string(double(x)) + " outside [0, 1]");
  }
  x = std::clamp(x, Real(0), Real(1));
  return -detail::xlog2x(x) - detail::xlog2x(Real(1) - x);
}

template <typename Real>
Real shannon_entropy(const ProbDist<Real>& dist) {
  Real h = 0;
  for (Real p : dist.weights()) h -= detail::xlog2x(p);
  return h;
}

/// Shannon entropy of the spectrum. Eigenvalues in [-1e-9, 0) count as zero,
/// round-off above 1 as one.
template <typename Real>
Real von_neumann_entropy(const DensityOperator<Real>& rho) {
  const auto ev = rho.spectrum();
  Real s = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const Real lam = ev(i);
    if (lam < -Tolerance<Real>::state) {
      throw InvariantError("von_neumann_entropy: eigenvalue below -1e-9");
    }
    s -= detail::xlog2x(std::clamp(lam, Real(0), Real(1)));
  }
  return std::max(s, Real(0));
}

/// Kronecker product a (x) b.
template <typename Real>
CMatrix<Real> kron(const CMatrix<Real>& a, const CMatrix<Real>& b) {
  CMatrix<Real> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <typename Real>
DensityOperator<Real> tensor(const DensityOperator<Real>& a, const DensityOperator<Real>& b) {
  return DensityOperator<Real>(kron<Real>(a.matrix(), b.matrix()));
}

/// Reduced state on the subsystems listed in `keep` (ascending order is
/// used for the output regardless of the order given). Subsystem 0 is the
/// most significant factor of the row index.
template <typename Real>
DensityOperator<Real> partial_trace(const DensityOperator<Real>& rho,
                                    std::span<const std::size_t> dims,
                                    std::span<const std::size_t> keep) {
  const std::size_t n = dims.size();
  if (detail::product(dims) != std::size_t(rho.dim())) {
    throw DimensionError("partial_trace: subsystem dimensions do not match operator size");
  }
  std::vector<bool> kept(n, false);
  for (std::size_t k : keep) {
    if (k >= n) throw DimensionError("partial_trace: subsystem index out of range");
    kept[k] = true;
  }

  // Row-major strides of the full index.
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t i = n; i-- > 1;) stride[i - 1] = stride[i] * dims[i];

  std::vector<std::size_t> kept_dims, traced_dims, kept_stride, traced_stride;
  for (std::size_t i = 0; i < n; ++i) {
    (kept[i] ? kept_dims : traced_dims).push_back(dims[i]);
    (kept[i] ? kept_stride : traced_stride).push_back(stride[i]);
  }
  const std::size_t out_dim = detail::product(kept_dims);
  const std::size_t env_dim = detail::product(traced_dims);

  // Map a flat index over a subset of subsystems to its offset in the full index.
  auto offsets = [](std::span<const std::size_t> sub_dims, std::span<const std::size_t> sub_stride) {
    std::vector<std::size_t> off(detail::product(sub_dims), 0);
    for (std::size_t flat = 0; flat < off.size(); ++flat) {
      std::size_t rem = flat, o = 0;
      for (std::size_t i = sub_dims.size(); i-- > 0;) {
        o += (rem % sub_dims[i]) * sub_stride[i];
        rem /= sub_dims[i];
      }
      off[flat] = o;
    }
    return off;
  };
  const auto kept_off = offsets(kept_dims, kept_stride);
  const auto env_off = offsets(traced_dims, traced_stride);

  const auto& m = rho.matrix();
  CMatrix<Real> out = CMatrix<Real>::Zero(Eigen::Index(out_dim), Eigen::Index(out_dim));
  for (std::size_t r = 0; r < out_dim; ++r)
    for (std::size_t c = 0; c < out_dim; ++c) {
      std::complex<Real> acc = 0;
      for (std::size_t e = 0; e < env_dim; ++e)
        acc += m(Eigen::Index(kept_off[r] + env_off[e]), Eigen::Index(kept_off[c] + env_off[e]));
      out(Eigen::Index(r), Eigen::Index(c)) = acc;
    }
  return DensityOperator<Real>(std::move(out));
}

template <typename Real>
DensityOperator<Real> partial_trace(const DensityOperator<Real>& rho,
                                    std::initializer_list<std::size_t> dims,
                                    std::initializer_list<std::size_t> keep) {
  return partial_trace(rho, std::span<const std::size_t>(dims.begin(), dims.size()),
                       std::span<const std::size_t>(keep.begin(), keep.size()));
}

/// tr(projector * rho) for a Hermitian idempotent projector.
template <typename Real>
Real born_probability(const DensityOperator<Real>& rho, const CMatrix<Real>& projector) {
  if (projector.rows() != rho.dim() || projector.cols() != rho.dim()) {
    throw DimensionError("born_probability: projector and state dimensions differ");
  }
  const Real tol = Tolerance<Real>::state;
  if ((projector - projector.adjoint()).cwiseAbs().maxCoeff() > tol ||
      (projector * projector - projector).cwiseAbs().maxCoeff() > tol) {
    throw InvariantError("born_probability: operator is not a Hermitian projector");
  }
  const Real p = (projector * rho.matrix()).trace().real();
  const Real slack = Tolerance<Real>::clamp;
  if (p < -slack || p > Real(1) + slack) {
    throw InvariantError("born_probability: probability outside [0, 1]");
  }
  return std::clamp(p, Real(0), Real(1));
}

template <typename Real>
Real born_probability(const DensityOperator<Real>& rho, const PureState<Real>& outcome) {
  return born_probability(rho, outcome.projector());
}

/// Named qubit states.
template <typename Real>
struct Qubit {
  static PureState<Real> zero() { return PureState<Real>::basis(2, 0); }
  static PureState<Real> one() { return PureState<Real>::basis(2, 1); }
  static PureState<Real> plus() {
    CVector<Real> v(2);
    v << Real(M_SQRT1_2), Real(M_SQRT1_2);
    return PureState<Real>(v);
  }
  static PureState<Real> minus() {
    CVector<Real> v(2);
    v << Real(M_SQRT1_2), -Real(M_SQRT1_2);
    return PureState<Real>(v);
  }
};

using CVectord = CVector<double>;
using CMatrixd = CMatrix<double>;
using PureStated = PureState<double>;
using DensityOperatord = DensityOperator<double>;
using ProbDistd = ProbDist<double>;
using Qubitd = Qubit<double>;

}  // namespace sqkd
