#pragma once

// Asymptotic key-rate machinery for the single-state semi-quantum protocol.
//
// Notation follows the raw-key bits: i is Alice's bit, j is Bob's bit.
// q(i,j) are the unnormalized weights of the four conclusive branches and
// K = sum q(i,j); the physical probability of keeping an iteration is K/2.

#include <functional>
#include <optional>
#include <vector>

#include "sqkd/channels.hpp"

namespace sqkd {

struct QuadQ {
  double q00 = 0, q01 = 0, q10 = 0, q11 = 0;
  double K() const { return q00 + q01 + q10 + q11; }
};

/// P(i, j) over the sifted raw-key bits.
class JointDistribution {
 public:
  /// Entries P(0,0), P(0,1), P(1,0), P(1,1).
  JointDistribution(double p00, double p01, double p10, double p11);

  double operator()(int i, int j) const { return p_(i, j); }
  const Eigen::Matrix2d& matrix() const { return p_; }

  double k1() const { return p_(0, 0) + p_(1, 1); }  // bits agree
  double k2() const { return p_(0, 1) + p_(1, 0); }  // bits differ
  double alice_zero() const { return p_(0, 0) + p_(0, 1); }

 private:
  Eigen::Matrix2d p_;
};

/// Statistics Alice and Bob can estimate from announced data.
struct Observables {
  double e_z = 0;          // SIFT, Z basis, outcome 1
  double e_x = 0;          // CTRL, X basis, outcome -
  double p_0_given_0 = 0;  // CTRL, Z basis, outcome 1
  double p_1_given_0 = 0;  // CTRL, X basis, outcome -  (same event as e_x)
  double q11 = 0;
};

struct KeyRateReport {
  double B = 0;
  double lambda = 0.5;
  double k1 = 0, k2 = 0;
  double h_b_given_a = 0;
  double r_lower = 0;
};

QuadQ q_from_attack(const ForwardAttackd& fwd, const ReverseAttackd& atk);

/// P(i,j) = q(i,j) / K. Throws DegenerateChannelError when K <= 1e-12.
JointDistribution joint_from_q(const QuadQ& q);

Observables observables_from_attack(const ForwardAttackd& fwd, const ReverseAttackd& atk);

/// Observable lower bound on |<l1|l2>|, clamped at zero.
double bound_B(const ForwardAttackd& fwd, const Observables& obs);

/// Unclamped right-hand side of bound_B.
double bound_B_raw(const ForwardAttackd& fwd, const Observables& obs);

/// lambda = 1/2 + sqrt(4 (q00 - q11)^2 + B^2) / (4 (q00 + q11)), clamped to [1/2, 1].
double lambda_from(double q00, double q11, double B);

/// r >= h(P(0,0)+P(0,1)) - h(k1) - k2 - k1 h(lambda). The B field is left NaN.
KeyRateReport key_rate_lower(const JointDistribution& P, double lambda);

/// The full observable chain: joint distribution, B, lambda, key-rate bound.
KeyRateReport bound_chain(const ForwardAttackd& fwd, const QuadQ& q, const Observables& obs);

/// Joint state of Alice's bit, Bob's bit and Eve after one kept iteration.
struct ExactAttackState {
  DensityOperatord rho_ABE;  // A (x) B (x) E
  DensityOperatord rho_BE;
  DensityOperatord rho_E;
  DensityOperatord rho_BME;  // B (x) M (x) E, M = A xor B
  DensityOperatord rho_ME;
  Eigen::Index eve_dim;
};

ExactAttackState exact_attack_state(const ForwardAttackd& fwd, const ReverseAttackd& atk);

struct ExactEntropies {
  double s_b_given_e = 0;   // S(BE) - S(E)
  double s_b_given_me = 0;  // S(BME) - S(ME)
  double h_b_given_a = 0;
  double key_rate = 0;      // s_b_given_e - h_b_given_a
};

ExactEntropies exact_entropies(const ForwardAttackd& fwd, const ReverseAttackd& atk);

/// S(B|E) - H(B|A) evaluated on the exact joint state.
double exact_key_rate(const ForwardAttackd& fwd, const ReverseAttackd& atk);

/// Eve's state on the agreeing-bits branch, (|l1><l1| + |l2><l2|) / (<l1|l1> + <l2|l2>).
DensityOperatord eve_agree_state(const DerivedVectorsd& v);

/// Closed forms for the forward attack b followed by a depolarizing reverse channel.
struct DepStatistics {
  QuadQ q;
  JointDistribution joint;
  Observables obs;
};

DepStatistics dep_statistics(double b, double p);

/// The observable chain applied to dep_statistics(b, p).
KeyRateReport dep_key_rate(double b, double p);

struct ClosedFormRate {
  double K_prime = 0;
  double lambda = 0.5;
  double B = 0;
  double value = 0;
};

/// f(b, p) in closed form. Its B term ends in -(p/2) sqrt(1-2p).
/// Domain: |b| < 1/2, 0 <= p <= 1/2.
ClosedFormRate f_bp_detail(double b, double p);
double f_bp(double b, double p);

/// Difference f_bp(b,p) - dep_key_rate(b,p).r_lower. The closed form
/// ends its B expression in -(p/2) sqrt(1-2p) where the general bound evaluates
/// to -(p/2) sqrt(1+2b); this reports how far apart the two routes land.
double closed_form_gap(double b, double p);

struct ThresholdResult {
  std::optional<double> p_star;
  int sign_changes = 0;  // crossings seen by the coarse scan
  bool multiple_crossings() const { return sign_changes > 1; }
};

/// First x in [lo, hi] where fn drops to zero or below: scan with `step`,
/// then bisect the first bracketing interval down to `tol`. No result when
/// fn(lo) <= 0 or no crossing is seen.
ThresholdResult first_nonpositive(const std::function<double(double)>& fn, double lo, double hi, double step,
                                  double tol);

/// First p in [0, 1/2] where f_bp(b, .) drops to zero or below: coarse scan
/// with step 0.005, then bisection down to `tol`.
ThresholdResult threshold_p(double b, double tol = 1e-5);

struct SweepRow {
  double b = 0, p = 0;
  double r_lower = 0;  // NaN when (b, p) is outside the closed-form domain
  bool in_domain = true;
};

/// Row-major over b_values, then p_grid.
std::vector<SweepRow> sweep(const std::vector<double>& b_values, const std::vector<double>& p_grid);

}  // namespace sqkd
