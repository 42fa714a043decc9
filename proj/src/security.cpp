#include "sqkd/security.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sqkd {

namespace {

constexpr double kDegenerateK = 1e-12;
constexpr double kNormTol = 1e-10;

double h(double x) { return binary_entropy(x); }

double clamp_unit(double x, const char* what) {
  if (x < -Tolerance<double>::clamp || x > 1.0 + Tolerance<double>::clamp) {
    throw InvariantError(std::string(what) + " outside [0, 1]");
  }
  return std::clamp(x, 0.0, 1.0);
}

void check_dep_domain(double b, double p) {
  if (!(std::abs(b) < 0.5)) throw DomainError("b = " + std::to_string(b) + " outside (-1/2, 1/2)");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p = " + std::to_string(p) + " outside [0, 1]");
}

CMatrixd outer(const CVectord& v) { return v * v.adjoint(); }

}  // namespace

JointDistribution::JointDistribution(double p00, double p01, double p10, double p11) {
  p_ << p00, p01, p10, p11;
  if ((p_.array() < 0.0).any()) throw InvariantError("JointDistribution: negative entry");
  if (std::abs(p_.sum() - 1.0) > kNormTol) throw InvariantError("JointDistribution: entries do not sum to 1");
}

QuadQ q_from_attack(const ForwardAttackd& fwd, const ReverseAttackd& atk) {
  const auto v = derive_vectors(fwd, atk);
  QuadQ q;
  q.q00 = 0.25 * (1.0 - 2.0 * v.g_plus.dot(v.g_minus).real());
  q.q01 = 0.5 * atk.e01().squaredNorm();
  q.q10 = 0.5 * v.g_minus.squaredNorm();
  q.q11 = 0.25 * (1.0 - 2.0 * atk.e00().dot(atk.e01()).real());
  return q;
}

JointDistribution joint_from_q(const QuadQ& q) {
  const double K = q.K();
  if (!(K > kDegenerateK)) throw DegenerateChannelError("joint_from_q: K = " + std::to_string(K));
  // Round-off can leave a q entry a hair below zero.
  auto nn = [](double x) { return std::max(x, 0.0); };
  return JointDistribution(nn(q.q00) / K, nn(q.q01) / K, nn(q.q10) / K, nn(q.q11) / K);
}

Observables observables_from_attack(const ForwardAttackd& fwd, const ReverseAttackd& atk) {
  const auto v = derive_vectors(fwd, atk);
  const auto ctrl = induced_channel(atk, DensityOperatord::pure(e_state(fwd)));
  Observables obs;
  obs.e_z = clamp_unit(atk.e01().squaredNorm(), "e_Z");
  obs.e_x = clamp_unit(v.g_minus.squaredNorm(), "e_X");
  obs.p_0_given_0 = born_probability(ctrl, Qubitd::one());
  obs.p_1_given_0 = obs.e_x;
  obs.q11 = q_from_attack(fwd, atk).q11;
  return obs;
}

double bound_B_raw(const ForwardAttackd& fwd, const Observables& obs) {
  const double a = fwd.alpha();
  const double b = fwd.beta();
  const double r2 = std::sqrt(2.0);
  const double ez = obs.e_z;
  const double q11 = obs.q11;

  // Re<e00|e01>, <e01|e01> and Re<e01|e11> are fixed by the statistics; Re<e00|e11>
  // is bounded below with Cauchy-Schwarz on the two unobservable overlaps.
  const double t_e00_e01 = r2 * a / 2.0 - 2.0 * r2 * a * q11;
  const double t_e01_e01 = r2 * a * ez;
  const double t_e01_e11 = r2 / (2.0 * a) * (obs.p_0_given_0 - (a * a - b * b) * ez - b * b);
  const double t_e00_e11 = r2 / a *
                           (0.5 - obs.p_1_given_0 - a * a * (0.5 - 2.0 * q11) - a * b * ez -
                            b * b * std::sqrt(std::max(0.0, ez * (1.0 - ez))));
  return t_e00_e01 - t_e01_e01 - t_e01_e11 + t_e00_e11;
}

double bound_B(const ForwardAttackd& fwd, const Observables& obs) {
  return std::max(0.0, bound_B_raw(fwd, obs));
}

double lambda_from(double q00, double q11, double B) {
  const double denom = 4.0 * (q00 + q11);
  if (!(denom > kDegenerateK)) throw DegenerateChannelError("lambda_from: q00 + q11 vanishes");
  if (B < 0.0) throw DomainError("lambda_from: B must be non-negative");
  const double lam = 0.5 + std::sqrt(4.0 * (q00 - q11) * (q00 - q11) + B * B) / denom;
  if (lam > 1.0 + Tolerance<double>::clamp) {
    throw InvariantError("lambda_from: lambda = " + std::to_string(lam) + " exceeds 1");
  }
  return std::min(lam, 1.0);
}

KeyRateReport key_rate_lower(const JointDistribution& P, double lambda) {
  if (!(lambda >= 0.5 - Tolerance<double>::clamp && lambda <= 1.0 + Tolerance<double>::clamp)) {
    throw DomainError("key_rate_lower: lambda outside [1/2, 1]");
  }
  KeyRateReport rep;
  rep.B = std::numeric_limits<double>::quiet_NaN();
  rep.lambda = std::clamp(lambda, 0.5, 1.0);
  rep.k1 = P.k1();
  rep.k2 = P.k2();
  const ProbDistd joint({P(0, 0), P(0, 1), P(1, 0), P(1, 1)});
  rep.h_b_given_a = shannon_entropy(joint) - h(P.alice_zero());
  rep.r_lower = h(P.alice_zero()) - h(std::min(rep.k1, 1.0)) - rep.k2 - rep.k1 * h(rep.lambda);
  return rep;
}

KeyRateReport bound_chain(const ForwardAttackd& fwd, const QuadQ& q, const Observables& obs) {
  const double B = bound_B(fwd, obs);
  KeyRateReport rep = key_rate_lower(joint_from_q(q), lambda_from(q.q00, q.q11, B));
  rep.B = B;
  return rep;
}

ExactAttackState exact_attack_state(const ForwardAttackd& fwd, const ReverseAttackd& atk) {
  const auto v = derive_vectors(fwd, atk);
  const Eigen::Index d = atk.eve_dim();
  const std::size_t ud = std::size_t(d);

  // Branch blocks indexed by (Alice bit, Bob bit).
  CMatrixd blocks[2][2] = {{0.25 * outer(v.l1), 0.5 * outer(atk.e01())},
                           {0.5 * outer(v.g_minus), 0.25 * outer(v.l2)}};
  double K = 0;
  for (auto& row : blocks)
    for (auto& blk : row) K += blk.trace().real();
  if (!(K > kDegenerateK)) throw DegenerateChannelError("exact_attack_state: K = " + std::to_string(K));

  CMatrixd abe = CMatrixd::Zero(4 * d, 4 * d);
  CMatrixd abme = CMatrixd::Zero(8 * d, 8 * d);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const Eigen::Index ab = 2 * a + b;
      const Eigen::Index abm = 2 * ab + (a ^ b);
      abe.block(ab * d, ab * d, d, d) = blocks[a][b] / K;
      abme.block(abm * d, abm * d, d, d) = blocks[a][b] / K;
    }

  DensityOperatord rho_abe(std::move(abe));
  DensityOperatord rho_abme(std::move(abme));
  auto rho_be = partial_trace(rho_abe, {2, 2, ud}, {1, 2});
  auto rho_e = partial_trace(rho_be, {2, ud}, {1});
  auto rho_bme = partial_trace(rho_abme, {2, 2, 2, ud}, {1, 2, 3});
  auto rho_me = partial_trace(rho_bme, {2, 2, ud}, {1, 2});
  return {std::move(rho_abe), std::move(rho_be), std::move(rho_e), std::move(rho_bme), std::move(rho_me), d};
}

ExactEntropies exact_entropies(const ForwardAttackd& fwd, const ReverseAttackd& atk) {
  const auto st = exact_attack_state(fwd, atk);
  const auto P = joint_from_q(q_from_attack(fwd, atk));
  ExactEntropies out;
  out.s_b_given_e = von_neumann_entropy(st.rho_BE) - von_neumann_entropy(st.rho_E);
  out.s_b_given_me = von_neumann_entropy(st.rho_BME) - von_neumann_entropy(st.rho_ME);
  const ProbDistd joint({P(0, 0), P(0, 1), P(1, 0), P(1, 1)});
  out.h_b_given_a = shannon_entropy(joint) - h(P.alice_zero());
  out.key_rate = out.s_b_given_e - out.h_b_given_a;
  return out;
}

double exact_key_rate(const ForwardAttackd& fwd, const ReverseAttackd& atk) {
  return exact_entropies(fwd, atk).key_rate;
}

DensityOperatord eve_agree_state(const DerivedVectorsd& v) {
  const double norm = v.l1.squaredNorm() + v.l2.squaredNorm();
  if (!(norm > kDegenerateK)) throw DegenerateChannelError("eve_agree_state: l1 and l2 both vanish");
  return DensityOperatord((outer(v.l1) + outer(v.l2)) / norm);
}

DepStatistics dep_statistics(double b, double p) {
  check_dep_domain(b, p);
  const double s = std::sqrt(1.0 - 4.0 * b * b);

  QuadQ q;
  q.q00 = 0.25 - b / 2.0 + p * b / 2.0;
  q.q01 = p / 4.0;
  q.q10 = 0.25 - (1.0 - p) * s / 4.0;
  q.q11 = 0.25;

  const double denom = 3.0 - 2.0 * b + 2.0 * p * b + p - (1.0 - p) * s;
  if (!(denom > 4.0 * kDegenerateK)) throw DegenerateChannelError("dep_statistics: K vanishes");
  JointDistribution joint((1.0 - 2.0 * b + 2.0 * p * b) / denom, p / denom, (1.0 - (1.0 - p) * s) / denom,
                          1.0 / denom);

  Observables obs;
  const double r = std::sqrt(0.25 - b * b);
  obs.e_z = p / 2.0;
  obs.p_0_given_0 = 0.5 - b + p * b;
  obs.p_1_given_0 = 0.5 - r + p * r;
  obs.e_x = obs.p_1_given_0;
  obs.q11 = q.q11;
  return {q, joint, obs};
}

KeyRateReport dep_key_rate(double b, double p) {
  const auto st = dep_statistics(b, p);
  return bound_chain(ForwardAttackd(b), st.q, st.obs);
}

ClosedFormRate f_bp_detail(double b, double p) {
  if (!(std::abs(b) < 0.5)) throw DomainError("f_bp: b = " + std::to_string(b) + " outside (-1/2, 1/2)");
  if (!(p >= 0.0 && p <= 0.5)) throw DomainError("f_bp: p = " + std::to_string(p) + " outside [0, 1/2]");

  const double s = std::sqrt(1.0 - 4.0 * b * b);
  ClosedFormRate out;
  out.K_prime = 3.0 + p + (p - 1.0) * s + 2.0 * b * (p - 1.0);

  const double raw_B = 2.0 / std::sqrt(1.0 + 2.0 * b) *
                           (s * (0.5 - 0.75 * p) - 0.5 * (0.5 - b) * std::sqrt(2.0 * p - p * p)) -
                       p / 2.0 * std::sqrt(1.0 - 2.0 * p);
  out.B = std::max(0.0, raw_B);

  const double agree = 2.0 - 2.0 * b + 2.0 * p * b;  // 4 (q00 + q11)
  const double lam = 0.5 + std::sqrt((p * b - b) * (p * b - b) + out.B * out.B) / agree;
  out.lambda = std::clamp(lam, 0.5, 1.0);

  const double Kp = out.K_prime;
  out.value = h((1.0 - 2.0 * b + 2.0 * p * b + p) / Kp) - h(agree / Kp) - (1.0 + p - (1.0 - p) * s) / Kp -
              agree / Kp * h(out.lambda);
  return out;
}

double f_bp(double b, double p) { return f_bp_detail(b, p).value; }

double closed_form_gap(double b, double p) { return f_bp(b, p) - dep_key_rate(b, p).r_lower; }

ThresholdResult first_nonpositive(const std::function<double(double)>& fn, double lo, double hi, double step,
                                  double tol) {
  if (!(tol > 0.0) || !(step > 0.0) || !(hi > lo)) throw DomainError("first_nonpositive: bad search interval");
  ThresholdResult res;
  if (!(fn(lo) > 0.0)) return res;

  const auto steps = int(std::ceil((hi - lo) / step - 1e-9));
  auto at = [&](int k) { return std::min(lo + k * step, hi); };
  int first = -1;
  bool positive = true;
  for (int k = 1; k <= steps; ++k) {
    const bool pos = fn(at(k)) > 0.0;
    if (pos != positive) {
      ++res.sign_changes;
      if (first < 0) first = k;
    }
    positive = pos;
  }
  if (first < 0) return res;

  double a = at(first - 1), b = at(first);
  while (b - a > tol) {
    const double mid = 0.5 * (a + b);
    (fn(mid) > 0.0 ? a : b) = mid;
  }
  res.p_star = 0.5 * (a + b);
  return res;
}

ThresholdResult threshold_p(double b, double tol) {
  if (!(tol > 0.0)) throw DomainError("threshold_p: tol must be positive");
  ForwardAttackd{b};
  return first_nonpositive([b](double p) { return f_bp(b, p); }, 0.0, 0.5, 0.005, tol);
}

std::vector<SweepRow> sweep(const std::vector<double>& b_values, const std::vector<double>& p_grid) {
  std::vector<SweepRow> rows;
  rows.reserve(b_values.size() * p_grid.size());
  for (double b : b_values)
    for (double p : p_grid) {
      SweepRow row{b, p, std::numeric_limits<double>::quiet_NaN(), false};
      try {
        row.r_lower = f_bp(b, p);
        row.in_domain = true;
      } catch (const DomainError&) {
      }
      rows.push_back(row);
    }
  return rows;
}

}  // namespace sqkd
