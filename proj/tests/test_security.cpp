#include <doctest.h>

#include "sqkd/random_attack.hpp"
#include "sqkd/security.hpp"
#include "test_support.hpp"

using namespace sqkd;
using doctest::Approx;

namespace {

// The bound on |<l1|l2>| evaluated on depolarizing statistics, simplified by hand:
//   B = sqrt2 beta (1 - 3p/2) - sqrt2 beta^2 / (2 alpha) sqrt(2p - p^2) - (p/2) sqrt(1 + 2b)
double dep_bound_hand(double b, double p) {
  const double a = std::sqrt(0.5 + b), be = std::sqrt(0.5 - b), r2 = std::sqrt(2.0);
  return r2 * be * (1.0 - 1.5 * p) - r2 * be * be / (2.0 * a) * std::sqrt(2.0 * p - p * p) -
         p / 2.0 * std::sqrt(1.0 + 2.0 * b);
}

}  // namespace

TEST_CASE("q from an attack") {
  const auto q = q_from_attack(ForwardAttackd(0.0), identity_attack<double>());
  CHECK(q.q00 == Approx(0.25));
  CHECK(std::abs(q.q01) < 1e-15);
  CHECK(std::abs(q.q10) < 1e-15);
  CHECK(q.q11 == Approx(0.25));
  CHECK(q.K() == Approx(0.5));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ub(-0.45, 0.45);
  for (int i = 0; i < 100; ++i) {
    const ForwardAttackd fwd(ub(rng));
    const auto atk = random_attack<double>(1 + i % 4, rng);
    const auto q2 = q_from_attack(fwd, atk);
    const auto obs = observables_from_attack(fwd, atk);
    CHECK(q2.q00 >= -1e-12);
    CHECK(q2.q01 >= -1e-12);
    CHECK(q2.q10 >= -1e-12);
    CHECK(q2.q11 >= -1e-12);
    CHECK(q2.K() > 0.0);
    CHECK(q2.K() <= 2.0 + 1e-12);
    CHECK(std::abs(q2.q01 - obs.e_z / 2.0) < 1e-12);
    CHECK(std::abs(q2.q10 - obs.e_x / 2.0) < 1e-12);
  }
}

TEST_CASE("joint distribution from q") {
  const auto P = joint_from_q({0.25, 0, 0, 0.25});
  CHECK(P(0, 0) == Approx(0.5));
  CHECK(P(1, 1) == Approx(0.5));
  CHECK(P(0, 1) == 0.0);
  CHECK(P(1, 0) == 0.0);

  const auto U = joint_from_q({0.1, 0.1, 0.1, 0.1});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(U(i, j) == Approx(0.25));

  // b = 0, p = 0.2: q = (1/4, 1/20, 1/4 - 0.8/4, 1/4), K = 0.6
  const auto dep = dep_statistics(0.0, 0.2);
  const auto Pd = joint_from_q(dep.q);
  CHECK(Pd(0, 1) == Approx(0.05 / 0.6).epsilon(1e-14));
  CHECK(Pd(1, 0) == Approx(0.05 / 0.6).epsilon(1e-14));
  CHECK(Pd.matrix().sum() == Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(joint_from_q({0, 0, 0, 0}), DegenerateChannelError);
  CHECK_THROWS_AS(JointDistribution(0.5, 0.5, 0.5, -0.5), InvariantError);
}

TEST_CASE("observables from an attack") {
  for (double b : {-0.3, 0.0, 0.2}) {
    const auto obs = observables_from_attack(ForwardAttackd(b), identity_attack<double>(2));
    CHECK(obs.e_z == 0.0);
    CHECK(std::abs(obs.e_x - (0.5 - std::sqrt(0.25 - b * b))) < 1e-12);
    CHECK(obs.p_0_given_0 == Approx(0.5 - b).epsilon(1e-14));
  }

  CMatrixd x(2, 2);
  x << 0, 1, 1, 0;
  const auto flip = reverse_attack_from_unitary<double>(kron<double>(x, CMatrixd::Identity(2, 2)), 2);
  CHECK(observables_from_attack(ForwardAttackd(0.1), flip).e_z == Approx(1.0));

  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const auto obs = observables_from_attack(ForwardAttackd(0.1), random_attack<double>(3, rng));
    CHECK(std::abs(obs.e_x - obs.p_1_given_0) < 1e-12);
  }
}

TEST_CASE("bound on |<l1|l2>|") {
  Observables noiseless{0.0, 0.0, 0.5, 0.0, 0.25};
  CHECK(bound_B(ForwardAttackd(0.0), noiseless) == Approx(1.0).epsilon(1e-15));

  Observables noisy{0.5, 0.5, 0.9, 0.9, 0.9};
  CHECK(bound_B_raw(ForwardAttackd(0.0), noisy) < 0.0);
  CHECK(bound_B(ForwardAttackd(0.0), noisy) == 0.0);

  SUBCASE("depolarizing statistics against the hand-simplified expression") {
    for (double b : {-0.3, -0.1, 0.0, 0.1, 0.3})
      for (double p : {0.0, 0.01, 0.05, 0.1, 0.3}) {
        const auto st = dep_statistics(b, p);
        CHECK(std::abs(bound_B_raw(ForwardAttackd(b), st.obs) - dep_bound_hand(b, p)) < 1e-12);
      }
  }

  SUBCASE("closed-form B differs only in its last term") {
    // Closed form: -(p/2) sqrt(1 - 2p). General bound: -(p/2) sqrt(1 + 2b).
    for (double b : {0.0, 0.1})
      for (double p : {0.0, 0.05, 0.2}) {
        const auto cf = f_bp_detail(b, p);
        const double general = bound_B(ForwardAttackd(b), dep_statistics(b, p).obs);
        const double expected_gap = p / 2.0 * (std::sqrt(1.0 + 2.0 * b) - std::sqrt(1.0 - 2.0 * p));
        CHECK(std::abs((cf.B - general) - expected_gap) < 1e-12);
      }
    CHECK(std::abs(f_bp_detail(0.0, 0.0).B - bound_B(ForwardAttackd(0.0), dep_statistics(0.0, 0.0).obs)) < 1e-12);
  }

  SUBCASE("soundness for symmetric attacks") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ub(-0.45, 0.45);
    for (int i = 0; i < 200; ++i) {
      const ForwardAttackd fwd(ub(rng));
      const auto atk = random_symmetric_attack<double>(i % 2 ? 4 : 2, rng);
      const auto v = derive_vectors(fwd, atk);
      CHECK(bound_B(fwd, observables_from_attack(fwd, atk)) <= std::abs(v.l1.dot(v.l2)) + 1e-9);
    }
  }
}

TEST_CASE("lambda") {
  CHECK(lambda_from(0.25, 0.25, 1.0) == Approx(1.0));
  CHECK(lambda_from(0.3, 0.3, 0.0) == Approx(0.5));
  CHECK(std::abs(lambda_from(0.21, 0.25, 0.0) - 0.5434782608695652) < 1e-15);
  CHECK_THROWS_AS(lambda_from(0.0, 0.0, 0.1), DegenerateChannelError);
  CHECK_THROWS_AS(lambda_from(0.2, 0.2, -0.1), DomainError);
}

TEST_CASE("key-rate lower bound") {
  const auto r1 = key_rate_lower(JointDistribution(0.5, 0, 0, 0.5), 1.0);
  CHECK(r1.r_lower == Approx(1.0));
  CHECK(r1.k1 == Approx(1.0));
  CHECK(r1.k2 == 0.0);
  CHECK(r1.h_b_given_a == Approx(0.0));

  const auto r2 = key_rate_lower(JointDistribution(0.25, 0.25, 0.25, 0.25), 0.5);
  CHECK(r2.r_lower == Approx(-1.0));
  CHECK(r2.h_b_given_a == Approx(1.0));
  CHECK(r2.k1 + r2.k2 == Approx(1.0));

  // Zero crossing of the chain near p = 0.0692.
  CHECK(std::abs(dep_key_rate(0.0, 0.0692).r_lower) < 0.01);
  CHECK(std::abs(f_bp(0.0, 0.0692)) < 0.01);

  CHECK_THROWS_AS(key_rate_lower(JointDistribution(0.5, 0, 0, 0.5), 0.3), DomainError);
}

TEST_CASE("exact key rate") {
  CHECK(exact_key_rate(ForwardAttackd(0.0), identity_attack<double>(2)) == Approx(1.0).epsilon(1e-12));

  CMatrixd x(2, 2);
  x << 0, 1, 1, 0;
  const auto flip = reverse_attack_from_unitary<double>(kron<double>(x, CMatrixd::Identity(2, 2)), 2);
  const double r = exact_key_rate(ForwardAttackd(0.1), flip);
  CHECK(std::isfinite(r));

  SUBCASE("state structure") {
    std::mt19937_64 rng(23);
    const ForwardAttackd fwd(-0.2);
    const auto atk = random_attack<double>(3, rng);
    const auto st = exact_attack_state(fwd, atk);
    const auto P = joint_from_q(q_from_attack(fwd, atk));
    const Eigen::Index d = atk.eve_dim();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const Eigen::Index k = (2 * a + b) * d;
        CHECK(st.rho_ABE.matrix().block(k, k, d, d).trace().real() == Approx(P(a, b)).epsilon(1e-12));
      }
    CHECK(st.rho_BME.dim() == 4 * d);
    CHECK(st.rho_ME.dim() == 2 * d);
  }

  SUBCASE("bound chain holds for symmetric attacks") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> ub(-0.45, 0.45);
    for (int i = 0; i < 50; ++i) {
      const ForwardAttackd fwd(ub(rng));
      const auto atk = random_symmetric_attack<double>(i % 2 ? 4 : 2, rng);
      const auto ent = exact_entropies(fwd, atk);
      const auto rep = bound_chain(fwd, q_from_attack(fwd, atk), observables_from_attack(fwd, atk));
      CHECK(ent.s_b_given_e >= ent.s_b_given_me - 1e-9);
      CHECK(ent.key_rate >= rep.r_lower - 1e-9);
    }
  }
}

TEST_CASE("depolarizing closed forms") {
  SUBCASE("noiseless") {
    const auto st = dep_statistics(0.0, 0.0);
    CHECK(st.q.q00 == Approx(0.25));
    CHECK(st.q.q01 == 0.0);
    CHECK(std::abs(st.q.q10) < 1e-16);
    CHECK(st.q.q11 == 0.25);
    CHECK(st.q.K() == Approx(0.5));
    CHECK(st.joint(0, 0) == Approx(0.5));
    CHECK(st.joint(1, 1) == Approx(0.5));
    CHECK(st.obs.e_z == 0.0);
  }

  SUBCASE("b = 0.1, p = 0.2") {
    // mpmath: q10 = 0.054040820577345752..., K = 0.564040820577345752...
    const auto st = dep_statistics(0.1, 0.2);
    CHECK(std::abs(st.q.q00 - 0.21) < 1e-6);
    CHECK(std::abs(st.q.q01 - 0.05) < 1e-6);
    CHECK(std::abs(st.q.q10 - 0.054041) < 1e-6);
    CHECK(std::abs(st.q.q11 - 0.25) < 1e-6);
    CHECK(std::abs(st.q.K() - 0.564041) < 1e-6);
    CHECK(std::abs(st.obs.e_z - 0.1) < 1e-6);
    CHECK(std::abs(st.obs.p_0_given_0 - 0.42) < 1e-6);
    CHECK(std::abs(st.obs.p_1_given_0 - 0.108082) < 1e-6);
    // P(i,j) = q(i,j)/K, frozen from the same evaluation.
    CHECK(std::abs(st.joint(0, 0) - 0.372313478632710) < 1e-12);
    CHECK(std::abs(st.joint(0, 1) - 0.088646066341121) < 1e-12);
    CHECK(std::abs(st.joint(1, 0) - 0.095810123320561) < 1e-12);
    CHECK(std::abs(st.joint(1, 1) - 0.443230331705607) < 1e-12);
  }

  SUBCASE("agrees with the dilation-driven general machinery") {
    for (double b : {-0.4, -0.2, 0.0, 0.15, 0.3})
      for (double p : {0.0, 0.05, 0.2, 0.6, 1.0}) {
        const ForwardAttackd fwd(b);
        const auto atk = depolarizing_dilation(p);
        const auto st = dep_statistics(b, p);
        const auto q = q_from_attack(fwd, atk);
        const auto obs = observables_from_attack(fwd, atk);
        CHECK(std::abs(q.q00 - st.q.q00) < 1e-9);
        CHECK(std::abs(q.q01 - st.q.q01) < 1e-9);
        CHECK(std::abs(q.q10 - st.q.q10) < 1e-9);
        CHECK(std::abs(q.q11 - st.q.q11) < 1e-9);
        CHECK(std::abs(obs.e_z - st.obs.e_z) < 1e-9);
        CHECK(std::abs(obs.e_x - st.obs.e_x) < 1e-9);
        CHECK(std::abs(obs.p_0_given_0 - st.obs.p_0_given_0) < 1e-9);
        CHECK(std::abs(obs.p_1_given_0 - st.obs.p_1_given_0) < 1e-9);
        const auto P = joint_from_q(q);
        CHECK((P.matrix() - st.joint.matrix()).cwiseAbs().maxCoeff() < 1e-9);
      }
  }

  CHECK_THROWS_AS(dep_statistics(0.5, 0.1), DomainError);
  CHECK_THROWS_AS(dep_statistics(0.0, 1.1), DomainError);
}

TEST_CASE("closed-form rate f(b, p)") {
  CHECK(std::abs(f_bp(0.0, 0.0) - 1.0) < 1e-9);
  // mpmath at 30 digits: f(0, 0.05) = 0.152068714887282...
  CHECK(std::abs(f_bp(0.0, 0.05) - 0.152) < 0.005);
  CHECK(std::abs(f_bp(0.0, 0.05) - 0.152068714887282) < 1e-12);
  CHECK(std::abs(f_bp(0.0, 0.0692)) < 0.01);

  // At p = 0 both routes coincide for every b.
  for (double b : {-0.3, 0.0, 0.2}) CHECK(std::abs(closed_form_gap(b, 0.0)) < 1e-9);

  CHECK_THROWS_AS(f_bp(0.0, 0.51), DomainError);
  CHECK_THROWS_AS(f_bp(0.5, 0.1), DomainError);

  const auto d = f_bp_detail(0.0, 0.0);
  CHECK(d.B == Approx(1.0));
  CHECK(d.lambda == Approx(1.0));
  CHECK(d.K_prime == Approx(2.0));
}

TEST_CASE("threshold search") {
  const auto t0 = threshold_p(0.0, 1e-5);
  REQUIRE(t0.p_star.has_value());
  CHECK(std::abs(*t0.p_star - 0.0692) < 0.002);
  // mpmath bisection on the same closed form: 0.0688698665670...
  CHECK(std::abs(*t0.p_star - 0.06886986656708) < 1e-5);
  CHECK(t0.sign_changes == 1);
  CHECK(f_bp(0.0, *t0.p_star - 1e-4) > 0.0);
  CHECK(f_bp(0.0, *t0.p_star + 1e-4) <= 0.0);

  const auto t15 = threshold_p(0.15, 1e-5);
  REQUIRE(t15.p_star.has_value());
  CHECK(*t15.p_star < *t0.p_star);

  // f(b, 0) <= 0 for strongly biased forward attacks.
  CHECK(f_bp(0.45, 0.0) < 0.0);
  const auto none = threshold_p(0.45, 1e-5);
  CHECK_FALSE(none.p_star.has_value());
  CHECK(none.sign_changes == 0);

  // Precondition failure and missing crossing, on synthetic functions.
  CHECK_FALSE(first_nonpositive([](double x) { return -x; }, 0.0, 0.5, 0.005, 1e-6).p_star);
  CHECK_FALSE(first_nonpositive([](double x) { return 1.0 + x; }, 0.0, 0.5, 0.005, 1e-6).p_star);
  const auto two = first_nonpositive([](double x) { return std::cos(20.0 * x); }, 0.0, 0.5, 0.005, 1e-9);
  REQUIRE(two.p_star.has_value());
  CHECK(*two.p_star == Approx(M_PI / 40.0).epsilon(1e-8));
  CHECK(two.multiple_crossings());
  CHECK_THROWS_AS(threshold_p(0.5, 1e-5), DomainError);
  CHECK_THROWS_AS(threshold_p(0.0, 0.0), DomainError);
}

TEST_CASE("sweep") {
  const auto one = sweep({0.0}, {0.0});
  REQUIRE(one.size() == 1);
  CHECK(one[0].r_lower == Approx(1.0));

  CHECK(sweep({}, {}).empty());
  CHECK(sweep({0.0}, {}).empty());

  for (double p : {0.01, 0.03, 0.05}) {
    const auto rows = sweep({0.0, 0.05, 0.1, 0.15}, {p});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].r_lower <= rows[i - 1].r_lower);
  }

  const auto marked = sweep({0.0, 0.7}, {0.1, 0.6});
  REQUIRE(marked.size() == 4);
  CHECK(marked[0].in_domain);
  CHECK_FALSE(marked[1].in_domain);
  CHECK(std::isnan(marked[1].r_lower));
  CHECK_FALSE(marked[2].in_domain);
  CHECK_FALSE(marked[3].in_domain);
  CHECK(marked[1].b == 0.0);
  CHECK(marked[1].p == 0.6);
}
