#include "sqkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sqkd {

void ProtocolConfig::validate() const {
  if (iterations < 8) throw DomainError("iterations must be at least 8");
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  if (!(std::abs(b) < 0.5)) throw DomainError("b = " + std::to_string(b) + " outside (-1/2, 1/2)");
  if (!(test_threshold >= 0.0 && test_threshold <= 1.0)) throw DomainError("test threshold outside [0, 1]");
}

IterationRecord make_record(BobChoice bob, Basis basis, std::uint8_t outcome) {
  IterationRecord r;
  r.bob = bob;
  r.basis = basis;
  r.outcome = outcome;
  r.k_b = bob == BobChoice::ctrl ? 0 : 1;
  if (basis == Basis::z && outcome == 1)
    r.k_a = 0;
  else if (basis == Basis::x && outcome == 1)
    r.k_a = 1;
  else
    r.k_a = -1;
  r.kept = r.k_a != -1;
  return r;
}

ObservedStats estimate_stats(std::span<const IterationRecord> records) {
  std::uint64_t sift_z = 0, sift_z1 = 0, ctrl_x = 0, ctrl_xm = 0, ctrl_z = 0, ctrl_z1 = 0;
  std::uint64_t counts[2][2] = {{0, 0}, {0, 0}};
  for (const auto& r : records) {
    if (r.bob == BobChoice::sift && r.basis == Basis::z) {
      ++sift_z;
      sift_z1 += r.outcome;
    } else if (r.bob == BobChoice::ctrl && r.basis == Basis::x) {
      ++ctrl_x;
      ctrl_xm += r.outcome;
    } else if (r.bob == BobChoice::ctrl && r.basis == Basis::z) {
      ++ctrl_z;
      ctrl_z1 += r.outcome;
    }
    if (r.kept) ++counts[r.k_a][r.k_b];
  }
  auto ratio = [](std::uint64_t hits, std::uint64_t trials) {
    Estimate e;
    e.hits = hits;
    e.trials = trials;
    e.missing = trials == 0;
    e.value = trials == 0 ? 0.0 : double(hits) / double(trials);
    return e;
  };
  ObservedStats s;
  s.e_z = ratio(sift_z1, sift_z);
  s.e_x = ratio(ctrl_xm, ctrl_x);
  s.p00_ctrl = ratio(ctrl_z1, ctrl_z);
  s.p10_ctrl = s.e_x;
  s.kept = counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  if (s.kept > 0)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s.joint_hat(i, j) = double(counts[i][j]) / double(s.kept);
  return s;
}

std::string to_string(AbortReason reason) {
  switch (reason) {
    case AbortReason::none: return "none";
    case AbortReason::insufficient_sifted_bits: return "insufficient_sifted_bits";
    case AbortReason::test_error_exceeded: return "test_error_exceeded";
  }
  return "unknown";
}

SiftResult sift(std::span<const IterationRecord> records, SizingMode mode, double delta) {
  SiftResult out;
  for (const auto& r : records) {
    if (!r.kept) continue;
    out.key_a.push_back(std::uint8_t(r.k_a));
    out.key_b.push_back(r.k_b);
  }
  const std::uint64_t l = out.key_a.size();
  if (mode == SizingMode::paper_literal) {
    out.n = std::uint64_t(std::floor(double(records.size()) / (4.0 * (1.0 + delta))));
    out.aborted = l < 2 * out.n;
  } else {
    out.n = l / 2;
    out.aborted = l < 2;
  }
  return out;
}

TestRoundResult test_round(std::span<const std::uint8_t> key_a, std::span<const std::uint8_t> key_b,
                           std::uint64_t n, double threshold, Rng& rng) {
  if (key_a.size() != key_b.size()) throw DimensionError("test_round: raw keys differ in length");
  if (2 * n > key_a.size()) throw DomainError("test_round: n exceeds half the raw key length");

  // Partial Fisher-Yates: the first n slots become the TEST sample.
  std::vector<std::size_t> idx(key_a.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  TestRoundResult out;
  out.test_positions.assign(idx.begin(), idx.begin() + std::ptrdiff_t(n));
  std::sort(out.test_positions.begin(), out.test_positions.end());

  std::vector<bool> is_test(key_a.size(), false);
  std::uint64_t errors = 0;
  for (std::size_t pos : out.test_positions) {
    is_test[pos] = true;
    errors += key_a[pos] != key_b[pos];
  }
  out.error_rate = n == 0 ? 0.0 : double(errors) / double(n);
  out.aborted = out.error_rate > threshold;

  for (std::size_t i = 0; i < key_a.size() && out.info_a.size() < n; ++i) {
    if (is_test[i]) continue;
    out.info_a.push_back(key_a[i]);
    out.info_b.push_back(key_b[i]);
  }
  return out;
}

BranchProbabilities branch_probabilities(double b, const ReverseChannel& reverse) {
  const ForwardAttackd fwd(b);
  const auto sent_sift = DensityOperatord::pure(Qubitd::zero());
  const auto sent_ctrl = DensityOperatord::pure(e_state(fwd));

  auto apply = [&](const DensityOperatord& rho) {
    return std::visit(
        [&](const auto& ch) -> DensityOperatord {
          using T = std::decay_t<decltype(ch)>;
          if constexpr (std::is_same_v<T, IdealChannel>)
            return rho;
          else if constexpr (std::is_same_v<T, DepolarizingChanneld>)
            return apply_depolarizing(rho, ch);
          else
            return induced_channel(ch, rho);
        },
        reverse);
  };
  const auto back_sift = apply(sent_sift);
  const auto back_ctrl = apply(sent_ctrl);
  return {born_probability(back_sift, Qubitd::one()), born_probability(back_sift, Qubitd::minus()),
          born_probability(back_ctrl, Qubitd::one()), born_probability(back_ctrl, Qubitd::minus())};
}

Transcript run(const ProtocolConfig& config) {
  config.validate();
  const auto probs = branch_probabilities(config.b, config.reverse);

  Transcript t;
  t.config = config;
  t.records.reserve(config.iterations);

  Rng rng(config.seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::uint64_t i = 0; i < config.iterations; ++i) {
    const BobChoice bob = coin(rng) ? BobChoice::sift : BobChoice::ctrl;
    const Basis basis = coin(rng) ? Basis::x : Basis::z;
    double p1;
    if (bob == BobChoice::sift)
      p1 = basis == Basis::z ? probs.sift_z1 : probs.sift_x_minus;
    else
      p1 = basis == Basis::z ? probs.ctrl_z1 : probs.ctrl_x_minus;
    t.records.push_back(make_record(bob, basis, unif(rng) < p1 ? 1 : 0));
  }

  t.stats = estimate_stats(t.records);
  auto sifted = sift(t.records, config.sizing, config.delta);
  t.sifted_a = std::move(sifted.key_a);
  t.sifted_b = std::move(sifted.key_b);
  t.n = sifted.n;
  t.keep_rate = double(t.sifted_a.size()) / double(config.iterations);

  if (sifted.aborted) {
    t.aborted = true;
    t.abort_reason = AbortReason::insufficient_sifted_bits;
  } else {
    auto test = test_round(t.sifted_a, t.sifted_b, t.n, config.test_threshold, rng);
    t.tested = true;
    t.test_positions = std::move(test.test_positions);
    t.test_error_rate = test.error_rate;
    if (test.aborted) {
      t.aborted = true;
      t.abort_reason = AbortReason::test_error_exceeded;
    } else {
      t.info_length = test.info_a.size();
    }
  }
  t.efficiency = double(t.info_length) / (2.0 * double(config.iterations));
  return t;
}

}  // namespace sqkd
