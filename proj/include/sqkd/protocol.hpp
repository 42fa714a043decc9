#pragma once

// Seeded Monte Carlo run of the single-state protocol.
//
// Per iteration: Alice sends |+>, the forward attack turns it into |e(b)>,
// Bob reflects it (CTRL, K_B = 0) or replaces it by |0> (SIFT, K_B = 1), the
// reverse channel acts, and Alice measures in Z or X. Outcome 1 in Z gives
// K_A = 0, outcome - in X gives K_A = 1, anything else K_A = -1 (dropped).

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sqkd/channels.hpp"

namespace sqkd {

using Rng = std::mt19937_64;

struct IdealChannel {};
using ReverseChannel = std::variant<IdealChannel, DepolarizingChanneld, ReverseAttackd>;

enum class SizingMode {
  paper_literal,  // n = floor(N / (4 (1 + delta))), abort iff l < 2n
  realized_l,     // n = floor(l / 2), abort iff l < 2
};

struct ProtocolConfig {
  std::uint64_t iterations = 0;
  double delta = 0.1;
  double b = 0.0;
  ReverseChannel reverse = IdealChannel{};
  std::uint64_t seed = 0;
  double test_threshold = 1.0;
  SizingMode sizing = SizingMode::realized_l;

  /// Throws DomainError on the first invalid field.
  void validate() const;
};

enum class BobChoice : std::uint8_t { ctrl, sift };
enum class Basis : std::uint8_t { z, x };

struct IterationRecord {
  BobChoice bob = BobChoice::ctrl;
  Basis basis = Basis::z;
  std::uint8_t outcome = 0;  // Z: the bit seen; X: 0 for +, 1 for -
  bool kept = false;
  std::int8_t k_a = -1;
  std::uint8_t k_b = 0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

/// Builds the record for one iteration and fills K_A, K_B and kept.
IterationRecord make_record(BobChoice bob, Basis basis, std::uint8_t outcome);

/// A ratio estimate; `missing` when the conditioning event never occurred.
struct Estimate {
  double value = 0;
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  bool missing = true;

  friend bool operator==(const Estimate&, const Estimate&) = default;
};

struct ObservedStats {
  Estimate e_z;       // SIFT, Z: outcome 1
  Estimate e_x;       // CTRL, X: outcome -
  Estimate p00_ctrl;  // CTRL, Z: outcome 1
  Estimate p10_ctrl;  // identical event to e_x
  Eigen::Matrix2d joint_hat = Eigen::Matrix2d::Zero();  // over kept records, (K_A, K_B)
  std::uint64_t kept = 0;

  friend bool operator==(const ObservedStats&, const ObservedStats&) = default;
};

ObservedStats estimate_stats(std::span<const IterationRecord> records);

enum class AbortReason : std::uint8_t { none, insufficient_sifted_bits, test_error_exceeded };

std::string to_string(AbortReason reason);

struct SiftResult {
  std::vector<std::uint8_t> key_a, key_b;
  std::uint64_t n = 0;  // INFO / TEST length
  bool aborted = false;
};

SiftResult sift(std::span<const IterationRecord> records, SizingMode mode, double delta);

struct TestRoundResult {
  double error_rate = 0;
  bool aborted = false;
  std::vector<std::size_t> test_positions;  // ascending
  std::vector<std::uint8_t> info_a, info_b;
};

/// Samples n TEST positions without replacement; INFO is the first n of the rest.
TestRoundResult test_round(std::span<const std::uint8_t> key_a, std::span<const std::uint8_t> key_b,
                           std::uint64_t n, double threshold, Rng& rng);

struct Transcript {
  ProtocolConfig config;
  std::vector<IterationRecord> records;
  std::vector<std::uint8_t> sifted_a, sifted_b;
  std::vector<std::size_t> test_positions;
  std::uint64_t n = 0;
  std::uint64_t info_length = 0;
  bool tested = false;
  double test_error_rate = 0;
  bool aborted = false;
  AbortReason abort_reason = AbortReason::none;
  ObservedStats stats;
  double keep_rate = 0;
  double efficiency = 0;  // info_length / (2 N)
};

/// Per-branch Born probabilities the run samples from.
struct BranchProbabilities {
  double sift_z1 = 0;       // SIFT, Z basis, outcome 1
  double sift_x_minus = 0;  // SIFT, X basis, outcome -
  double ctrl_z1 = 0;
  double ctrl_x_minus = 0;
};

BranchProbabilities branch_probabilities(double b, const ReverseChannel& reverse);

Transcript run(const ProtocolConfig& config);

}  // namespace sqkd
