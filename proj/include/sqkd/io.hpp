#pragma once

// Transcript JSON and sweep CSV encodings.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqkd/protocol.hpp"
#include "sqkd/security.hpp"

namespace sqkd {

inline constexpr int kTranscriptSchemaVersion = 1;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything in a transcript except the per-iteration data and keys.
struct TranscriptSummary {
  std::uint64_t iterations = 0;
  std::uint64_t sifted_length = 0;
  std::uint64_t n = 0;
  std::uint64_t info_length = 0;
  double keep_rate = 0;
  double efficiency = 0;
  bool tested = false;
  double test_error_rate = 0;
  bool aborted = false;
  AbortReason abort_reason = AbortReason::none;
  bool sifted_keys_equal = false;
  ObservedStats stats;

  friend bool operator==(const TranscriptSummary&, const TranscriptSummary&) = default;
};

TranscriptSummary summarize(const Transcript& t);

nlohmann::json to_json(const Transcript& t, bool include_records);
TranscriptSummary summary_from_json(const nlohmann::json& doc);

std::string to_string(SizingMode mode);
SizingMode sizing_mode_from_string(const std::string& s);

void write_csv(const std::vector<SweepRow>& rows, std::ostream& out);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace sqkd
