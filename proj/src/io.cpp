#include "sqkd/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <system_error>
#include <unistd.h>

namespace sqkd {

using nlohmann::json;

namespace {

json estimate_json(const Estimate& e) {
  return {{"value", e.value}, {"hits", e.hits}, {"trials", e.trials}, {"missing", e.missing}};
}

Estimate estimate_from(const json& j) {
  Estimate e;
  e.value = j.at("value").get<double>();
  e.hits = j.at("hits").get<std::uint64_t>();
  e.trials = j.at("trials").get<std::uint64_t>();
  e.missing = j.at("missing").get<bool>();
  return e;
}

json reverse_json(const ReverseChannel& ch) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, IdealChannel>)
          return {{"kind", "ideal"}};
        else if constexpr (std::is_same_v<T, DepolarizingChanneld>)
          return {{"kind", "depolarizing"}, {"p", c.p()}};
        else
          return {{"kind", "attack"}, {"eve_dim", c.eve_dim()}};
      },
      ch);
}

AbortReason abort_reason_from(const std::string& s) {
  for (auto r : {AbortReason::none, AbortReason::insufficient_sifted_bits, AbortReason::test_error_exceeded})
    if (to_string(r) == s) return r;
  throw std::invalid_argument("unknown abort reason '" + s + "'");
}

std::string format(const char* fmt, double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

}  // namespace

std::string to_string(SizingMode mode) {
  return mode == SizingMode::paper_literal ? "paper_literal" : "realized_l";
}

SizingMode sizing_mode_from_string(const std::string& s) {
  if (s == "paper" || s == "paper_literal") return SizingMode::paper_literal;
  if (s == "realized" || s == "realized_l") return SizingMode::realized_l;
  throw DomainError("unknown sizing mode '" + s + "'");
}

TranscriptSummary summarize(const Transcript& t) {
  TranscriptSummary s;
  s.iterations = t.config.iterations;
  s.sifted_length = t.sifted_a.size();
  s.n = t.n;
  s.info_length = t.info_length;
  s.keep_rate = t.keep_rate;
  s.efficiency = t.efficiency;
  s.tested = t.tested;
  s.test_error_rate = t.test_error_rate;
  s.aborted = t.aborted;
  s.abort_reason = t.abort_reason;
  s.sifted_keys_equal = t.sifted_a == t.sifted_b;
  s.stats = t.stats;
  return s;
}

json to_json(const Transcript& t, bool include_records) {
  const auto s = summarize(t);
  json doc;
  doc["schema_version"] = kTranscriptSchemaVersion;
  doc["config"] = {{"iterations", t.config.iterations},
                   {"delta", t.config.delta},
                   {"b", t.config.b},
                   {"reverse", reverse_json(t.config.reverse)},
                   {"seed", t.config.seed},
                   {"test_threshold", t.config.test_threshold},
                   {"sizing", to_string(t.config.sizing)}};
  doc["summary"] = {{"iterations", s.iterations},
                    {"sifted_length", s.sifted_length},
                    {"n", s.n},
                    {"info_length", s.info_length},
                    {"keep_rate", s.keep_rate},
                    {"efficiency", s.efficiency},
                    {"tested", s.tested},
                    {"test_error_rate", s.test_error_rate},
                    {"sifted_keys_equal", s.sifted_keys_equal}};
  doc["abort"] = {{"aborted", s.aborted}, {"reason", to_string(s.abort_reason)}};
  const auto& st = s.stats;
  doc["stats"] = {{"e_z", estimate_json(st.e_z)},
                  {"e_x", estimate_json(st.e_x)},
                  {"p00_ctrl", estimate_json(st.p00_ctrl)},
                  {"p10_ctrl", estimate_json(st.p10_ctrl)},
                  {"joint_hat",
                   {{st.joint_hat(0, 0), st.joint_hat(0, 1)}, {st.joint_hat(1, 0), st.joint_hat(1, 1)}}},
                  {"kept", st.kept}};
  if (include_records) {
    json recs = json::array();
    for (const auto& r : t.records) {
      recs.push_back({{"bob", r.bob == BobChoice::ctrl ? "CTRL" : "SIFT"},
                      {"basis", r.basis == Basis::z ? "Z" : "X"},
                      {"outcome", r.basis == Basis::z ? (r.outcome ? "1" : "0") : (r.outcome ? "-" : "+")},
                      {"kept", r.kept},
                      {"k_a", r.k_a},
                      {"k_b", r.k_b}});
    }
    doc["records"] = std::move(recs);
  }
  return doc;
}

TranscriptSummary summary_from_json(const json& doc) {
  if (doc.at("schema_version").get<int>() != kTranscriptSchemaVersion) {
    throw std::invalid_argument("unsupported transcript schema version");
  }
  const auto& sm = doc.at("summary");
  TranscriptSummary s;
  s.iterations = sm.at("iterations").get<std::uint64_t>();
  s.sifted_length = sm.at("sifted_length").get<std::uint64_t>();
  s.n = sm.at("n").get<std::uint64_t>();
  s.info_length = sm.at("info_length").get<std::uint64_t>();
  s.keep_rate = sm.at("keep_rate").get<double>();
  s.efficiency = sm.at("efficiency").get<double>();
  s.tested = sm.at("tested").get<bool>();
  s.test_error_rate = sm.at("test_error_rate").get<double>();
  s.sifted_keys_equal = sm.at("sifted_keys_equal").get<bool>();
  s.aborted = doc.at("abort").at("aborted").get<bool>();
  s.abort_reason = abort_reason_from(doc.at("abort").at("reason").get<std::string>());

  const auto& st = doc.at("stats");
  s.stats.e_z = estimate_from(st.at("e_z"));
  s.stats.e_x = estimate_from(st.at("e_x"));
  s.stats.p00_ctrl = estimate_from(st.at("p00_ctrl"));
  s.stats.p10_ctrl = estimate_from(st.at("p10_ctrl"));
  const auto& jh = st.at("joint_hat");
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s.stats.joint_hat(i, j) = jh.at(i).at(j).get<double>();
  s.stats.kept = st.at("kept").get<std::uint64_t>();
  return s;
}

void write_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "b,p,r_lower\n";
  for (const auto& r : rows) {
    out << format("%.9g", r.b) << ',' << format("%.9g", r.p) << ',' << format("%#.9g", r.r_lower) << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path.string() + ": cannot open for writing");
    f << contents;
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError(path.string() + ": write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError(path.string() + ": " + ec.message());
  }
}

}  // namespace sqkd
