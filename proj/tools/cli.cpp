#include "cli.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sqkd/io.hpp"

namespace sqkd::cli {

using nlohmann::json;

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw DomainError(msg);
}

void check_b(double b) { require(std::abs(b) < 0.5, "--b must lie in (-0.5, 0.5)"); }
void check_p(double p) { require(p >= 0.0 && p <= 1.0, "--p must lie in [0, 1]"); }

json nullable(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty() || out_path == "-")
    out << text;
  else
    write_file_atomic(out_path, text);
}

struct SimulateArgs {
  std::uint64_t n = 0;
  double b = 0, p = 0;
  std::uint64_t seed = 0;
  std::string sizing = "realized";
  bool records = false;
  double delta = 0.1;
  double pt = 1.0;
  std::string out;
};

struct KeyrateArgs {
  double b = 0, p = 0;
};

struct ThresholdArgs {
  double b = 0;
  double tol = 1e-5;
};

struct SweepArgs {
  std::vector<double> b;
  double p_min = 0, p_max = 0, p_step = 0;
  std::string out;
};

void run_simulate(const SimulateArgs& a, std::ostream& out) {
  check_b(a.b);
  check_p(a.p);
  require(a.n >= 8, "--n must be at least 8");
  require(a.delta > 0.0, "--delta must be positive");
  require(a.pt >= 0.0 && a.pt <= 1.0, "--pt must lie in [0, 1]");

  ProtocolConfig cfg;
  cfg.iterations = a.n;
  cfg.b = a.b;
  cfg.seed = a.seed;
  cfg.delta = a.delta;
  cfg.test_threshold = a.pt;
  cfg.sizing = sizing_mode_from_string(a.sizing);
  if (a.p > 0.0) cfg.reverse = DepolarizingChanneld(a.p);

  const auto t = run(cfg);
  emit(to_json(t, a.records).dump(2) + "\n", a.out, out);
}

void run_keyrate(const KeyrateArgs& a, std::ostream& out) {
  check_b(a.b);
  check_p(a.p);
  const auto rep = dep_key_rate(a.b, a.p);
  json doc = {{"b", a.b},
              {"p", a.p},
              {"B", rep.B},
              {"lambda", rep.lambda},
              {"k1", rep.k1},
              {"k2", rep.k2},
              {"h_b_given_a", rep.h_b_given_a},
              {"r_lower", rep.r_lower}};
  if (a.p <= 0.5) {
    const auto cf = f_bp_detail(a.b, a.p);
    doc["closed_form"] = {{"K_prime", cf.K_prime}, {"B", cf.B}, {"lambda", cf.lambda}, {"f", cf.value}};
    doc["closed_form_gap"] = cf.value - rep.r_lower;
  } else {
    doc["closed_form"] = nullptr;
    doc["closed_form_gap"] = nullptr;
  }
  out << doc.dump(2) << "\n";
}

void run_threshold(const ThresholdArgs& a, std::ostream& out) {
  check_b(a.b);
  require(a.tol > 0.0 && a.tol < 0.5, "--tol must lie in (0, 0.5)");
  const auto res = threshold_p(a.b, a.tol);
  if (!res.p_star) throw DomainError("no threshold: f(b, p) has no sign change on [0, 0.5]");
  json doc = {{"b", a.b},
              {"tol", a.tol},
              {"p_star", *res.p_star},
              {"e_z_threshold", *res.p_star / 2.0},
              {"sign_changes", res.sign_changes}};
  if (res.multiple_crossings()) doc["warning"] = "multiple sign changes on [0, 0.5]; reporting the first";
  out << doc.dump(2) << "\n";
}

void run_sweep(const SweepArgs& a, std::ostream& out) {
  require(!a.b.empty(), "--b needs at least one value");
  for (double b : a.b) check_b(b);
  require(a.p_step > 0.0, "--p-step must be positive");
  require(a.p_min >= 0.0 && a.p_max <= 1.0 && a.p_min <= a.p_max, "need 0 <= --p-min <= --p-max <= 1");
  std::ostringstream csv;
  write_csv(sweep(a.b, p_grid(a.p_min, a.p_max, a.p_step)), csv);
  emit(csv.str(), a.out, out);
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

std::vector<double> p_grid(double p_min, double p_max, double p_step) {
  std::vector<double> grid;
  const auto count = std::size_t(std::floor((p_max - p_min) / p_step + 1e-9)) + 1;
  grid.reserve(count);
  for (std::size_t i = 0; i < count; ++i) grid.push_back(p_min + double(i) * p_step);
  return grid;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-state semi-quantum key distribution: simulation and key-rate bounds", "sqkd"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the protocol and write a transcript JSON");
  simulate->add_option("--n", sim.n, "Number of iterations N")->required();
  simulate->add_option("--b", sim.b, "Forward attack parameter b")->required();
  simulate->add_option("--p", sim.p, "Depolarizing parameter of the reverse channel")->required();
  simulate->add_option("--seed", sim.seed, "RNG seed")->required();
  simulate->add_option("--sizing", sim.sizing, "paper | realized")->capture_default_str();
  simulate->add_flag("--records", sim.records, "Include per-iteration records");
  simulate->add_option("--delta", sim.delta, "Sizing slack delta")->capture_default_str();
  simulate->add_option("--pt", sim.pt, "TEST error threshold P_T")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output path (default: standard output)");

  KeyrateArgs kr;
  auto* keyrate = app.add_subcommand("keyrate", "Print the key-rate lower bound for a depolarizing reverse channel");
  keyrate->add_option("--b", kr.b, "Forward attack parameter b")->required();
  keyrate->add_option("--p", kr.p, "Depolarizing parameter p")->required();

  ThresholdArgs th;
  auto* threshold = app.add_subcommand("threshold", "Find p* where the closed-form bound reaches zero");
  threshold->add_option("--b", th.b, "Forward attack parameter b")->required();
  threshold->add_option("--tol", th.tol, "Bisection tolerance")->capture_default_str();

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Write r_lower over a (b, p) grid as CSV");
  sweep_cmd->add_option("--b", sw.b, "Comma-separated b values")->required()->delimiter(',');
  sweep_cmd->add_option("--p-min", sw.p_min)->required();
  sweep_cmd->add_option("--p-max", sw.p_max)->required();
  sweep_cmd->add_option("--p-step", sw.p_step)->required();
  sweep_cmd->add_option("--out", sw.out, "Output CSV path")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << "\n";
    return usage_error;
  }

  try {
    if (*simulate) run_simulate(sim, out);
    if (*keyrate) run_keyrate(kr, out);
    if (*threshold) run_threshold(th, out);
    if (*sweep_cmd) run_sweep(sw, out);
  } catch (const IoError& e) {
    err << "error: io: " << one_line(e.what()) << "\n";
    return io_error;
  } catch (const DomainError& e) {
    err << "error: domain: " << one_line(e.what()) << "\n";
    return domain_error;
  } catch (const DegenerateChannelError& e) {
    err << "error: domain: " << one_line(e.what()) << "\n";
    return domain_error;
  } catch (const InvariantError& e) {
    err << "error: domain: " << one_line(e.what()) << "\n";
    return domain_error;
  }
  return ok;
}

}  // namespace sqkd::cli
