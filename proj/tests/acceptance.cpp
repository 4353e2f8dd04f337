// Acceptance run over the shipped presets. Prints one PASS/FAIL line per
// criterion; exits 0 when the failing set equals the --expect-fail set.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "sizestruct/commands.hpp"
#include "support.hpp"

using namespace sizestruct;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void require(bool ok, std::string note) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "[x] ") + std::move(note));
  }
  void info(std::string note) { notes.push_back(std::move(note)); }
  // Appends the runtime to the previous note and checks it against a budget.
  void budget(double seconds, double limit) {
    const bool ok = seconds < limit;
    pass = pass && ok;
    std::string note = notes.empty() ? std::string() : notes.back();
    if (!notes.empty()) notes.pop_back();
    if (!ok && note.rfind("[x] ", 0) != 0) note = "[x] " + note;
    notes.push_back(note + fmt(" [%.2f s, budget %g s]", seconds, limit));
  }
};

struct Cli {
  int code;
  std::string out;
  double seconds;
};

Cli cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const auto t0 = Clock::now();
  const int code = run_cli(args, out, err);
  return {code, out.str() + err.str(), seconds_since(t0)};
}

std::optional<double> field(const std::string& text, const std::string& key) {
  const auto pos = text.find(key + ": ");
  if (pos == std::string::npos) return std::nullopt;
  try {
    return std::stod(text.substr(pos + key.size() + 2));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<double> csv_value(const fs::path& path, const std::string& first_column, int column) {
  std::ifstream f(path);
  std::string row;
  while (std::getline(f, row)) {
    if (row.rfind(first_column + ",", 0) != 0) continue;
    std::istringstream cells(row);
    std::string cell;
    for (int c = 0; c <= column && std::getline(cells, cell, ','); ++c) {
    }
    return std::stod(cell);
  }
  return std::nullopt;
}

// Runs the doctest cases matching the filters; failures are echoed.
bool run_suite(const std::vector<std::pair<const char*, const char*>>& filters, std::string& summary) {
  doctest::Context ctx;
  for (const auto& [kind, value] : filters) ctx.addFilter(kind, value);
  ctx.setOption("no-version", true);
  ctx.setOption("no-intro", true);
  std::ostringstream out;
  ctx.setCout(&out);
  const int rc = ctx.run();
  const std::string text = out.str();
  const auto pos = text.find("test cases:");
  summary = pos == std::string::npos ? "no summary" : text.substr(pos, text.find('\n', pos) - pos);
  summary.erase(std::unique(summary.begin(), summary.end(),
                            [](char a, char b) { return a == ' ' && b == ' '; }),
                summary.end());
  if (rc != 0) std::cerr << text;
  return rc == 0;
}

struct Shared {
  fs::path dir;
  std::optional<double> R00_stable;
  std::optional<double> trivial_root;
  std::optional<double> P_star;
};

Outcome reproduction_numbers(Shared& sh) {
  Outcome o;
  const struct {
    const char* preset;
    double reference;
    double oracle;
  } cases[] = {{"trivial_stable", 0.9088, oracle::R00_sin_preset()},
               {"trivial_unstable", 1.6297, oracle::R00_cos_preset()}};
  for (const auto& c : cases) {
    const fs::path out = sh.dir / c.preset;
    const Cli run = cli({"--seed-preset", c.preset, "--out", out.string(), "r0"});
    const auto R = csv_value(out / "r0.csv", "2001", 2);
    if (run.code != 0 || !R) {
      o.require(false, fmt("%s: r0 exited %d", c.preset, run.code));
      continue;
    }
    if (c.reference < 1.0) sh.R00_stable = *R;
    o.require(std::fabs(*R - c.reference) <= 5e-4,
              fmt("%s R00 = %.6f (reference %.4f, |d| %.1e, closed form %.6f)", c.preset, *R, c.reference,
                  std::fabs(*R - c.reference), c.oracle));
    o.budget(run.seconds, 1.0);
  }
  return o;
}

Outcome trivial_classification(Shared& sh) {
  Outcome o;
  const struct {
    const char* preset;
    Verdict expected;
  } cases[] = {{"trivial_stable", Verdict::stable}, {"trivial_unstable", Verdict::unstable}};
  for (const auto& c : cases) {
    const ToolConfig cfg = load_preset(c.preset);
    const StabilityVerdict v =
        classify(make_rates(cfg), Target::trivial, make_grid(cfg), make_delay_grid(cfg),
                 make_stability_options(cfg));
    o.require(v.verdict == c.expected && v.criterion == Criterion::reproduction_number,
              fmt("%s: %s", c.preset, std::string(to_string(v.verdict)).c_str()));
    if (c.expected == Verdict::stable && v.leading_root && v.leading_root_licensed) {
      sh.trivial_root = *v.leading_root;
    }
  }
  const fs::path out = sh.dir / "trivial_stable";
  const Cli run =
      cli({"--seed-preset", "trivial_stable", "--out", out.string(), "--target", "trivial", "spectrum"});
  const auto K0 = csv_value(out / "kcurve.csv", "0", 1);
  if (run.code != 0 || !K0 || !sh.R00_stable) {
    o.require(false, fmt("spectrum exited %d or K(0) / R00 missing", run.code));
    return o;
  }
  const double expect = (1.0 - 0.5) * (1.0 - *sh.R00_stable);
  o.require(std::fabs(*K0 - expect) <= 1e-6,
            fmt("Khat(0) = %.9f vs (1-alpha)(1-R00) = %.9f, |d| %.1e", *K0, expect, std::fabs(*K0 - expect)));
  return o;
}

Outcome positive_equilibrium(Shared& sh) {
  Outcome o;
  const oracle::LinearHierarchy lin;
  const fs::path out = sh.dir / "positive_stable";
  const Cli run = cli({"--seed-preset", "positive_stable", "--out", out.string(), "equilibrium"});
  const auto P = field(run.out, "P_star");
  if (run.code != 0 || !P) {
    o.require(false, fmt("equilibrium exited %d", run.code));
    return o;
  }
  sh.P_star = *P;
  o.require(std::fabs(*P - lin.P_star()) <= 1e-3,
            fmt("P* = %.6f, closed form %.6f, |d| %.1e (reference ~0.8585)", *P, lin.P_star(),
                std::fabs(*P - lin.P_star())));
  o.budget(run.seconds, 5.0);
  return o;
}

Outcome structural_identities(Shared&) {
  Outcome o;
  std::string summary;
  const bool ok = run_suite({{"source-file", "*test_spectrum.cpp"},
                             {"test-case", "cofactor determinant"},
                             {"test-case", "trivial state: determinant reduces*"},
                             {"test-case", "scramble-free state: entries*"},
                             {"test-case", "pi? factorises*"}},
                            summary);
  o.require(ok, summary);
  return o;
}

Outcome scramble_free_monotonicity(Shared&) {
  Outcome o;
  const ToolConfig cfg = load_preset("positive_stable");
  const RateSet r = make_rates(cfg);
  const SizeGrid grid = make_grid(cfg);
  const DelayGrid dgrid = make_delay_grid(cfg);
  const auto search = solve_equilibrium(r, grid, dgrid, default_population_bound(r, grid, dgrid));
  if (!search.solution) {
    o.require(false, "no equilibrium");
    return o;
  }
  const LinearCoefficients lc = linear_coefficients(r, *search.solution);
  const CharacteristicFunction cf(r, *search.solution, lc, dgrid);
  o.info(fmt("eps* max %.1e", lc.eps_star.cwiseAbs().maxCoeff()));

  // Kt is the determinant written out for eps* = 0; its sign convention is
  // the one the monotonicity argument uses (Kt = -K/(1-alpha)).
  const Eigen::VectorXd lambda = Eigen::VectorXd::LinSpaced(200, 0.0, 50.0);
  Eigen::VectorXd Kt(lambda.size()), K(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    Kt(i) = cf.reduced(lambda(i));
    K(i) = cf.det(lambda(i));
  }
  double rise = 0.0;
  for (Eigen::Index i = 1; i < Kt.size(); ++i) rise = std::max(rise, Kt(i) - Kt(i - 1));
  o.require(Kt(0) < 0.0, fmt("Kt(0) = %.6f", Kt(0)));
  o.require(rise <= 1e-12 * std::max(1.0, Kt.cwiseAbs().maxCoeff()),
            fmt("Kt non-increasing: largest step increase %.3e, Kt(50) = %.6f", rise, Kt(Kt.size() - 1)));

  const Positivity pos = positivity_check(cf);
  o.info(fmt("det K(0) = %.6f, K(50) = %.6f", K(0), K(K.size() - 1)));
  o.info(fmt("positivity %s, minimum %.5f at s = %.3f", pos.holds ? "holds" : "fails", pos.margin,
             pos.worst_s));
  const RootSearch roots = real_roots(cf, cfg.analysis.lambda_lo, cfg.analysis.lambda_hi,
                                      cfg.analysis.lambda_samples);
  if (roots.status == RootSearch::Status::found) {
    o.info(fmt("largest real root %.6f (unlicensed when positivity fails)", roots.root));
  }
  return o;
}

struct Run {
  SimResult res;
  double seconds;
};

Run simulate(const ToolConfig& cfg) {
  const auto t0 = Clock::now();
  SimResult res = run(make_sim_config(cfg));
  return {std::move(res), seconds_since(t0)};
}

double value_at(const TimeSeries& s, double t) {
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    if (s.t[k] >= t - 1e-9) return s.P[k];
  }
  return s.P.back();
}

Outcome dynamics(Shared& sh) {
  Outcome o;
  {
    const ToolConfig cfg = load_preset("trivial_stable");
    const Run r = simulate(cfg);
    const double P0 = r.res.series.P.front(), P40 = value_at(r.res.series, 40.0);
    o.require(P40 <= 0.05 * P0, fmt("trivial_stable P(40)/P(0) = %.2e", P40 / P0));
    o.budget(r.seconds, 60.0);
    if (sh.trivial_root) {
      const double fit = growth_rate_fit(r.res.series, 0.0, 10.0, 40.0);
      o.require(std::fabs(fit - *sh.trivial_root) <= 0.15 * std::fabs(*sh.trivial_root),
                fmt("fitted rate on [10,40] %.5f vs leading root %.5f", fit, *sh.trivial_root));
    } else {
      o.require(false, "no licensed trivial-state root to compare against");
    }
  }
  {
    const ToolConfig cfg = load_preset("trivial_unstable");
    const Run r = simulate(cfg);
    const double P0 = r.res.series.P.front(), P40 = value_at(r.res.series, 40.0);
    o.require(P40 >= 5.0 * P0, fmt("trivial_unstable P(40)/P(0) = %.2f (P(0) = %.4f)", P40 / P0, P0));
    o.budget(r.seconds, 60.0);

    ToolConfig full = cfg;
    full.sim.history_init = "0.3*sin(s+pi/3)^2*(10-s)^2";
    const Run big = simulate(full);
    o.info(fmt("same rates from 1000x larger data: P(0) = %.2f, P(40) = %.4f", big.res.series.P.front(),
               value_at(big.res.series, 40.0)));
  }
  {
    const ToolConfig cfg = load_preset("positive_stable");
    const Run r = simulate(cfg);
    const double P60 = value_at(r.res.series, 60.0);
    if (!sh.P_star) {
      o.require(false, "no P* from the equilibrium run");
      return o;
    }
    const double rel = std::fabs(P60 - *sh.P_star) / *sh.P_star;
    o.require(rel <= 0.02, fmt("positive_stable |P(60)-P*|/P* = %.2e (P(60) = %.5f)", rel, P60));
    o.budget(r.seconds, 60.0);

    const RateSet rates = make_rates(cfg);
    const SizeGrid grid = make_grid(cfg);
    const DelayGrid dgrid = make_delay_grid(cfg);
    const EquilibriumSolution eq = equilibrium_at(rates, *sh.P_star, grid);
    const CharacteristicFunction cf(rates, eq, linear_coefficients(rates, eq), dgrid);
    const RootSearch roots = real_roots(cf, cfg.analysis.lambda_lo, cfg.analysis.lambda_hi,
                                        cfg.analysis.lambda_samples);
    if (roots.status != RootSearch::Status::found) {
      o.require(false, "no real root");
      return o;
    }
    // Relaxation towards the level the scheme itself settles at.
    const double fit = growth_rate_fit(r.res.series, P60, 10.0, 30.0);
    o.require(std::fabs(fit - roots.root) <= 0.15 * std::fabs(roots.root),
              fmt("fitted rate of |P-P(60)| on [10,30] %.4f vs largest real root %.4f", fit, roots.root));
  }
  return o;
}

Outcome simulator_physics(Shared&) {
  Outcome o;
  std::string summary;
  const bool ok = run_suite({{"source-file", "*test_simulator.cpp"}}, summary);
  o.require(ok, summary);
  return o;
}

Outcome dsl_suite(Shared&) {
  Outcome o;
  std::string summary;
  const bool ok = run_suite({{"source-file", "*test_ratedsl.cpp"}}, summary);
  o.require(ok, summary);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the shipped presets", "acceptance"};
  std::vector<int> expect_fail;
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail; exit status ignores them")
      ->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  Shared sh;
  sh.dir = fs::temp_directory_path() / ("sizestruct_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(sh.dir);

  const struct {
    const char* title;
    Outcome (*check)(Shared&);
  } criteria[] = {
      {"reproduction numbers at the trivial state", reproduction_numbers},
      {"trivial-state classification and Khat(0)", trivial_classification},
      {"positive equilibrium vs closed form", positive_equilibrium},
      {"structural identities of the characteristic matrix", structural_identities},
      {"scramble-free sign and monotonicity (Kt(0) < 0, non-increasing on [0,50])",
       scramble_free_monotonicity},
      {"simulated dynamics vs spectrum", dynamics},
      {"simulator physics suite", simulator_physics},
      {"expression language suite", dsl_suite},
  };

  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  std::set<int> failed;
  int id = 0;
  for (const auto& c : criteria) {
    ++id;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.check(sh);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) failed.insert(id);
    std::string line = fmt("criterion %d: %s  %s (%.1f s)", id, o.pass ? "PASS" : "FAIL", c.title,
                           seconds_since(t0));
    if (!o.pass && expected.count(id)) line += " [expected]";
    std::cout << line << '\n';
    for (const auto& note : o.notes) std::cout << "    " << note << '\n';
    std::cout.flush();
  }

  std::error_code ec;
  fs::remove_all(sh.dir, ec);

  std::cout << "failed:";
  for (int f : failed) std::cout << ' ' << f;
  std::cout << (failed.empty() ? " none" : "") << "; expected:";
  for (int f : expected) std::cout << ' ' << f;
  std::cout << (expected.empty() ? " none" : "") << '\n';
  return failed == expected ? 0 : 1;
}
