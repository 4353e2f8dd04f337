#include "sizestruct/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sizestruct/equilibrium.hpp"
#include "sizestruct/simulator.hpp"

namespace sizestruct {

// Defined in the generated presets source.
extern const std::vector<Preset> kShippedPresets;

const std::vector<Preset>& presets() { return kShippedPresets; }

std::optional<std::string_view> preset_text(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p.text;
  }
  return std::nullopt;
}

ToolConfig load_preset(std::string_view name) {
  const auto text = preset_text(name);
  if (!text) {
    std::string known;
    for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + std::string(p.name);
    throw ConfigError("unknown preset '" + std::string(name) + "' (available: " + known + ")");
  }
  return parse_config(*text, "preset:" + std::string(name), ".");
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

class NoEquilibrium : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string short_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::ofstream open_csv(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError(path.string() + ": cannot open output file");
  return f;
}

void line(std::ostream& os, const char* key, double v) { os << key << ": " << format_real(v) << '\n'; }

EquilibriumSolution positive_equilibrium(const CommandContext& ctx, const RateSet& r,
                                         const SizeGrid& grid, const DelayGrid& dgrid,
                                         std::vector<double>* roots) {
  const double P_max =
      ctx.cfg.analysis.p_max.value_or(default_population_bound(r, grid, dgrid));
  const EquilibriumSearch search =
      solve_equilibrium(r, grid, dgrid, P_max, ctx.cfg.analysis.p_samples);
  if (roots) *roots = search.roots;
  if (!search.solution) {
    throw NoEquilibrium("no positive equilibrium found on (0, " + format_real(P_max) + "]");
  }
  return *search.solution;
}

}  // namespace

int cmd_r0(const CommandContext& ctx) {
  const RateSet r = make_rates(ctx.cfg);
  const double R0 = reproduction_number_trivial(r, make_grid(ctx.cfg), make_delay_grid(ctx.cfg));
  auto f = open_csv(ctx.out_dir, "r0.csv");
  f << "ns,ntau,R0\n" << ctx.cfg.grid.ns << ',' << ctx.cfg.grid.ntau << ',' << format_real(R0) << '\n';
  line(ctx.out, "R0", R0);
  return kExitOk;
}

int cmd_equilibrium(const CommandContext& ctx) {
  const RateSet r = make_rates(ctx.cfg);
  const SizeGrid grid = make_grid(ctx.cfg);
  std::vector<double> roots;
  const EquilibriumSolution eq = positive_equilibrium(ctx, r, grid, make_delay_grid(ctx.cfg), &roots);
  auto f = open_csv(ctx.out_dir, "equilibrium.csv");
  f << "s,p_star,Q_star,Pi\n";
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    f << format_real(grid.node(i)) << ',' << format_real(eq.p_star(i)) << ','
      << format_real(eq.Q_star(i)) << ',' << format_real(eq.Pi_star(i)) << '\n';
  }
  line(ctx.out, "P_star", eq.P_star);
  if (roots.size() > 1) {
    ctx.out << "equilibria:";
    for (double p : roots) ctx.out << ' ' << format_real(p);
    ctx.out << '\n';
  }
  return kExitOk;
}

int cmd_spectrum(const CommandContext& ctx) {
  const RateSet r = make_rates(ctx.cfg);
  const SizeGrid grid = make_grid(ctx.cfg);
  const DelayGrid dgrid = make_delay_grid(ctx.cfg);
  const EquilibriumSolution eq = ctx.target == Target::trivial
                                     ? trivial_equilibrium(r, grid)
                                     : positive_equilibrium(ctx, r, grid, dgrid, nullptr);
  const CharacteristicFunction cf(r, eq, linear_coefficients(r, eq), dgrid);
  const auto& a = ctx.cfg.analysis;
  const KCurve curve = sample_char_det(cf, a.lambda_lo, a.lambda_hi, a.lambda_samples);

  auto f = open_csv(ctx.out_dir, "kcurve.csv");
  f << "lambda,K\n";
  const bool need_zero = a.lambda_lo < 0.0 && a.lambda_hi > 0.0 && !(curve.lambda.array() == 0.0).any();
  bool zero_written = !need_zero;
  for (Eigen::Index i = 0; i < curve.lambda.size(); ++i) {
    if (!zero_written && curve.lambda(i) > 0.0) {
      f << format_real(0.0) << ',' << format_real(cf.det(0.0)) << '\n';
      zero_written = true;
    }
    f << format_real(curve.lambda(i)) << ',' << format_real(curve.K(i)) << '\n';
  }

  const Positivity pos = positivity_check(cf);
  ctx.out << "target: " << to_string(ctx.target) << '\n';
  if (!eq.trivial) line(ctx.out, "P_star", eq.P_star);
  line(ctx.out, "K0", cf.det(0.0));
  ctx.out << "positivity: " << (pos.holds ? "true" : "false") << '\n';
  line(ctx.out, "positivity_margin", pos.margin);
  const RootSearch root = leading_root(cf, pos, a.lambda_lo, a.lambda_hi, a.lambda_samples);
  switch (root.status) {
    case RootSearch::Status::found:
      line(ctx.out, "leading_root", root.root);
      return kExitOk;
    case RootSearch::Status::none_found:
      ctx.out << "leading_root: none found on [" << format_real(a.lambda_lo) << ", "
              << format_real(a.lambda_hi) << "]\n";
      return kExitOk;
    case RootSearch::Status::refused:
      break;
  }
  ctx.out << "leading_root: refused\nverdict: indeterminate\n";
  ctx.err << "positivity fails (minimum " << format_real(pos.margin) << " at s = "
          << format_real(pos.worst_s) << "); no real root is claimed\n";
  return kExitRefused;
}

int cmd_classify(const CommandContext& ctx) {
  const StabilityVerdict v = classify(make_rates(ctx.cfg), ctx.target, make_grid(ctx.cfg),
                                      make_delay_grid(ctx.cfg), make_stability_options(ctx.cfg));
  ctx.out << to_text(v);
  return kExitOk;
}

int cmd_simulate(const CommandContext& ctx) {
  const SimConfig sc = make_sim_config(ctx.cfg);
  const SimResult res = run(sc);
  {
    auto f = open_csv(ctx.out_dir, "timeseries.csv");
    f << "t,P,recruitment,dist\n";
    const auto& s = res.series;
    for (std::size_t k = 0; k < s.t.size(); ++k) {
      f << format_real(s.t[k]) << ',' << format_real(s.P[k]) << ',' << format_real(s.recruitment[k])
        << ',' << format_real(s.dist[k]) << '\n';
    }
  }
  for (const auto& snap : res.snapshots) {
    auto f = open_csv(ctx.out_dir, "snapshot_t" + short_real(snap.requested) + ".csv");
    f << "s,p\n";
    for (Eigen::Index i = 0; i < sc.grid.size(); ++i) {
      f << format_real(sc.grid.node(i)) << ',' << format_real(snap.p(i)) << '\n';
    }
  }
  line(ctx.out, "dt", res.dt);
  ctx.out << "levels: " << res.levels << '\n';
  ctx.out << "records: " << res.series.t.size() << '\n';
  line(ctx.out, "t_final", res.series.t.back());
  line(ctx.out, "P_initial", res.series.P.front());
  line(ctx.out, "P_final", res.series.P.back());
  return kExitOk;
}

int cmd_dump_config(const CommandContext& ctx) {
  ctx.out << dump_config(ctx.cfg);
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability analysis and simulation of size-structured populations with "
               "hierarchical competition and distributed birth delay",
               "sizestruct"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, preset, out_dir, target = "positive";
  auto* cfg_opt = app.add_option("--config", config_path, "YAML configuration file");
  auto* preset_opt = app.add_option("--seed-preset", preset, "Use a shipped configuration");
  cfg_opt->excludes(preset_opt);
  app.add_option("--out", out_dir, "Output directory (overrides output.directory)");
  app.add_option("--target", target, "Stationary state for spectrum/classify")
      ->check(CLI::IsMember({"trivial", "positive"}));

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const CommandContext&);
  };
  const Entry entries[] = {
      {"r0", "R(0,0) at the trivial state; writes r0.csv", cmd_r0},
      {"equilibrium", "Positive stationary state; writes equilibrium.csv", cmd_equilibrium},
      {"spectrum", "Characteristic determinant on the real line; writes kcurve.csv", cmd_spectrum},
      {"classify", "Linear stability verdict", cmd_classify},
      {"simulate", "Upwind simulation; writes timeseries.csv and snapshots", cmd_simulate},
      {"dump-config", "Print the effective configuration", cmd_dump_config},
      {"list-presets", "Print the names of the shipped configurations", nullptr},
  };
  for (const auto& e : entries) app.add_subcommand(e.name, e.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const CLI::App* sub = app.get_subcommands().front();
  if (sub->get_name() == "list-presets") {
    for (const auto& p : presets()) out << p.name << '\n';
    return kExitOk;
  }

  try {
    if (config_path.empty() == preset.empty()) {
      throw ConfigError("exactly one of --config or --seed-preset is required");
    }
    ToolConfig cfg = preset.empty() ? load_config(config_path) : load_preset(preset);
    for (const auto& w : cfg.warnings) err << w << '\n';
    const std::filesystem::path dir = out_dir.empty() ? cfg.output.directory : out_dir;
    const CommandContext ctx{std::move(cfg), dir,
                             target == "trivial" ? Target::trivial : Target::positive, out, err};
    for (const auto& e : entries) {
      if (sub->get_name() == e.name) return e.fn(ctx);
    }
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DslError& e) {
    err << "expression error: " << e.what() << '\n';
    return kExitDsl;
  } catch (const ParseError& e) {
    err << "expression error: " << e.what() << '\n';
    return kExitDsl;
  } catch (const NoEquilibrium& e) {
    err << e.what() << '\n';
    return kExitNoEquilibrium;
  } catch (const NumericsError& e) {
    err << "numerical refusal: " << e.what() << '\n';
    return kExitRefused;
  } catch (const RateError& e) {
    err << "numerical refusal: " << e.what() << '\n';
    return kExitRefused;
  } catch (const EvalError& e) {
    err << "numerical refusal: " << e.what() << '\n';
    return kExitRefused;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"sizestruct"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace sizestruct
