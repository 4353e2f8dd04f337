#include "sizestruct/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sizestruct {

namespace {

constexpr double kNewbornGrowthTolerance = 1e-9;

class Reader {
 public:
  explicit Reader(const std::string& source) : source_(source) {}

  std::string where(const YAML::Mark& mark) const {
    std::ostringstream os;
    os << source_;
    if (!mark.is_null()) os << ':' << mark.line + 1;
    os << ": ";
    return os.str();
  }
  std::string where(const YAML::Node& node) const { return where(node.Mark()); }

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    throw ConfigError(where(node) + msg);
  }

  void require_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
  }

  void check_keys(const YAML::Node& section, const std::string& name,
                  std::initializer_list<std::string_view> allowed) const {
    for (const auto& kv : section) {
      const auto key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(kv.first, "unknown key '" + key + "' in section '" + name + "'");
      }
    }
  }

  double real(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, key + " must be a number");
    double v = 0.0;
    try {
      v = node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, key + " must be a number, got '" + node.Scalar() + "'");
    }
    if (!std::isfinite(v)) fail(node, key + " must be finite");
    return v;
  }

  Eigen::Index count(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, key + " must be an integer");
    long long v = 0;
    try {
      v = node.as<long long>();
    } catch (const YAML::Exception&) {
      fail(node, key + " must be an integer, got '" + node.Scalar() + "'");
    }
    return static_cast<Eigen::Index>(v);
  }

  std::string text(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, key + " must be a string");
    return node.Scalar();
  }

  Expr expression(const YAML::Node& node, const std::string& key) const {
    const std::string src = text(node, key);
    try {
      return parse_expr(src);
    } catch (const ParseError& e) {
      std::ostringstream os;
      os << where(node) << key << ": " << e.what() << " (offset " << e.offset() << " in '" << src
         << "')";
      throw DslError(os.str());
    }
  }

 private:
  const std::string& source_;
};

void read_model(const Reader& rd, const YAML::Node& node, ModelSection& m) {
  rd.require_map(node, "section 'model'");
  rd.check_keys(node, "model", {"gamma", "mu", "beta", "w", "alpha", "theta", "m"});
  for (const char* key : {"gamma", "mu", "beta", "w", "alpha", "theta", "m"}) {
    if (!node[key]) rd.fail(node, std::string("model.") + key + " is required");
  }
  m.gamma = rd.text(node["gamma"], "gamma");
  m.mu = rd.text(node["mu"], "mu");
  m.beta = rd.text(node["beta"], "beta");
  m.w = rd.text(node["w"], "w");
  m.alpha = rd.real(node["alpha"], "alpha");
  m.theta = rd.real(node["theta"], "theta");
  m.m = rd.real(node["m"], "m");
  if (!(m.alpha >= 0.0 && m.alpha < 1.0)) rd.fail(node["alpha"], "alpha must lie in [0, 1)");
  if (!(m.theta > 0.0)) rd.fail(node["theta"], "theta must be positive");
  if (!(m.m > 0.0)) rd.fail(node["m"], "m must be positive");
}

void read_grid(const Reader& rd, const YAML::Node& node, GridSection& g) {
  rd.require_map(node, "section 'grid'");
  rd.check_keys(node, "grid", {"ns", "ntau", "cfl", "sim_ns"});
  if (node["ns"]) g.ns = rd.count(node["ns"], "ns");
  if (node["ntau"]) g.ntau = rd.count(node["ntau"], "ntau");
  if (node["cfl"]) g.cfl = rd.real(node["cfl"], "cfl");
  if (node["sim_ns"]) g.sim_ns = rd.count(node["sim_ns"], "sim_ns");
  if (g.ns < 3) rd.fail(node["ns"], "ns must be at least 3");
  if (g.ntau < 3) rd.fail(node["ntau"], "ntau must be at least 3");
  if (!(g.cfl > 0.0 && g.cfl <= 1.0)) rd.fail(node["cfl"], "cfl must lie in (0, 1]");
  if (g.sim_ns && *g.sim_ns < 3) rd.fail(node["sim_ns"], "sim_ns must be at least 3");
}

void read_analysis(const Reader& rd, const YAML::Node& node, AnalysisSection& a) {
  rd.require_map(node, "section 'analysis'");
  rd.check_keys(node, "analysis",
                {"lambda_lo", "lambda_hi", "lambda_samples", "p_max", "p_samples"});
  if (node["lambda_lo"]) a.lambda_lo = rd.real(node["lambda_lo"], "lambda_lo");
  if (node["lambda_hi"]) a.lambda_hi = rd.real(node["lambda_hi"], "lambda_hi");
  if (node["lambda_samples"]) a.lambda_samples = rd.count(node["lambda_samples"], "lambda_samples");
  if (node["p_max"]) a.p_max = rd.real(node["p_max"], "p_max");
  if (node["p_samples"]) a.p_samples = rd.count(node["p_samples"], "p_samples");
  if (!(a.lambda_lo < a.lambda_hi)) rd.fail(node, "lambda_lo must be below lambda_hi");
  if (a.lambda_samples < 2) rd.fail(node["lambda_samples"], "lambda_samples must be at least 2");
  if (a.p_max && !(*a.p_max > 0.0)) rd.fail(node["p_max"], "p_max must be positive");
  if (a.p_samples < 2) rd.fail(node["p_samples"], "p_samples must be at least 2");
}

void read_sim(const Reader& rd, const YAML::Node& node, SimSection& s) {
  rd.require_map(node, "section 'sim'");
  rd.check_keys(node, "sim",
                {"t_end", "history_init", "stride", "snapshot_times", "history_file",
                 "reference_file"});
  if (node["t_end"]) s.t_end = rd.real(node["t_end"], "t_end");
  if (node["history_init"]) s.history_init = rd.text(node["history_init"], "history_init");
  if (node["stride"]) s.stride = rd.count(node["stride"], "stride");
  if (const auto times = node["snapshot_times"]) {
    if (!times.IsSequence()) rd.fail(times, "snapshot_times must be a list");
    for (const auto& t : times) s.snapshot_times.push_back(rd.real(t, "snapshot_times entry"));
  }
  if (node["history_file"]) s.history_file = rd.text(node["history_file"], "history_file");
  if (node["reference_file"]) s.reference_file = rd.text(node["reference_file"], "reference_file");
  if (!(s.t_end > 0.0)) rd.fail(node["t_end"], "t_end must be positive");
  if (s.stride < 1) rd.fail(node["stride"], "stride must be at least 1");
  for (double t : s.snapshot_times) {
    if (t < 0.0 || t > s.t_end) rd.fail(node["snapshot_times"], "snapshot times must lie in [0, t_end]");
  }
}

void read_output(const Reader& rd, const YAML::Node& node, OutputSection& o) {
  rd.require_map(node, "section 'output'");
  rd.check_keys(node, "output", {"directory"});
  if (node["directory"]) o.directory = rd.text(node["directory"], "directory");
}

// Expressions, variable usage and sign conditions, with line context.
void validate(const Reader& rd, const YAML::Node& root, ToolConfig& cfg) {
  const YAML::Node model = root["model"];
  const Expr gamma = rd.expression(model["gamma"], "gamma");
  const Expr mu = rd.expression(model["mu"], "mu");
  const Expr beta = rd.expression(model["beta"], "beta");
  const Expr w = rd.expression(model["w"], "w");
  RateSet r;
  try {
    r = RateSet::make(gamma, mu, beta, w, cfg.model.alpha, cfg.model.theta, cfg.model.m);
  } catch (const RateError& e) {
    throw DslError(rd.where(model) + e.what());
  }

  const YAML::Node sim = root["sim"];
  const YAML::Node hist = sim ? sim["history_init"] : YAML::Node(YAML::NodeType::Undefined);
  const Expr h = hist ? rd.expression(hist, "history_init") : parse_expr(cfg.sim.history_init);
  const auto allowed = std::uint8_t(Bindings::bit(Variable::s) | Bindings::bit(Variable::delta));
  if ((h.variables() & ~allowed) != 0) {
    throw DslError(rd.where(hist ? hist : root) + "history_init may depend on s and delta only");
  }

  // Sign conditions on a coarse sample of the domain; the analyses re-check
  // what they rely on at their own resolution.
  const SizeGrid grid(std::min<Eigen::Index>(cfg.grid.ns, 201), cfg.model.m);
  const DelayGrid dgrid(std::min<Eigen::Index>(cfg.grid.ntau, 51), cfg.model.theta);
  try {
    validate_rates(r, grid, dgrid, {0.0, 1.0, 10.0}, {0.0, 1.0, 10.0});
  } catch (const RateError& e) {
    rd.fail(model, e.what());
  } catch (const EvalError& e) {
    rd.fail(model, std::string("rate evaluation failed: ") + e.what());
  }
  const double dev = newborn_growth_deviation(r, {0.0, 1.0, 10.0});
  if (dev > kNewbornGrowthTolerance) {
    std::ostringstream os;
    os << rd.where(model["gamma"]) << "warning: gamma(0, P) deviates from 1 by up to " << dev
       << "; the boundary value is used as a density, not a flux";
    cfg.warnings.push_back(os.str());
  }
}

}  // namespace

ToolConfig parse_config(std::string_view text, const std::string& source,
                        const std::filesystem::path& base_dir) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(rd.where(e.mark) + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source + ": configuration must be a mapping of sections");
  rd.check_keys(root, "<top level>", {"model", "grid", "analysis", "sim", "output"});
  if (!root["model"]) throw ConfigError(source + ": section 'model' is required");

  ToolConfig cfg;
  cfg.source = source;
  cfg.base_dir = base_dir;
  read_model(rd, root["model"], cfg.model);
  if (root["grid"]) read_grid(rd, root["grid"], cfg.grid);
  if (root["analysis"]) read_analysis(rd, root["analysis"], cfg.analysis);
  if (root["sim"]) read_sim(rd, root["sim"], cfg.sim);
  if (root["output"]) read_output(rd, root["output"], cfg.output);
  validate(rd, root, cfg);
  return cfg;
}

ToolConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), path.parent_path());
}

std::string dump_config(const ToolConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  auto expr = [&](const char* key, const std::string& v) {
    out << YAML::Key << key << YAML::Value << YAML::DoubleQuoted << v;
  };
  out << YAML::BeginMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  expr("gamma", cfg.model.gamma);
  expr("mu", cfg.model.mu);
  expr("beta", cfg.model.beta);
  expr("w", cfg.model.w);
  out << YAML::Key << "alpha" << YAML::Value << cfg.model.alpha;
  out << YAML::Key << "theta" << YAML::Value << cfg.model.theta;
  out << YAML::Key << "m" << YAML::Value << cfg.model.m;
  out << YAML::EndMap;

  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "ns" << YAML::Value << static_cast<long long>(cfg.grid.ns);
  out << YAML::Key << "ntau" << YAML::Value << static_cast<long long>(cfg.grid.ntau);
  out << YAML::Key << "cfl" << YAML::Value << cfg.grid.cfl;
  if (cfg.grid.sim_ns) {
    out << YAML::Key << "sim_ns" << YAML::Value << static_cast<long long>(*cfg.grid.sim_ns);
  }
  out << YAML::EndMap;

  out << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lambda_lo" << YAML::Value << cfg.analysis.lambda_lo;
  out << YAML::Key << "lambda_hi" << YAML::Value << cfg.analysis.lambda_hi;
  out << YAML::Key << "lambda_samples" << YAML::Value
      << static_cast<long long>(cfg.analysis.lambda_samples);
  if (cfg.analysis.p_max) out << YAML::Key << "p_max" << YAML::Value << *cfg.analysis.p_max;
  out << YAML::Key << "p_samples" << YAML::Value << static_cast<long long>(cfg.analysis.p_samples);
  out << YAML::EndMap;

  out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "t_end" << YAML::Value << cfg.sim.t_end;
  expr("history_init", cfg.sim.history_init);
  out << YAML::Key << "stride" << YAML::Value << static_cast<long long>(cfg.sim.stride);
  out << YAML::Key << "snapshot_times" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double t : cfg.sim.snapshot_times) out << t;
  out << YAML::EndSeq;
  if (cfg.sim.history_file) {
    out << YAML::Key << "history_file" << YAML::Value << YAML::DoubleQuoted << *cfg.sim.history_file;
  }
  if (cfg.sim.reference_file) {
    out << YAML::Key << "reference_file" << YAML::Value << YAML::DoubleQuoted
        << *cfg.sim.reference_file;
  }
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "directory" << YAML::Value << YAML::DoubleQuoted << cfg.output.directory;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

RateSet make_rates(const ToolConfig& cfg) {
  const auto& m = cfg.model;
  return RateSet::parse(m.gamma, m.mu, m.beta, m.w, m.alpha, m.theta, m.m);
}

SizeGrid make_grid(const ToolConfig& cfg) { return SizeGrid(cfg.grid.ns, cfg.model.m); }

DelayGrid make_delay_grid(const ToolConfig& cfg) {
  return DelayGrid(cfg.grid.ntau, cfg.model.theta);
}

StabilityOptions make_stability_options(const ToolConfig& cfg) {
  StabilityOptions o;
  o.lambda_lo = cfg.analysis.lambda_lo;
  o.lambda_hi = cfg.analysis.lambda_hi;
  o.lambda_samples = cfg.analysis.lambda_samples;
  o.P_max = cfg.analysis.p_max;
  o.population_samples = cfg.analysis.p_samples;
  return o;
}

Eigen::VectorXd read_profile_csv(const std::filesystem::path& path, const SizeGrid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open profile file");
  std::string line;
  if (!std::getline(in, line) || line.rfind("s,", 0) != 0) {
    throw ConfigError(path.string() + ":1: profile CSV must start with an 's,<profile>' header");
  }
  std::vector<double> xs, ys;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    char* end_a = nullptr;
    char* end_b = nullptr;
    const double x = std::strtod(a.c_str(), &end_a);
    const double y = std::strtod(b.c_str(), &end_b);
    if (a.empty() || b.empty() || *end_a != '\0' || *end_b != '\0') {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    if (!xs.empty() && !(x > xs.back())) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": s must increase");
    }
    xs.push_back(x);
    ys.push_back(y);
  }
  if (xs.size() < 2) throw ConfigError(path.string() + ": profile needs at least two rows");

  Eigen::VectorXd out(grid.size());
  const double slack = 1e-9 * std::max(1.0, std::fabs(xs.back()));
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double s = grid.node(i);
    if (s < xs.front() - slack || s > xs.back() + slack) {
      throw ConfigError(path.string() + ": profile does not cover the simulation grid");
    }
    const auto it = std::upper_bound(xs.begin(), xs.end(), s);
    const std::size_t k = std::clamp<std::size_t>(it - xs.begin(), 1, xs.size() - 1);
    const double t = std::clamp((s - xs[k - 1]) / (xs[k] - xs[k - 1]), 0.0, 1.0);
    out(i) = ys[k - 1] + t * (ys[k] - ys[k - 1]);
  }
  return out;
}

SimConfig make_sim_config(const ToolConfig& cfg) {
  SimConfig sc;
  sc.rates = make_rates(cfg);
  sc.grid = SizeGrid(cfg.grid.sim_ns.value_or(cfg.grid.ns), cfg.model.m);
  sc.t_end = cfg.sim.t_end;
  sc.cfl = cfg.grid.cfl;
  sc.history_init = parse_expr(cfg.sim.history_init);
  sc.stride = cfg.sim.stride;
  sc.snapshot_times = cfg.sim.snapshot_times;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : cfg.base_dir / path;
  };
  if (cfg.sim.history_file) sc.history_profile = read_profile_csv(resolve(*cfg.sim.history_file), sc.grid);
  if (cfg.sim.reference_file) sc.reference = read_profile_csv(resolve(*cfg.sim.reference_file), sc.grid);
  return sc;
}

}  // namespace sizestruct
