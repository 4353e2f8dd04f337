#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sizestruct/rates.hpp"
#include "sizestruct/simulator.hpp"
#include "sizestruct/spectrum.hpp"

namespace sizestruct {

/// Malformed or out-of-range configuration. The message carries
/// "<source>:<line>: " when the offending node is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An expression string in the configuration that fails to parse or uses a
/// variable its rate may not depend on.
class DslError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelSection {
  std::string gamma, mu, beta, w;
  double alpha = 0.0;
  double theta = 1.0;
  double m = 1.0;
  bool operator==(const ModelSection&) const = default;
};

struct GridSection {
  Eigen::Index ns = 2001;
  Eigen::Index ntau = 501;
  double cfl = 1.0;
  /// Size nodes for `simulate`; ns when unset.
  std::optional<Eigen::Index> sim_ns;
  bool operator==(const GridSection&) const = default;
};

struct AnalysisSection {
  double lambda_lo = -5.0;
  double lambda_hi = 50.0;
  Eigen::Index lambda_samples = 2000;
  std::optional<double> p_max;
  Eigen::Index p_samples = kDefaultPopulationSamples;
  bool operator==(const AnalysisSection&) const = default;
};

struct SimSection {
  double t_end = 1.0;
  std::string history_init = "0";
  Eigen::Index stride = 1;
  std::vector<double> snapshot_times;
  /// CSV with columns s and p_star (as written by `equilibrium`), or s and p;
  /// replaces history_init by a delta-independent profile.
  std::optional<std::string> history_file;
  /// Same format; the `dist` column measures the L1 distance to it.
  std::optional<std::string> reference_file;
  bool operator==(const SimSection&) const = default;
};

struct OutputSection {
  std::string directory = ".";
  bool operator==(const OutputSection&) const = default;
};

struct ToolConfig {
  ModelSection model;
  GridSection grid;
  AnalysisSection analysis;
  SimSection sim;
  OutputSection output;

  /// Where the text came from ("path" or "preset:<name>") and the directory
  /// relative file references resolve against. Not part of equality.
  std::string source;
  std::filesystem::path base_dir;
  std::vector<std::string> warnings;

  bool operator==(const ToolConfig& o) const {
    return model == o.model && grid == o.grid && analysis == o.analysis && sim == o.sim &&
           output == o.output;
  }
};

/// Parses and validates YAML text. Unknown sections or keys are rejected.
ToolConfig parse_config(std::string_view text, const std::string& source,
                        const std::filesystem::path& base_dir = ".");
ToolConfig load_config(const std::filesystem::path& path);

/// YAML rendering that parse_config reads back to an equal ToolConfig.
std::string dump_config(const ToolConfig& cfg);

RateSet make_rates(const ToolConfig& cfg);
SizeGrid make_grid(const ToolConfig& cfg);
DelayGrid make_delay_grid(const ToolConfig& cfg);
StabilityOptions make_stability_options(const ToolConfig& cfg);
/// Reads history_file / reference_file and resamples them onto the
/// simulation grid by linear interpolation.
SimConfig make_sim_config(const ToolConfig& cfg);

/// Profile column from an `s,...` CSV, linearly interpolated onto `grid`.
Eigen::VectorXd read_profile_csv(const std::filesystem::path& path, const SizeGrid& grid);

}  // namespace sizestruct
