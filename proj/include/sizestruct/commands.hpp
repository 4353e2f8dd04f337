#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sizestruct/config.hpp"
#include "sizestruct/spectrum.hpp"

namespace sizestruct {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitRefused = 3,
  kExitDsl = 4,
  kExitNoEquilibrium = 5,
};

struct Preset {
  std::string_view name;
  std::string_view text;
};

/// Configurations shipped inside the binary.
const std::vector<Preset>& presets();
std::optional<std::string_view> preset_text(std::string_view name);
ToolConfig load_preset(std::string_view name);

/// "%.17g": shortest form that round-trips, fixed across platforms.
std::string format_real(double v);

struct CommandContext {
  ToolConfig cfg;
  std::filesystem::path out_dir;
  Target target = Target::positive;
  std::ostream& out;
  std::ostream& err;
};

int cmd_r0(const CommandContext& ctx);
int cmd_equilibrium(const CommandContext& ctx);
int cmd_spectrum(const CommandContext& ctx);
int cmd_classify(const CommandContext& ctx);
int cmd_simulate(const CommandContext& ctx);
int cmd_dump_config(const CommandContext& ctx);

/// Full command line handling; exceptions are mapped to exit codes here.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sizestruct
