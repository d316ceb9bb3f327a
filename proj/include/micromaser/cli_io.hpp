#ifndef MICROMASER_CLI_IO_HPP
#define MICROMASER_CLI_IO_HPP

// Configuration, CSV emission and the four run commands behind the CLI.
// Commands build every output in memory; nothing touches the disk until
// write_outputs().

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "micromaser/system_params.hpp"

namespace micromaser {

enum class Command { steady, sweep, trajectory, trap };

const char* to_string(Command c);

inline constexpr const char* kFormatVersion = "1";

struct RunConfig {
  Command command = Command::steady;
  std::string format_version = kFormatVersion;
  std::string label;
  std::string note;  // e.g. which values are inferred rather than measured

  SystemParams params;
  std::string mode = "maser";   // maser | laser
  std::string method = "auto";  // auto | analytic | fixed_point
  bool maser_atomic_decay = false;

  // Where derived values came from; echoed in config.resolved.json.
  std::optional<double> quality_factor;
  std::optional<double> frequency_hz;
  std::optional<double> temperature_k;
  std::optional<double> N_given;

  long long n_atoms = 10000;
  std::uint64_t seed = 1;
  std::vector<long long> snapshots;
  long long burn_in = 1000;

  std::vector<double> D_grid;
  double N_fixed = 0;

  Index n_grid_min = 0;
  Index n_grid_max = 30;
  double fock_tolerance = 0.05;

  std::string output_dir;
  unsigned threads = 0;

  /// The resolved configuration including derived N, D, gτ, κ/g, γ/g.
  nlohmann::ordered_json resolved() const;
};

/// Parses and, unless `validate` is false, validates. Unknown keys and
/// malformed values always throw ValidationError.
RunConfig parse_config(const nlohmann::json& doc, Command command, bool validate = true);
RunConfig load_config(const std::filesystem::path& path, Command command, bool validate = true);
/// Re-runs the physical validation (used after command-line overrides).
void validate_config(const RunConfig& cfg);

// ---------------------------------------------------------------- CSV

/// Shortest round-trippable text is not required; 17 significant digits is.
std::string format_number(double x);
std::string format_optional(const std::optional<double>& x);
inline constexpr const char* kUndefined = "undefined";

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Comma separated, header row, LF line endings.
  std::string str() const;
  static CsvTable parse(const std::string& text);
  std::size_t column(const std::string& name) const;
};

// ---------------------------------------------------------------- commands

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandOutput {
  std::vector<OutputFile> files;
  int exit_code = 0;
  std::string message;

  const OutputFile* find(const std::string& name) const;
};

CommandOutput cli_steady(const RunConfig& cfg);
CommandOutput cli_sweep(const RunConfig& cfg);
CommandOutput cli_trajectory(const RunConfig& cfg);
CommandOutput cli_trap(const RunConfig& cfg);
CommandOutput run_command(const RunConfig& cfg);

/// Creates `dir` and writes every file (each via a temporary + rename).
void write_outputs(const std::filesystem::path& dir, const CommandOutput& out);

}  // namespace micromaser

#endif  // MICROMASER_CLI_IO_HPP
