#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptqm/defaults.hpp"
#include "ptqm/matrix_models.hpp"
#include "ptqm/numerics.hpp"

namespace ptqm::cli {

enum class Command { spectrum, verify, ckernel, two_level, sweep };
enum class Format { json, csv };
enum class Backend { spectral, shooting };

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int verification_failed = 1;
inline constexpr int config = 2;
inline constexpr int numerical = 3;
inline constexpr int phase = 4;
}  // namespace exit_code

struct RunConfig {
  Command command = Command::spectrum;
  double nu = 0.0;
  int levels = defaults::kLevels;
  int basis_size = defaults::kBasisSize;
  int grid_points = defaults::kGridPoints;
  double grid_extent = defaults::kGridExtent;
  std::optional<double> contour_shift;
  Backend backend = Backend::spectral;
  bool require_unbroken = false;

  TwoLevelParams params;
  double s_min = 0.0, s_max = 1.0;
  double t_min = 0.0, t_max = 1.0;
  int s_resolution = 5;
  int t_resolution = 5;
  std::string boundary_path;  // sweep only; empty means none

  std::string output_path = "-";
  // Unset: csv for sweep, json otherwise.
  std::optional<Format> format;
  Tolerances tolerances;

  Format resolved_format() const;
  /// Throws Error(invalid_argument) on out-of-range fields.
  void validate() const;
};

struct FileOutput {
  std::string path;
  std::string text;
};

struct RunResult {
  int exit_code = exit_code::ok;
  std::string text;                 // goes to output_path
  std::vector<FileOutput> extra;    // side files (sweep boundary)
};

RunResult run_spectrum(const RunConfig& config);
RunResult run_verify(const RunConfig& config);
RunResult run_ckernel(const RunConfig& config);
RunResult run_two_level(const RunConfig& config);
RunResult run_sweep(const RunConfig& config);

/// Dispatches on config.command; library errors become exit codes with a
/// message on `err`.
RunResult run(const RunConfig& config, std::ostream& err);

/// Writes text to path, or to `out` for "-". Returns exit_code::numerical on
/// I/O failure after reporting on `err`.
int emit_output(const std::string& text, const std::string& path, std::ostream& out, std::ostream& err);

/// Sorted keys, two-space indent, 17 significant digits, non-finite -> null.
std::string dump_json(const nlohmann::json& value);

/// "%.17g"; non-finite values print as nan/inf.
std::string format_double(double x);

/// Parses argv and runs; returns the process exit code.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ptqm::cli
