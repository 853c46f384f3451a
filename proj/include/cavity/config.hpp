#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cavity/ensemble.hpp"
#include "cavity/model.hpp"
#include "cavity/sde.hpp"

namespace cavity {

/// Everything a pipeline run depends on. Output files are a pure function of
/// this struct.
struct RunConfig {
  PhysicalParams params;
  RampShape shape = RampShape::sigmoid;
  double sigma = 2.0;
  std::optional<double> t0;  ///< defaults to tau / 2
  double tau = 10.0;
  IntegratorConfig integrator;
  EnsembleConfig ensemble;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> samples_path;  ///< analyze input
  std::set<std::string> emit{"samples", "histograms", "crooks", "report"};
  std::size_t export_trajectories = 10;
  bool quick = false;

  double ramp_centre() const { return t0.value_or(0.5 * tau); }
  ProtocolPair protocols() const;
  std::filesystem::path samples_file() const {
    return samples_path.value_or(output_dir / "work_samples.csv");
  }
  bool emits(std::string_view what) const { return emit.contains(std::string(what)); }

  /// Re-checks every numeric bound; throws ConfigError.
  void validate() const;
};

/// Recognised flat keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Applies one key=value pair. Throws ConfigError for unknown keys or
/// malformed values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

struct Setting {
  std::string key;
  std::string value;
  std::size_t line = 0;  ///< 0 for command-line flags
};

/// Parses `key = value` lines; '#' starts a comment. Throws ParseError with the
/// offending key and line.
std::vector<Setting> parse_config_text(std::string_view text);
std::vector<Setting> read_config_file(const std::filesystem::path& path);

/// File settings first, then overrides (flags win), then validation.
RunConfig parse_config(const std::vector<Setting>& file_settings,
                       const std::vector<Setting>& overrides);

}  // namespace cavity
