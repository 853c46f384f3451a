#include "cavity/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cavity/errors.hpp"

namespace cavity {

namespace {

const std::set<std::string> kEmitValues{"trajectories", "samples", "histograms",
                                        "crooks",       "report",  "figures"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    const auto item = trim(value.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

double to_double(std::string_view key, std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" +
                      std::string(text) + "'");
  }
  return value;
}

std::uint64_t to_uint(std::string_view key, std::string_view text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("key '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(text) + "'");
  }
  return value;
}

bool to_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("key '" + std::string(key) + "': expected a boolean, got '" +
                    std::string(text) + "'");
}

}  // namespace

ProtocolPair RunConfig::protocols() const {
  return make_protocol_pair(shape, sigma, ramp_centre(), tau);
}

void RunConfig::validate() const {
  params.validate();
  if (!(params.eta > 0.0)) throw ConfigError("eta must be > 0 to simulate the estimate");
  protocols();  // validates tau, sigma, t0
  integrator.validate();
  ensemble.validate();
  if (ensemble.n_traj < 2) throw ConfigError("n_traj must be >= 2 for variance estimates");
  for (const auto& e : emit) {
    if (!kEmitValues.contains(e)) throw ConfigError("unknown emit value '" + e + "'");
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "hbar",   "omega",          "g",           "gamma",        "nbar",
      "eta",    "shape",          "sigma",       "t0",           "tau",
      "dt",     "scheme",         "record_stride", "noise_substeps", "n_traj",
      "seed",   "directions",     "burn_in",     "initial_condition", "workers",
      "output_dir", "samples",    "emit",        "export_trajectories", "quick"};
  return keys;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "hbar") c.params.hbar = to_double(key, value);
  else if (key == "omega") c.params.omega = to_double(key, value);
  else if (key == "g") c.params.g = to_double(key, value);
  else if (key == "gamma") c.params.gamma = to_double(key, value);
  else if (key == "nbar") c.params.nbar = to_double(key, value);
  else if (key == "eta") c.params.eta = to_double(key, value);
  else if (key == "shape") c.shape = parse_ramp_shape(value);
  else if (key == "sigma") c.sigma = to_double(key, value);
  else if (key == "t0") c.t0 = to_double(key, value);
  else if (key == "tau") c.tau = to_double(key, value);
  else if (key == "dt") c.integrator.dt = to_double(key, value);
  else if (key == "scheme") {
    if (value != "euler_maruyama") throw ConfigError("unknown scheme '" + std::string(value) + "'");
    c.integrator.scheme = Scheme::euler_maruyama;
  } else if (key == "record_stride") c.integrator.record_stride = to_uint(key, value);
  else if (key == "noise_substeps") c.integrator.noise_substeps = static_cast<unsigned>(to_uint(key, value));
  else if (key == "n_traj") c.ensemble.n_traj = to_uint(key, value);
  else if (key == "seed") c.ensemble.master_seed = to_uint(key, value);
  else if (key == "directions") {
    c.ensemble.run_forward = c.ensemble.run_backward = false;
    for (const auto& d : split_list(value)) {
      (parse_direction(d) == Direction::forward ? c.ensemble.run_forward : c.ensemble.run_backward) = true;
    }
  } else if (key == "burn_in") c.ensemble.burn_in = to_double(key, value);
  else if (key == "initial_condition") c.ensemble.initial = parse_initial_condition(value);
  else if (key == "workers") c.ensemble.workers = static_cast<unsigned>(to_uint(key, value));
  else if (key == "output_dir") c.output_dir = std::string(value);
  else if (key == "samples") c.samples_path = std::string(value);
  else if (key == "emit") {
    c.emit.clear();
    for (auto& e : split_list(value)) c.emit.insert(std::move(e));
  } else if (key == "export_trajectories") c.export_trajectories = to_uint(key, value);
  else if (key == "quick") c.quick = to_bool(key, value);
  else throw ConfigError("unknown key '" + std::string(key) + "'");
}

std::vector<Setting> parse_config_text(std::string_view text) {
  std::vector<Setting> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(std::string(line), line_no, "expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("", line_no, "missing key");
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
      throw ParseError(std::string(key), line_no, "unknown key");
    }
    out.push_back({std::string(key), std::string(value), line_no});
  }
  return out;
}

std::vector<Setting> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

RunConfig parse_config(const std::vector<Setting>& file_settings,
                       const std::vector<Setting>& overrides) {
  RunConfig config;
  std::optional<std::size_t> explicit_n_traj;
  for (const auto* group : {&file_settings, &overrides}) {
    for (const auto& s : *group) {
      try {
        apply_setting(config, s.key, s.value);
      } catch (const ParseError&) {
        throw;
      } catch (const ConfigError& e) {
        if (s.line > 0) throw ParseError(s.key, s.line, e.what());
        throw ConfigError(std::string("--") + s.key + ": " + e.what());
      }
      if (s.key == "n_traj") explicit_n_traj = config.ensemble.n_traj;
    }
  }
  if (config.quick && !explicit_n_traj) config.ensemble.n_traj = 2000;
  config.validate();
  return config;
}

}  // namespace cavity
