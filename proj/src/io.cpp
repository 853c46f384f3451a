#include "cavity/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "cavity/errors.hpp"

namespace cavity {

const std::vector<std::string> kWorkSamplesColumns{"traj_id", "direction", "W"};
const std::vector<std::string> kTrajectoryColumns{"traj_id", "direction", "t", "lambda", "x", "work"};
const std::vector<std::string> kHistogramColumns{"direction", "bin_lo", "bin_hi", "count", "density"};
const std::vector<std::string> kCrooksPointsColumns{"W", "log_ratio", "weight"};

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw IoError("cannot format number");
  return std::string(buf.data(), ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  for (auto name : header) cell(name);
  end_row();
}

CsvWriter& CsvWriter::cell(std::string_view text) {
  if (row_started_) out_.put(',');
  out_.write(text.data(), static_cast<std::streamsize>(text.size()));
  row_started_ = true;
  return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(format_double(value)); }

CsvWriter& CsvWriter::cell(std::size_t value) { return cell(std::to_string(value)); }

void CsvWriter::end_row() {
  out_.put('\n');
  row_started_ = false;
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw IoError("write to " + path_.string() + " failed");
  out_.close();
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw SchemaError(std::string(name), "column missing");
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  const std::string& text = rows.at(row)[column(name)];
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw SchemaError(std::string(name),
                      "row " + std::to_string(row + 1) + ": not a number: '" + text + "'");
  }
  return value;
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(expected.empty() ? "" : expected.front(), "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_row(line);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= table.header.size()) throw SchemaError(expected[i], "column missing");
    if (table.header[i] != expected[i]) {
      throw SchemaError(table.header[i], "expected column '" + expected[i] + "'");
    }
  }
  if (table.header.size() > expected.size()) {
    throw SchemaError(table.header[expected.size()], "unexpected extra column");
  }
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_row(line);
    if (cells.size() != table.header.size()) {
      const std::string& col = cells.size() < table.header.size() ? table.header[cells.size()]
                                                                   : table.header.back();
      throw SchemaError(col, "row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

void write_work_samples(const std::filesystem::path& path, std::span<const WorkSample> samples) {
  CsvWriter csv(path, {"traj_id", "direction", "W"});
  for (const auto& s : samples) {
    csv.cell(s.traj_id).cell(to_string(s.direction)).cell(s.work);
    csv.end_row();
  }
  csv.close();
}

std::vector<WorkSample> read_work_samples(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path, kWorkSamplesColumns);
  std::vector<WorkSample> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    WorkSample s{};
    const auto& id = cells[0];
    const auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), s.traj_id);
    if (ec != std::errc{} || ptr != id.data() + id.size()) {
      throw SchemaError("traj_id", "row " + std::to_string(r + 1) + ": not an integer: '" + id + "'");
    }
    try {
      s.direction = parse_direction(cells[1]);
    } catch (const std::exception&) {
      throw SchemaError("direction", "row " + std::to_string(r + 1) + ": unknown direction '" +
                                         cells[1] + "'");
    }
    s.work = table.number(r, "W");
    if (!std::isfinite(s.work)) {
      throw SchemaError("W", "row " + std::to_string(r + 1) + ": non-finite work");
    }
    out.push_back(s);
  }
  return out;
}

void write_histograms(const std::filesystem::path& path, const CrooksData& crooks) {
  CsvWriter csv(path, {"direction", "bin_lo", "bin_hi", "count", "density"});
  const auto emit = [&](std::string_view label, const Histogram& h) {
    for (std::size_t i = 0; i < h.n_bins(); ++i) {
      csv.cell(label).cell(h.edges[i]).cell(h.edges[i + 1]).cell(h.counts[i]).cell(h.density[i]);
      csv.end_row();
    }
  };
  emit("forward", crooks.forward);
  emit("backward_negated", crooks.backward_negated);
  csv.close();
}

void write_crooks_points(const std::filesystem::path& path, std::span<const CrooksPoint> points) {
  CsvWriter csv(path, {"W", "log_ratio", "weight"});
  for (const auto& p : points) {
    csv.cell(p.w).cell(p.log_ratio).cell(p.weight);
    csv.end_row();
  }
  csv.close();
}

void write_trajectories(const std::filesystem::path& path, std::span<const TrajectoryRow> rows) {
  CsvWriter csv(path, {"traj_id", "direction", "t", "lambda", "x", "work"});
  for (const auto& r : rows) {
    csv.cell(r.traj_id).cell(to_string(r.direction)).cell(r.t).cell(r.lambda).cell(r.x).cell(r.work);
    csv.end_row();
  }
  csv.close();
}

void write_report(const std::filesystem::path& path, const RunConfig& config,
                  const ThermoReport& r) {
  using json = nlohmann::ordered_json;
  const auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  const PhysicalParams& p = config.params;
  json doc;
  doc["params"] = {{"hbar", p.hbar},
                   {"omega", p.omega},
                   {"g", p.g},
                   {"gamma", p.gamma},
                   {"nbar", p.nbar},
                   {"eta", p.eta},
                   {"shape", std::string(to_string(config.shape))},
                   {"sigma", config.sigma},
                   {"t0", config.ramp_centre()},
                   {"tau", config.tau},
                   {"dt", config.integrator.dt},
                   {"initial_condition", std::string(to_string(config.ensemble.initial))}};
  doc["beta_eff_analytic"] = num(r.beta_eff_analytic);
  doc["beta_hat"] = num(r.beta_hat);
  doc["beta_hat_stderr"] = num(r.beta_hat_stderr);
  doc["delta_F_analytic"] = num(r.delta_F_analytic);
  doc["delta_F_hat"] = num(r.delta_F_hat);
  doc["mean_W_F"] = num(r.mean_W_F);
  doc["var_W_F"] = num(r.var_W_F);
  doc["sigma_avg_analytic"] = num(r.sigma_avg_analytic);
  doc["sigma_avg_kl"] = num(r.sigma_avg_kl);
  doc["fisher_info"] = num(r.fisher_info);
  doc["cramer_rao_bound"] = num(r.cramer_rao_bound);
  doc["tur_margin"] = num(r.tur_margin);
  doc["info_margin"] = num(r.info_margin);
  doc["n_traj"] = config.ensemble.n_traj;
  doc["seed"] = config.ensemble.master_seed;
  doc["diagnostics"] = {{"mean_work_analytic", num(r.mean_work_analytic)},
                        {"se_W_F", num(r.se_W_F)},
                        {"mean_W_B", num(r.mean_W_B)},
                        {"var_W_B", num(r.var_W_B)},
                        {"n_forward", r.n_forward},
                        {"n_backward", r.n_backward},
                        {"crooks_r_squared", num(r.crooks_r_squared)},
                        {"crooks_bins", r.crooks_bins},
                        {"crooks_degenerate", r.crooks_degenerate},
                        {"sigma_avg_kl_gaussian", num(r.sigma_avg_kl_gaussian)},
                        {"kl_coverage", num(r.kl_coverage)},
                        {"exp_neg_sigma_avg", num(r.exp_neg_sigma_avg)},
                        {"fisher_info_gaussian", num(r.fisher_info_gaussian)},
                        {"tur_snr_margin", num(r.tur_snr_margin)},
                        {"tur_margin_measured", num(r.tur_margin_measured)},
                        {"info_margin_measured", num(r.info_margin_measured)}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace cavity
