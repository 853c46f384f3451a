#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "cavity/analysis.hpp"
#include "cavity/config.hpp"
#include "cavity/ensemble.hpp"
#include "cavity/histogram.hpp"

namespace cavity {

/// Shortest round-trip text for a double (17 significant digits).
std::string format_double(double value);

/// Writes a header line on construction and one comma-separated row per call.
/// Throws IoError when the file cannot be opened or written.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);

  CsvWriter& cell(std::string_view text);
  CsvWriter& cell(double value);
  CsvWriter& cell(std::size_t value);
  void end_row();
  /// Flushes and checks the stream state.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool row_started_ = false;
};

/// A CSV file read back as text cells, with its header checked.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index; throws SchemaError naming the missing column.
  std::size_t column(std::string_view name) const;
  /// Parses a numeric cell; throws SchemaError naming the column and row.
  double number(std::size_t row, std::string_view name) const;
};

/// Reads a CSV whose header must equal `expected` exactly. Throws IoError for
/// unreadable files and SchemaError for header or row-width mismatches.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected);

// Documented file schemas (see docs/file_formats.md).
extern const std::vector<std::string> kWorkSamplesColumns;
extern const std::vector<std::string> kTrajectoryColumns;
extern const std::vector<std::string> kHistogramColumns;
extern const std::vector<std::string> kCrooksPointsColumns;

/// work_samples.csv: traj_id,direction,W. Forward rows first.
void write_work_samples(const std::filesystem::path& path, std::span<const WorkSample> samples);
std::vector<WorkSample> read_work_samples(const std::filesystem::path& path);

/// histogram.csv: direction,bin_lo,bin_hi,count,density. The backward rows
/// hold the negated backward samples on the forward grid, labelled
/// "backward_negated".
void write_histograms(const std::filesystem::path& path, const CrooksData& crooks);

/// crooks_points.csv: W,log_ratio,weight.
void write_crooks_points(const std::filesystem::path& path, std::span<const CrooksPoint> points);

struct TrajectoryRow {
  std::size_t traj_id;
  Direction direction;
  double t;
  double lambda;
  double x;
  double work;
};

/// trajectories.csv: traj_id,direction,t,lambda,x,work.
void write_trajectories(const std::filesystem::path& path, std::span<const TrajectoryRow> rows);

/// report.json with the run parameters and every report field.
void write_report(const std::filesystem::path& path, const RunConfig& config,
                  const ThermoReport& report);

}  // namespace cavity
