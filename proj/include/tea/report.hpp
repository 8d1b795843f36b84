#pragma once

// Machine-readable reports. CSV output always starts with a header row and
// prints reals with 17 significant digits; JSON keeps a fixed key order.
// Neither format carries timestamps, so identical inputs give identical bytes.

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "tea/drift_metrics.hpp"
#include "tea/norm_analysis.hpp"

namespace tea {

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  Metric metric = Metric::l2;
  double value = 0.0;
};

struct SweepResults {
  std::vector<SweepRow> rows;
};

/// Pairwise set distances together with the names of the sets involved.
struct DriftReport {
  std::vector<std::string> set_names;
  MetricConfig config;
  PairwiseMatrix matrix;
};

using Report = std::variant<DriftReport, NormHistogram, DriftTrajectory, SweepResults>;

enum class ReportFormat { json, csv };

/// Picks the format from the file extension: ".csv" gives csv, anything else json.
ReportFormat format_for_path(const std::filesystem::path& path);

std::string format_real(double value);
std::string render_report(const Report& report, ReportFormat format);
void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace tea
