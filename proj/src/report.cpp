#include "tea/report.hpp"

#include <fmt/format.h>

#include "json.hpp"
#include "tea/io_formats.hpp"

namespace tea {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void csv_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_field(fields[i]);
  }
  out += '\n';
}

ordered_json config_json(const MetricConfig& c) {
  ordered_json j;
  j["metric"] = std::string(to_string(c.metric));
  j["temperature"] = c.temperature;
  j["covariance_mode"] = std::string(to_string(c.covariance_mode));
  j["shrinkage_lambda"] = c.shrinkage_lambda;
  j["similarity"] = std::string(to_string(c.similarity));
  j["exclude_self"] = c.exclude_self;
  j["squared_l2"] = c.squared_l2;
  j["mahalanobis_reference"] =
      c.mahalanobis_reference == MahalanobisReference::second ? "second" : "first";
  return j;
}

std::string level_name(TrajectoryLevel level) {
  return level == TrajectoryLevel::token ? "token" : "prompt";
}

// --- JSON ------------------------------------------------------------------

ordered_json to_json(const DriftReport& r) {
  ordered_json j;
  j["sets"] = r.set_names;
  j["config"] = config_json(r.config);
  ordered_json cells = ordered_json::array();
  for (std::size_t a = 0; a < r.matrix.size; ++a) {
    for (std::size_t b = 0; b < r.matrix.size; ++b) {
      const auto& cell = r.matrix.at(a, b);
      if (!cell.result && cell.error.empty()) continue;
      ordered_json c;
      c["set_a"] = r.set_names.at(a);
      c["set_b"] = r.set_names.at(b);
      c["kind"] = a == b ? "intra" : "inter";
      if (cell.result) {
        c["value"] = cell.result->value;
        c["n_a"] = cell.result->n_p;
        c["n_b"] = cell.result->n_q;
        c["notes"] = cell.result->notes;
      } else {
        c["value"] = nullptr;
        c["error"] = cell.error;
      }
      cells.push_back(std::move(c));
    }
  }
  j["cells"] = std::move(cells);
  return j;
}

ordered_json to_json(const NormHistogram& h) {
  ordered_json j;
  j["bin_edges"] = h.bin_edges;
  j["counts"] = h.counts;
  ordered_json hl = ordered_json::array();
  for (const auto& t : h.highlighted) {
    ordered_json e;
    e["label"] = t.label;
    e["norm"] = t.norm;
    e["percentile"] = t.percentile;
    hl.push_back(std::move(e));
  }
  j["highlighted"] = std::move(hl);
  return j;
}

ordered_json to_json(const DriftTrajectory& t) {
  ordered_json j;
  j["level"] = level_name(t.level);
  j["steps"] = t.steps;
  j["norm_ratio"] = t.norm_ratio;
  j["cosine"] = t.cosine;
  return j;
}

ordered_json to_json(const SweepResults& s) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : s.rows) {
    ordered_json e;
    e["alpha"] = r.alpha;
    e["beta"] = r.beta;
    e["metric"] = std::string(to_string(r.metric));
    e["value"] = r.value;
    rows.push_back(std::move(e));
  }
  ordered_json j;
  j["rows"] = std::move(rows);
  return j;
}

// --- CSV -------------------------------------------------------------------

std::string to_csv(const DriftReport& r) {
  std::string out;
  csv_row(out, {"set_a", "set_b", "kind", "metric", "value", "n_a", "n_b", "notes", "error"});
  const std::string metric(to_string(r.config.metric));
  for (std::size_t a = 0; a < r.matrix.size; ++a) {
    for (std::size_t b = 0; b < r.matrix.size; ++b) {
      const auto& cell = r.matrix.at(a, b);
      if (!cell.result && cell.error.empty()) continue;
      const std::string kind = a == b ? "intra" : "inter";
      if (cell.result) {
        csv_row(out, {r.set_names.at(a), r.set_names.at(b), kind, metric,
                      format_real(cell.result->value), std::to_string(cell.result->n_p),
                      std::to_string(cell.result->n_q), cell.result->notes, ""});
      } else {
        csv_row(out, {r.set_names.at(a), r.set_names.at(b), kind, metric, "", "", "", "", cell.error});
      }
    }
  }
  return out;
}

std::string to_csv(const NormHistogram& h) {
  std::string out;
  csv_row(out, {"row_type", "label", "bin_lower", "bin_upper", "count", "norm", "percentile"});
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    csv_row(out, {"bin", "", format_real(h.bin_edges[b]), format_real(h.bin_edges[b + 1]),
                  std::to_string(h.counts[b]), "", ""});
  }
  for (const auto& t : h.highlighted) {
    csv_row(out, {"highlight", t.label, "", "", "", format_real(t.norm), format_real(t.percentile)});
  }
  return out;
}

std::string to_csv(const DriftTrajectory& t) {
  std::string out;
  csv_row(out, {"step", "norm_ratio", "cosine"});
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    csv_row(out, {std::to_string(t.steps[i]), format_real(t.norm_ratio[i]), format_real(t.cosine[i])});
  }
  return out;
}

std::string to_csv(const SweepResults& s) {
  std::string out;
  csv_row(out, {"alpha", "beta", "metric", "value"});
  for (const auto& r : s.rows) {
    csv_row(out, {format_real(r.alpha), format_real(r.beta), std::string(to_string(r.metric)),
                  format_real(r.value)});
  }
  return out;
}

}  // namespace

ReportFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ReportFormat::csv : ReportFormat::json;
}

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

std::string render_report(const Report& report, ReportFormat format) {
  if (format == ReportFormat::csv) {
    return std::visit([](const auto& r) { return to_csv(r); }, report);
  }
  return std::visit([](const auto& r) { return to_json(r).dump(2) + "\n"; }, report);
}

void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path) {
  write_file_atomic(path, render_report(report, format));
}

}  // namespace tea
