#include "tea/norm_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace tea {

double percentile_rank(double value, const std::vector<double>& others) {
  if (others.empty()) return 100.0;
  std::size_t below = 0;
  std::size_t ties = 0;
  for (double x : others) {
    if (x < value) {
      ++below;
    } else if (x == value) {
      ++ties;
    }
  }
  return 100.0 * (static_cast<double>(below) + 0.5 * static_cast<double>(ties)) /
         static_cast<double>(others.size());
}

NormHistogram norm_histogram(const EmbeddingMatrix& vocab, const std::vector<std::string>& highlight,
                             const HistogramOptions& options) {
  if (options.bins == 0) throw Error(ErrorCode::InvalidParameter, "bins must be >= 1");
  if (vocab.rows() == 0) throw Error(ErrorCode::EmptySet, "vocabulary is empty");

  std::vector<std::size_t> highlight_rows;
  for (const auto& label : highlight) {
    if (!vocab.has_labels()) {
      throw Error(ErrorCode::LabelNotFound,
                  "label '" + label + "' requested but the vocabulary has no labels");
    }
    highlight_rows.push_back(vocab.index_of(label));
  }

  const std::size_t n = vocab.rows();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = l2_norm(vocab.row(i));

  const std::set<std::size_t> excluded =
      options.exclude_highlighted ? std::set<std::size_t>(highlight_rows.begin(), highlight_rows.end())
                                  : std::set<std::size_t>{};

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (excluded.count(i)) continue;
    lo = std::min(lo, norms[i]);
    hi = std::max(hi, norms[i]);
  }
  if (!(lo <= hi)) {
    // every row excluded; keep the edges meaningful
    lo = *std::min_element(norms.begin(), norms.end());
    hi = *std::max_element(norms.begin(), norms.end());
  }
  // A spread of a few ulps would give zero-width bins.
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    const double pad = std::max(0.5, 0.5 * std::abs(mid));
    // centre the cluster inside a bin rather than on an edge
    const double shift = options.bins % 2 == 0 ? pad / static_cast<double>(options.bins) : 0.0;
    lo = mid - pad - shift;
    hi = mid + pad - shift;
  }

  NormHistogram out;
  const std::size_t bins = options.bins;
  out.bin_edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) out.bin_edges[b] = lo + width * static_cast<double>(b);
  out.bin_edges.back() = hi;
  out.counts.assign(bins, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (excluded.count(i)) continue;
    auto b = static_cast<std::size_t>((norms[i] - lo) / width);
    b = std::min(b, bins - 1);  // right edge closes the last bin
    ++out.counts[b];
  }

  for (std::size_t k = 0; k < highlight_rows.size(); ++k) {
    const std::size_t row = highlight_rows[k];
    std::vector<double> others;
    others.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i != row) others.push_back(norms[i]);
    }
    out.highlighted.push_back({highlight[k], norms[row], percentile_rank(norms[row], others)});
  }
  return out;
}

DriftTrajectory token_trajectory(const CheckpointSeries& series, const std::string& v_star_label,
                                 const std::string& c_label) {
  DriftTrajectory out;
  out.level = TrajectoryLevel::token;
  for (std::size_t t = 0; t < series.size(); ++t) {
    const auto& frame = series.frame(t);
    const auto v_idx = frame.find_label(v_star_label);
    const auto c_idx = frame.find_label(c_label);
    if (!v_idx || !c_idx) {
      throw Error(ErrorCode::LabelNotFound,
                  "label '" + (v_idx ? c_label : v_star_label) + "' missing at step " +
                      std::to_string(series.step(t)));
    }
    const auto v = frame.row(*v_idx);
    const auto c = frame.row(*c_idx);
    const double norm_c = l2_norm(c);
    if (norm_c == 0.0) {
      throw Error(ErrorCode::ZeroNormVector,
                  "concept has zero norm at step " + std::to_string(series.step(t)));
    }
    out.steps.push_back(series.step(t));
    out.norm_ratio.push_back(l2_norm(v) / norm_c);
    out.cosine.push_back(cosine_similarity(v, c));
  }
  return out;
}

DriftTrajectory prompt_trajectory(const CheckpointSeries& series_star,
                                  const CheckpointSeries& series_c) {
  if (series_star.size() != series_c.size()) {
    throw Error(ErrorCode::SequenceLengthMismatch,
                "series hold " + std::to_string(series_star.size()) + " and " +
                    std::to_string(series_c.size()) + " checkpoints");
  }
  if (series_star.rows() != series_c.rows() || series_star.dim() != series_c.dim()) {
    throw Error(ErrorCode::SequenceLengthMismatch, "prompt series have different L x d shapes");
  }
  constexpr double kZero = 1e-12;
  DriftTrajectory out;
  out.level = TrajectoryLevel::prompt;
  for (std::size_t t = 0; t < series_star.size(); ++t) {
    const auto& a = series_star.frame(t);
    const auto& b = series_c.frame(t);
    double diff_sq = 0.0;
    double cos_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      diff_sq += squared_distance(a.row(i), b.row(i));
      if (l2_norm(a.row(i)) < kZero || l2_norm(b.row(i)) < kZero) continue;
      cos_sum += cosine_similarity(a.row(i), b.row(i));
      ++counted;
    }
    if (counted == 0) {
      throw Error(ErrorCode::ZeroNormVector,
                  "no nonzero positions at step " + std::to_string(series_star.step(t)));
    }
    out.steps.push_back(series_star.step(t));
    out.norm_ratio.push_back(std::sqrt(diff_sq));
    out.cosine.push_back(cos_sum / static_cast<double>(counted));
  }
  return out;
}

}  // namespace tea
