#pragma once

// Vocabulary norm distribution and drift trajectories over training steps.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tea/embedding.hpp"

namespace tea {

struct HighlightedToken {
  std::string label;
  double norm = 0.0;
  double percentile = 0.0;  ///< in [0, 100]
};

struct NormHistogram {
  std::vector<double> bin_edges;  ///< bins + 1 strictly increasing edges
  std::vector<std::int64_t> counts;
  std::vector<HighlightedToken> highlighted;
};

struct HistogramOptions {
  std::size_t bins = 50;
  /// Drop highlighted rows from the bin counts (they are still ranked).
  bool exclude_highlighted = false;
};

/// Percentile of `value` among `others`: the share of entries strictly below
/// it plus half the share of ties, times 100. An empty population yields 100.
double percentile_rank(double value, const std::vector<double>& others);

/// Histogram of row norms over the whole vocabulary. Each highlighted token is
/// ranked against every other row. Throws LabelNotFound for unknown labels.
NormHistogram norm_histogram(const EmbeddingMatrix& vocab, const std::vector<std::string>& highlight,
                             const HistogramOptions& options = {});

enum class TrajectoryLevel { token, prompt };

struct DriftTrajectory {
  std::vector<std::int64_t> steps;
  /// token level: |v*(t)| / |c(t)|. prompt level: Frobenius norm of the
  /// difference sequence.
  std::vector<double> norm_ratio;
  /// token level: cos(v*(t), c(t)). prompt level: mean per-position cosine.
  std::vector<double> cosine;
  TrajectoryLevel level = TrajectoryLevel::token;
};

DriftTrajectory token_trajectory(const CheckpointSeries& series, const std::string& v_star_label,
                                 const std::string& c_label);

/// Frames of both series are L x d prompt embeddings paired by index. Positions
/// where either side is (near) zero are left out of the mean cosine.
DriftTrajectory prompt_trajectory(const CheckpointSeries& series_star,
                                  const CheckpointSeries& series_c);

}  // namespace tea
