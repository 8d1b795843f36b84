#pragma once

// Grid evaluation over rotation and scaling factors: adjust every row of an
// index-paired input set toward its reference row, then measure how far the
// adjusted set sits from the reference.

#include <vector>

#include "tea/drift_metrics.hpp"
#include "tea/report.hpp"
#include "tea/slerp_adjust.hpp"

namespace tea {

struct SweepGrid {
  std::vector<double> alphas{0.20, 0.25, 0.30, 0.35};
  std::vector<double> betas{0.5, 1.0, 1.5, 2.0, 5.0};
};

/// Rows are ordered alpha-major. `adjust` supplies tolerances and the
/// zero-norm policy; its alpha and beta are overridden by the grid.
SweepResults sweep(const EmbeddingMatrix& input, const EmbeddingMatrix& reference,
                   const SweepGrid& grid, const MetricConfig& metric,
                   const AdjustParams& adjust = AdjustParams::token_defaults());

}  // namespace tea
