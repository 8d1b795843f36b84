#include "tea/sweep.hpp"

namespace tea {

SweepResults sweep(const EmbeddingMatrix& input, const EmbeddingMatrix& reference,
                   const SweepGrid& grid, const MetricConfig& metric, const AdjustParams& adjust) {
  if (grid.alphas.empty() || grid.betas.empty()) {
    throw Error(ErrorCode::InvalidParameter, "sweep grid needs at least one alpha and one beta");
  }
  metric.validate();
  SweepResults out;
  for (double alpha : grid.alphas) {
    for (double beta : grid.betas) {
      AdjustParams params = adjust;
      params.alpha = alpha;
      params.beta = beta;
      const auto adjusted = adjust_rows(input, reference, params);
      const auto d = inter_set_distance(adjusted, reference, metric);
      out.rows.push_back({alpha, beta, metric.metric, d.value});
    }
  }
  return out;
}

}  // namespace tea
