#pragma once

// Set-to-set distances between index-paired prompt embedding sets, with the
// matching intra-set dispersion measures:
//
//   l2           inter (1/n) sum_i |p_i - q_i|^2        intra (1/n^2) sum_ij |p_i - p_j|^2
//   hausdorff    symmetric max-min over both sets       intra max_i min_{j!=i} |p_i - p_j|
//   mahalanobis  mean distance of probe points under    intra (1/n^2) sum_ij of the pair
//                the reference set's mean/covariance    distance under the set's covariance
//   kl           mean over anchors of KL between the    intra 0
//                temperature-scaled softmax rows

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tea/embedding.hpp"

namespace tea {

enum class Metric { l2, hausdorff, mahalanobis, kl };
enum class CovarianceMode { full_shrinkage, diagonal };
enum class Similarity { cosine, neg_l2 };
/// Which argument of mahalanobis_inter supplies mean and covariance.
enum class MahalanobisReference { second, first };

std::string_view to_string(Metric m) noexcept;
std::optional<Metric> parse_metric(std::string_view name) noexcept;
std::string_view to_string(CovarianceMode m) noexcept;
std::string_view to_string(Similarity s) noexcept;

struct MetricConfig {
  Metric metric = Metric::l2;
  double temperature = 1.0;
  CovarianceMode covariance_mode = CovarianceMode::diagonal;
  double shrinkage_lambda = 0.1;
  Similarity similarity = Similarity::cosine;
  bool exclude_self = true;
  bool squared_l2 = true;
  MahalanobisReference mahalanobis_reference = MahalanobisReference::second;

  void validate() const;
};

struct SetDistanceResult {
  double value = 0.0;
  MetricConfig metric;
  std::size_t n_p = 0;
  std::size_t n_q = 0;
  std::string notes;
};

/// Variance floor used by the diagonal covariance model.
inline constexpr double kVarianceFloor = 1e-9;

/// Mean and regularized covariance of one set, factored once so probe points
/// can be whitened: (x - mu)^T Sigma^-1 (x - mu) = |whiten(x - mu)|^2.
/// Covariance uses the unbiased (n - 1) estimator.
class CovarianceModel {
 public:
  static CovarianceModel fit(const EmbeddingMatrix& set, const MetricConfig& cfg);

  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::string& notes() const noexcept { return notes_; }

  /// Applies L^-1 (full) or D^-1/2 (diagonal) to v. Linear, no centering.
  std::vector<double> whiten(std::span<const double> v) const;
  /// sqrt((x - mu)^T Sigma^-1 (x - mu)).
  double distance_to_mean(std::span<const double> x) const;

 private:
  CovarianceMode mode_ = CovarianceMode::diagonal;
  std::size_t dim_ = 0;
  std::vector<double> mean_;
  std::vector<double> inv_std_;   // diagonal mode
  std::vector<double> cholesky_;  // full mode, lower triangle, row-major d x d
  std::string notes_;
};

SetDistanceResult l2_inter(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                           const MetricConfig& cfg = {});
SetDistanceResult l2_intra(const EmbeddingMatrix& p, const MetricConfig& cfg = {});

SetDistanceResult hausdorff(const EmbeddingMatrix& p, const EmbeddingMatrix& q);
SetDistanceResult hausdorff_intra(const EmbeddingMatrix& p);

/// Mean Mahalanobis distance of the probe set's points under the reference
/// set's statistics. With the default MahalanobisReference::second, p is
/// probed against q.
SetDistanceResult mahalanobis_inter(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                                    const MetricConfig& cfg = {});
SetDistanceResult mahalanobis_intra(const EmbeddingMatrix& p, const MetricConfig& cfg = {});

/// Softmax over sim(s_anchor, s_j)/T for j in the set (j != anchor when
/// exclude_self). Entries are ordered by j with the anchor skipped.
std::vector<double> nt_softmax_row(std::size_t anchor_index, const EmbeddingMatrix& set,
                                   const MetricConfig& cfg = {});

/// KL(row_i(P) || row_i(Q)) for every anchor i.
std::vector<double> kl_per_anchor(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                                  const MetricConfig& cfg = {});
SetDistanceResult kl_divergence(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                                const MetricConfig& cfg = {});

/// Dispatch on cfg.metric.
SetDistanceResult inter_set_distance(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                                     const MetricConfig& cfg);
SetDistanceResult intra_set_distance(const EmbeddingMatrix& p, const MetricConfig& cfg);

struct PairwiseCell {
  std::optional<SetDistanceResult> result;
  std::string error;  ///< set when the cell could not be computed
  std::optional<ErrorCode> error_code;
};

struct PairwiseMatrix {
  std::size_t size = 0;
  std::vector<PairwiseCell> cells;  ///< row-major size x size

  const PairwiseCell& at(std::size_t i, std::size_t j) const { return cells.at(i * size + j); }
};

/// Cell (i, j) holds d(sets[i], sets[j]); the diagonal holds intra-set values
/// when include_intra is set and is left empty otherwise.
PairwiseMatrix pairwise_set_matrix(const std::vector<EmbeddingMatrix>& sets,
                                   const MetricConfig& cfg, bool include_intra = true);

}  // namespace tea
