#include "tea/drift_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace tea {

namespace {

void require_nonempty(const EmbeddingMatrix& m, const char* name) {
  if (m.rows() == 0) throw Error(ErrorCode::EmptySet, std::string(name) + " is empty");
}

void require_same_dim(const EmbeddingMatrix& p, const EmbeddingMatrix& q) {
  if (p.dim() != q.dim()) {
    throw Error(ErrorCode::DimMismatch,
                "sets have dims " + std::to_string(p.dim()) + " and " + std::to_string(q.dim()));
  }
}

void require_paired(const EmbeddingMatrix& p, const EmbeddingMatrix& q) {
  if (p.rows() != q.rows()) {
    throw Error(ErrorCode::PairingMismatch, "index-paired sets have sizes " +
                                                std::to_string(p.rows()) + " and " +
                                                std::to_string(q.rows()));
  }
  require_same_dim(p, q);
}

SetDistanceResult make_result(double value, const MetricConfig& cfg, std::size_t n_p,
                              std::size_t n_q, std::string notes = {}) {
  return {value, cfg, n_p, n_q, std::move(notes)};
}

// Logits sim(s_anchor, s_j)/T over the row support, with precomputed norms.
std::vector<double> softmax_row(std::size_t anchor, const EmbeddingMatrix& set,
                                const std::vector<double>& norms, const MetricConfig& cfg) {
  const std::size_t n = set.rows();
  const auto a = set.row(anchor);
  std::vector<double> logits;
  logits.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (cfg.exclude_self && j == anchor) continue;
    const auto b = set.row(j);
    double sim = 0.0;
    if (cfg.similarity == Similarity::cosine) {
      sim = std::clamp(dot(a, b) / (norms[anchor] * norms[j]), -1.0, 1.0);
    } else {
      sim = -l2_distance(a, b);
    }
    logits.push_back(sim / cfg.temperature);
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& x : logits) {
    x = std::exp(x - peak);
    total += x;
  }
  for (double& x : logits) x /= total;
  return logits;
}

std::vector<double> row_norms(const EmbeddingMatrix& set, const MetricConfig& cfg) {
  std::vector<double> norms(set.rows());
  for (std::size_t i = 0; i < set.rows(); ++i) {
    norms[i] = l2_norm(set.row(i));
    if (cfg.similarity == Similarity::cosine && norms[i] == 0.0) {
      throw Error(ErrorCode::ZeroNormVector,
                  "row " + std::to_string(i) + " has zero norm under cosine similarity");
    }
  }
  return norms;
}

void require_softmax_support(const EmbeddingMatrix& set, const MetricConfig& cfg) {
  const std::size_t needed = cfg.exclude_self ? 2 : 1;
  if (set.rows() < needed) {
    throw Error(ErrorCode::InsufficientPoints,
                "softmax rows need at least " + std::to_string(needed) + " points");
  }
}

}  // namespace

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::l2: return "l2";
    case Metric::hausdorff: return "hausdorff";
    case Metric::mahalanobis: return "mahalanobis";
    case Metric::kl: return "kl";
  }
  return "unknown";
}

std::optional<Metric> parse_metric(std::string_view name) noexcept {
  for (Metric m : {Metric::l2, Metric::hausdorff, Metric::mahalanobis, Metric::kl}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view to_string(CovarianceMode m) noexcept {
  return m == CovarianceMode::diagonal ? "diagonal" : "full_shrinkage";
}

std::string_view to_string(Similarity s) noexcept {
  return s == Similarity::cosine ? "cosine" : "neg_l2";
}

void MetricConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidParameter, "temperature must be positive and finite");
  }
  if (!(shrinkage_lambda >= 0.0 && shrinkage_lambda <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "shrinkage lambda must lie in [0, 1]");
  }
}

// ---------------------------------------------------------------------------
// Covariance

CovarianceModel CovarianceModel::fit(const EmbeddingMatrix& set, const MetricConfig& cfg) {
  cfg.validate();
  const std::size_t n = set.rows();
  const std::size_t d = set.dim();
  if (n < 2) {
    throw Error(ErrorCode::InsufficientPoints,
                "covariance needs at least 2 points, got " + std::to_string(n));
  }

  CovarianceModel model;
  model.mode_ = cfg.covariance_mode;
  model.dim_ = d;
  model.mean_.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = set.row(i);
    for (std::size_t k = 0; k < d; ++k) model.mean_[k] += r[k];
  }
  for (double& m : model.mean_) m /= static_cast<double>(n);

  const double denom = static_cast<double>(n - 1);

  if (cfg.covariance_mode == CovarianceMode::diagonal) {
    model.inv_std_.assign(d, 0.0);
    std::size_t floored = 0;
    for (std::size_t k = 0; k < d; ++k) {
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double c = set.row(i)[k] - model.mean_[k];
        var += c * c;
      }
      var /= denom;
      if (var < kVarianceFloor) {
        var = kVarianceFloor;
        ++floored;
      }
      model.inv_std_[k] = 1.0 / std::sqrt(var);
    }
    model.notes_ = "covariance=diagonal; variance floor 1e-9 applied to " +
                   std::to_string(floored) + " of " + std::to_string(d) + " dims";
    return model;
  }

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> x(set.data().data(), static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(d));
  Eigen::Map<const Eigen::RowVectorXd> mu(model.mean_.data(), static_cast<Eigen::Index>(d));
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  Eigen::MatrixXd sigma = (centered.transpose() * centered) / denom;

  const double lambda = cfg.shrinkage_lambda;
  const double target = sigma.trace() / static_cast<double>(d);
  sigma *= (1.0 - lambda);
  sigma.diagonal().array() += lambda * target;

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularCovariance,
                "covariance is not positive definite after shrinkage lambda=" +
                    std::to_string(lambda));
  }
  const Eigen::MatrixXd lower = llt.matrixL();
  const Eigen::VectorXd diag = lower.diagonal();
  const double max_pivot = diag.maxCoeff();
  const double min_pivot = diag.minCoeff();
  if (!(min_pivot > 0.0) || min_pivot < 1e-6 * max_pivot) {
    throw Error(ErrorCode::SingularCovariance,
                "covariance is numerically singular (pivot ratio " +
                    std::to_string(min_pivot / max_pivot) + ")");
  }
  model.cholesky_.resize(d * d);
  Eigen::Map<RowMajor>(model.cholesky_.data(), static_cast<Eigen::Index>(d),
                       static_cast<Eigen::Index>(d)) = lower;
  model.notes_ = "covariance=full_shrinkage; lambda=" + std::to_string(lambda) +
                 "; target trace/d=" + std::to_string(target);
  return model;
}

std::vector<double> CovarianceModel::whiten(std::span<const double> v) const {
  if (v.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, "probe dim " + std::to_string(v.size()) +
                                            " vs covariance dim " + std::to_string(dim_));
  }
  std::vector<double> out(v.begin(), v.end());
  if (mode_ == CovarianceMode::diagonal) {
    for (std::size_t k = 0; k < dim_; ++k) out[k] *= inv_std_[k];
    return out;
  }
  // Forward substitution L y = v.
  for (std::size_t r = 0; r < dim_; ++r) {
    const double* row = cholesky_.data() + r * dim_;
    double acc = out[r];
    for (std::size_t k = 0; k < r; ++k) acc -= row[k] * out[k];
    out[r] = acc / row[r];
  }
  return out;
}

double CovarianceModel::distance_to_mean(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, "probe dim " + std::to_string(x.size()) +
                                            " vs covariance dim " + std::to_string(dim_));
  }
  std::vector<double> centered(dim_);
  for (std::size_t k = 0; k < dim_; ++k) centered[k] = x[k] - mean_[k];
  const auto w = whiten(centered);
  double acc = 0.0;
  for (double z : w) acc += z * z;
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// L2

SetDistanceResult l2_inter(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                           const MetricConfig& cfg) {
  require_paired(p, q);
  require_nonempty(p, "P");
  double total = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const double sq = squared_distance(p.row(i), q.row(i));
    total += cfg.squared_l2 ? sq : std::sqrt(sq);
  }
  return make_result(total / static_cast<double>(p.rows()), cfg, p.rows(), q.rows(),
                     cfg.squared_l2 ? "squared" : "unsquared");
}

SetDistanceResult l2_intra(const EmbeddingMatrix& p, const MetricConfig& cfg) {
  require_nonempty(p, "P");
  const std::size_t n = p.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sq = squared_distance(p.row(i), p.row(j));
      total += cfg.squared_l2 ? sq : std::sqrt(sq);
    }
  }
  // Symmetric off-diagonal pairs counted twice; diagonal terms are zero.
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  return make_result(2.0 * total / nn, cfg, n, n, cfg.squared_l2 ? "squared" : "unsquared");
}

// ---------------------------------------------------------------------------
// Hausdorff

namespace {

double directed_hausdorff(const EmbeddingMatrix& from, const EmbeddingMatrix& to) {
  double worst = 0.0;
  for (std::size_t i = 0; i < from.rows(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    const auto a = from.row(i);
    for (std::size_t j = 0; j < to.rows(); ++j) {
      nearest = std::min(nearest, squared_distance(a, to.row(j)));
      if (nearest <= worst) break;  // cannot raise the running max
    }
    worst = std::max(worst, nearest);
  }
  return std::sqrt(worst);
}

}  // namespace

SetDistanceResult hausdorff(const EmbeddingMatrix& p, const EmbeddingMatrix& q) {
  require_nonempty(p, "P");
  require_nonempty(q, "Q");
  require_same_dim(p, q);
  MetricConfig cfg;
  cfg.metric = Metric::hausdorff;
  const double value = std::max(directed_hausdorff(p, q), directed_hausdorff(q, p));
  return make_result(value, cfg, p.rows(), q.rows());
}

SetDistanceResult hausdorff_intra(const EmbeddingMatrix& p) {
  const std::size_t n = p.rows();
  if (n < 2) {
    throw Error(ErrorCode::InsufficientPoints,
                "intra-set Hausdorff needs at least 2 points, got " + std::to_string(n));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      nearest = std::min(nearest, squared_distance(p.row(i), p.row(j)));
    }
    worst = std::max(worst, nearest);
  }
  MetricConfig cfg;
  cfg.metric = Metric::hausdorff;
  return make_result(std::sqrt(worst), cfg, n, n);
}

// ---------------------------------------------------------------------------
// Mahalanobis

SetDistanceResult mahalanobis_inter(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                                    const MetricConfig& cfg) {
  require_same_dim(p, q);
  const bool second = cfg.mahalanobis_reference == MahalanobisReference::second;
  const EmbeddingMatrix& probe = second ? p : q;
  const EmbeddingMatrix& reference = second ? q : p;
  require_nonempty(probe, "probe set");
  const auto model = CovarianceModel::fit(reference, cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < probe.rows(); ++i) total += model.distance_to_mean(probe.row(i));
  return make_result(total / static_cast<double>(probe.rows()), cfg, p.rows(), q.rows(),
                     model.notes() + (second ? "; reference=second" : "; reference=first"));
}

SetDistanceResult mahalanobis_intra(const EmbeddingMatrix& p, const MetricConfig& cfg) {
  const auto model = CovarianceModel::fit(p, cfg);
  const std::size_t n = p.rows();
  std::vector<std::vector<double>> white;
  white.reserve(n);
  for (std::size_t i = 0; i < n; ++i) white.push_back(model.whiten(p.row(i)));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) total += l2_distance(white[i], white[j]);
  }
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  return make_result(2.0 * total / nn, cfg, n, n, model.notes());
}

// ---------------------------------------------------------------------------
// KL over relational softmax rows

std::vector<double> nt_softmax_row(std::size_t anchor_index, const EmbeddingMatrix& set,
                                   const MetricConfig& cfg) {
  cfg.validate();
  if (anchor_index >= set.rows()) {
    throw Error(ErrorCode::IndexError, "anchor " + std::to_string(anchor_index) +
                                           " out of range for set of " +
                                           std::to_string(set.rows()));
  }
  require_softmax_support(set, cfg);
  return softmax_row(anchor_index, set, row_norms(set, cfg), cfg);
}

std::vector<double> kl_per_anchor(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                                  const MetricConfig& cfg) {
  cfg.validate();
  require_paired(p, q);
  require_softmax_support(p, cfg);
  const auto norms_p = row_norms(p, cfg);
  const auto norms_q = row_norms(q, cfg);
  std::vector<double> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto rp = softmax_row(i, p, norms_p, cfg);
    const auto rq = softmax_row(i, q, norms_q, cfg);
    double kl = 0.0;
    for (std::size_t j = 0; j < rp.size(); ++j) {
      if (rp[j] > 0.0) kl += rp[j] * (std::log(rp[j]) - std::log(rq[j]));
    }
    out[i] = kl;
  }
  return out;
}

SetDistanceResult kl_divergence(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                                const MetricConfig& cfg) {
  const auto per_anchor = kl_per_anchor(p, q, cfg);
  double total = 0.0;
  for (double v : per_anchor) total += v;
  const double value = std::max(0.0, total / static_cast<double>(per_anchor.size()));
  return make_result(value, cfg, p.rows(), q.rows(),
                     "sim=" + std::string(to_string(cfg.similarity)) +
                         (cfg.exclude_self ? "; self excluded" : "; self included"));
}

// ---------------------------------------------------------------------------

SetDistanceResult inter_set_distance(const EmbeddingMatrix& p, const EmbeddingMatrix& q,
                                     const MetricConfig& cfg) {
  cfg.validate();
  switch (cfg.metric) {
    case Metric::l2: return l2_inter(p, q, cfg);
    case Metric::hausdorff: {
      auto r = hausdorff(p, q);
      r.metric = cfg;
      return r;
    }
    case Metric::mahalanobis: return mahalanobis_inter(p, q, cfg);
    case Metric::kl: return kl_divergence(p, q, cfg);
  }
  throw Error(ErrorCode::InvalidParameter, "unknown metric");
}

SetDistanceResult intra_set_distance(const EmbeddingMatrix& p, const MetricConfig& cfg) {
  cfg.validate();
  switch (cfg.metric) {
    case Metric::l2: return l2_intra(p, cfg);
    case Metric::hausdorff: {
      auto r = hausdorff_intra(p);
      r.metric = cfg;
      return r;
    }
    case Metric::mahalanobis: return mahalanobis_intra(p, cfg);
    case Metric::kl: {
      // KL of a set against itself; computed rather than assumed so input
      // errors surface the same way as off-diagonal cells.
      return kl_divergence(p, p, cfg);
    }
  }
  throw Error(ErrorCode::InvalidParameter, "unknown metric");
}

PairwiseMatrix pairwise_set_matrix(const std::vector<EmbeddingMatrix>& sets,
                                   const MetricConfig& cfg, bool include_intra) {
  cfg.validate();
  if (sets.size() < 2) {
    throw Error(ErrorCode::InsufficientPoints, "pairwise matrix needs at least 2 sets");
  }
  PairwiseMatrix out;
  out.size = sets.size();
  out.cells.resize(out.size * out.size);
  for (std::size_t i = 0; i < out.size; ++i) {
    for (std::size_t j = 0; j < out.size; ++j) {
      if (i == j && !include_intra) continue;
      auto& cell = out.cells[i * out.size + j];
      try {
        cell.result = i == j ? intra_set_distance(sets[i], cfg)
                             : inter_set_distance(sets[i], sets[j], cfg);
      } catch (const Error& e) {
        cell.error = e.what();
        cell.error_code = e.code();
      }
    }
  }
  return out;
}

}  // namespace tea
