#include "tea/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace tea {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::InvalidVector,
                  std::string(what) + " has a non-finite entry at index " + std::to_string(i));
    }
  }
}

void require_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimMismatch,
                "dimension " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

void require_unique(const std::vector<std::string>& labels) {
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) {
      throw Error(ErrorCode::InvalidParameter, "duplicate label '" + l + "'");
    }
  }
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(ErrorCode::InvalidVector, "embedding vector must have dim >= 1");
  }
  require_finite(values_, "embedding vector");
}

EmbeddingVector::EmbeddingVector(std::initializer_list<double> values)
    : EmbeddingVector(std::vector<double>(values)) {}

EmbeddingVector EmbeddingVector::from_span(std::span<const double> values) {
  return EmbeddingVector(std::vector<double>(values.begin(), values.end()));
}

EmbeddingVector EmbeddingVector::zeros(std::size_t dim) {
  return EmbeddingVector(std::vector<double>(dim, 0.0));
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> data,
                                 std::vector<std::string> labels, MatrixKind kind)
    : rows_(rows), dim_(dim), data_(std::move(data)), labels_(std::move(labels)), kind_(kind) {
  if (rows_ > 0 && dim_ == 0) {
    throw Error(ErrorCode::InvalidVector, "matrix rows must have dim >= 1");
  }
  if (data_.size() != rows_ * dim_) {
    throw Error(ErrorCode::DimMismatch, "matrix data holds " + std::to_string(data_.size()) +
                                            " values, expected " + std::to_string(rows_ * dim_));
  }
  if (!labels_.empty() && labels_.size() != rows_) {
    throw Error(ErrorCode::InvalidParameter, "label count " + std::to_string(labels_.size()) +
                                                 " does not match row count " +
                                                 std::to_string(rows_));
  }
  require_unique(labels_);
  require_finite(data_, "embedding matrix");
}

EmbeddingMatrix EmbeddingMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                           std::vector<std::string> labels, MatrixKind kind) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) {
      throw Error(ErrorCode::DimMismatch, "ragged rows: " + std::to_string(r.size()) + " vs " +
                                              std::to_string(dim));
    }
    data.insert(data.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix(rows.size(), dim, std::move(data), std::move(labels), kind);
}

EmbeddingMatrix EmbeddingMatrix::from_vectors(const std::vector<EmbeddingVector>& rows,
                                              std::vector<std::string> labels, MatrixKind kind) {
  std::vector<std::vector<double>> raw;
  raw.reserve(rows.size());
  for (const auto& r : rows) raw.push_back(r.values());
  return from_rows(raw, std::move(labels), kind);
}

std::span<const double> EmbeddingMatrix::row(std::size_t i) const {
  if (i >= rows_) {
    throw Error(ErrorCode::IndexError,
                "row " + std::to_string(i) + " out of range for " + std::to_string(rows_) + " rows");
  }
  return {data_.data() + i * dim_, dim_};
}

void EmbeddingMatrix::set_row(std::size_t i, std::span<const double> values) {
  if (i >= rows_) {
    throw Error(ErrorCode::IndexError,
                "row " + std::to_string(i) + " out of range for " + std::to_string(rows_) + " rows");
  }
  if (values.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, "row replacement has dim " +
                                            std::to_string(values.size()) + ", expected " +
                                            std::to_string(dim_));
  }
  require_finite(values, "row replacement");
  std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
}

std::optional<std::size_t> EmbeddingMatrix::find_label(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t EmbeddingMatrix::index_of(const std::string& label) const {
  if (auto idx = find_label(label)) return *idx;
  throw Error(ErrorCode::LabelNotFound, "label '" + label + "' not present");
}

PromptEmbedding::PromptEmbedding(EmbeddingMatrix positions, std::string prompt_text)
    : positions_(std::move(positions)), prompt_text_(std::move(prompt_text)) {
  if (positions_.rows() == 0) {
    throw Error(ErrorCode::SequenceLengthMismatch, "prompt embedding needs at least one position");
  }
}

CheckpointSeries::CheckpointSeries(std::vector<std::int64_t> steps,
                                   std::vector<EmbeddingMatrix> frames)
    : steps_(std::move(steps)), frames_(std::move(frames)) {
  if (steps_.size() != frames_.size()) {
    throw Error(ErrorCode::InvalidParameter, "checkpoint series has " +
                                                 std::to_string(steps_.size()) + " steps but " +
                                                 std::to_string(frames_.size()) + " frames");
  }
  for (std::size_t i = 1; i < steps_.size(); ++i) {
    if (steps_[i] <= steps_[i - 1]) {
      throw Error(ErrorCode::InvalidParameter, "checkpoint steps must be strictly increasing");
    }
  }
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    const auto& a = frames_.front();
    const auto& b = frames_[i];
    if (a.rows() != b.rows() || a.dim() != b.dim()) {
      throw Error(ErrorCode::DimMismatch,
                  "checkpoint " + std::to_string(i) + " shape differs from checkpoint 0");
    }
    if (a.labels() != b.labels()) {
      throw Error(ErrorCode::InvalidParameter,
                  "checkpoint " + std::to_string(i) + " labels differ from checkpoint 0");
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  if (std::isfinite(acc)) return std::sqrt(acc);
  require_finite(v, "vector");
  // Finite input whose squares overflow: rescale by the largest magnitude.
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  acc = 0.0;
  for (double x : v) acc += (x / scale) * (x / scale);
  return scale * std::sqrt(acc);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::ZeroNormVector, "cosine similarity of a zero-norm vector");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double angle_between(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::ZeroNormVector, "angle with a zero-norm vector");
  }
  // Half-angle form: theta = 2 atan2(|u - w|, |u + w|) on unit vectors. Same
  // value as acos(cos) but keeps full precision near 0 and pi.
  double diff = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u = a[i] / na;
    const double w = b[i] / nb;
    diff += (u - w) * (u - w);
    sum += (u + w) * (u + w);
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

EmbeddingVector rescale_to(std::span<const double> v, double target_norm) {
  if (!(target_norm > 0.0) || !std::isfinite(target_norm)) {
    throw Error(ErrorCode::InvalidParameter, "target norm must be positive and finite");
  }
  const double n = l2_norm(v);
  if (n == 0.0) {
    throw Error(ErrorCode::ZeroNormVector, "cannot rescale a zero-norm vector");
  }
  std::vector<double> out(v.size());
  const double factor = target_norm / n;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * factor;
  return EmbeddingVector(std::move(out));
}

}  // namespace tea
