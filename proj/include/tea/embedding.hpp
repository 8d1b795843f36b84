#pragma once

// Core embedding containers and the elementary geometry shared by every
// other module. Values are held in double precision regardless of the
// on-disk width.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tea/error.hpp"

namespace tea {

/// A single d-dimensional embedding: a vocabulary row or one encoder position.
/// Always non-empty and finite.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<double> values);
  EmbeddingVector(std::initializer_list<double> values);
  static EmbeddingVector from_span(std::span<const double> values);
  static EmbeddingVector zeros(std::size_t dim);

  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  const double* data() const noexcept { return values_.data(); }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

enum class MatrixKind { vocab_matrix, embedding_set };

/// n x d row-major matrix: either a vocabulary table or a set of prompt
/// embeddings. Labels are optional but unique when present.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> data,
                  std::vector<std::string> labels = {},
                  MatrixKind kind = MatrixKind::embedding_set);
  static EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                   std::vector<std::string> labels = {},
                                   MatrixKind kind = MatrixKind::embedding_set);
  static EmbeddingMatrix from_vectors(const std::vector<EmbeddingVector>& rows,
                                      std::vector<std::string> labels = {},
                                      MatrixKind kind = MatrixKind::embedding_set);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return rows_ == 0; }
  MatrixKind kind() const noexcept { return kind_; }
  void set_kind(MatrixKind kind) noexcept { kind_ = kind; }

  std::span<const double> row(std::size_t i) const;
  EmbeddingVector vector(std::size_t i) const { return EmbeddingVector::from_span(row(i)); }
  /// Overwrites row i; the replacement must be finite and of matching dim.
  void set_row(std::size_t i, std::span<const double> values);

  const std::vector<double>& data() const noexcept { return data_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool has_labels() const noexcept { return !labels_.empty(); }

  std::optional<std::size_t> find_label(const std::string& label) const;
  /// Throws LabelNotFound when absent.
  std::size_t index_of(const std::string& label) const;

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::vector<std::string> labels_;
  MatrixKind kind_ = MatrixKind::embedding_set;
};

/// Encoder output for one prompt: L positions of dimension d.
class PromptEmbedding {
 public:
  PromptEmbedding() = default;
  explicit PromptEmbedding(EmbeddingMatrix positions, std::string prompt_text = {});

  std::size_t length() const noexcept { return positions_.rows(); }
  std::size_t dim() const noexcept { return positions_.dim(); }
  std::span<const double> position(std::size_t i) const { return positions_.row(i); }
  const EmbeddingMatrix& positions() const noexcept { return positions_; }
  const std::string& prompt_text() const noexcept { return prompt_text_; }

  bool operator==(const PromptEmbedding&) const = default;

 private:
  EmbeddingMatrix positions_;
  std::string prompt_text_;
};

/// Ordered training snapshots. Every frame shares the same shape and labels,
/// and steps are strictly increasing.
class CheckpointSeries {
 public:
  CheckpointSeries() = default;
  CheckpointSeries(std::vector<std::int64_t> steps, std::vector<EmbeddingMatrix> frames);

  std::size_t size() const noexcept { return frames_.size(); }
  bool empty() const noexcept { return frames_.empty(); }
  std::size_t rows() const noexcept { return frames_.empty() ? 0 : frames_.front().rows(); }
  std::size_t dim() const noexcept { return frames_.empty() ? 0 : frames_.front().dim(); }

  const std::vector<std::int64_t>& steps() const noexcept { return steps_; }
  const std::vector<EmbeddingMatrix>& frames() const noexcept { return frames_; }
  const EmbeddingMatrix& frame(std::size_t i) const { return frames_.at(i); }
  std::int64_t step(std::size_t i) const { return steps_.at(i); }

  bool operator==(const CheckpointSeries&) const = default;

 private:
  std::vector<std::int64_t> steps_;
  std::vector<EmbeddingMatrix> frames_;
};

// ---------------------------------------------------------------------------
// Geometry. All functions accept spans so matrix rows can be used in place.

double dot(std::span<const double> a, std::span<const double> b);

/// Euclidean norm. Throws InvalidVector on non-finite input.
double l2_norm(std::span<const double> v);

double squared_distance(std::span<const double> a, std::span<const double> b);
double l2_distance(std::span<const double> a, std::span<const double> b);

/// dot(a,b)/(|a||b|), clamped to [-1, 1].
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Angle in [0, pi] between two nonzero vectors.
double angle_between(std::span<const double> a, std::span<const double> b);

/// target_norm * v / |v|.
EmbeddingVector rescale_to(std::span<const double> v, double target_norm);

}  // namespace tea
