#pragma once

// Test-time embedding adjustment: pull a learned embedding back toward its
// reference concept by rescaling both onto the sphere of radius beta*|c| and
// rotating along the great circle by a fraction alpha of the angle between
// them.

#include <cstddef>
#include <optional>

#include "tea/embedding.hpp"

namespace tea {

enum class ZeroNormPolicy { error, passthrough };

struct AdjustParams {
  double alpha = 0.2;  ///< rotation toward the concept, 0 keeps the direction, 1 lands on it
  double beta = 1.5;   ///< output norm relative to |c|
  double parallel_tolerance = 1e-7;
  double antipodal_tolerance = 1e-6;
  ZeroNormPolicy zero_norm_policy = ZeroNormPolicy::error;

  static AdjustParams token_defaults() { return {}; }
  /// Padded encoder outputs may hold all-zero positions; these are copied.
  static AdjustParams prompt_defaults() {
    AdjustParams p;
    p.zero_norm_policy = ZeroNormPolicy::passthrough;
    return p;
  }

  /// Throws InvalidParameter when outside 0<=alpha<=1, beta>0, tolerances>0.
  void validate() const;
};

/// Rescale v_star and c to beta*|c|, then SLERP from v_star toward c by
/// alpha. Falls back to normalized LERP when the angle is below
/// parallel_tolerance and rejects near-antipodal pairs.
EmbeddingVector adjust_token(std::span<const double> v_star, std::span<const double> c,
                             const AdjustParams& params);

/// Applies adjust_token independently at every position i with target norm
/// beta*|p_c[i]|. Positions at or beyond active_positions (when given) are
/// copied unchanged. Per-position failures are collected and reported
/// together, each tagged with its index.
PromptEmbedding adjust_prompt(const PromptEmbedding& p_star, const PromptEmbedding& p_c,
                              const AdjustParams& params,
                              std::optional<std::size_t> active_positions = std::nullopt);

/// Row-wise adjust_token of input[i] toward reference[i] for index-paired
/// sets. Zero-norm rows follow params.zero_norm_policy.
EmbeddingMatrix adjust_rows(const EmbeddingMatrix& input, const EmbeddingMatrix& reference,
                            const AdjustParams& params);

/// (|v_star| + |c|) / (2|c|): the midpoint between the two magnitudes,
/// expressed as a multiple of |c|.
double beta_heuristic(std::span<const double> v_star, std::span<const double> c);

}  // namespace tea
