#include "tea/slerp_adjust.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace tea {

namespace {

constexpr double kZeroNormThreshold = 1e-12;

}  // namespace

void AdjustParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "alpha must lie in [0, 1]");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::InvalidParameter, "beta must be positive and finite");
  }
  if (!(parallel_tolerance > 0.0) || !(antipodal_tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "tolerances must be positive");
  }
}

EmbeddingVector adjust_token(std::span<const double> v_star, std::span<const double> c,
                             const AdjustParams& params) {
  params.validate();
  if (v_star.size() != c.size()) {
    throw Error(ErrorCode::DimMismatch, "v_star has dim " + std::to_string(v_star.size()) +
                                            ", concept has dim " + std::to_string(c.size()));
  }
  const double norm_v = l2_norm(v_star);
  const double norm_c = l2_norm(c);
  if (norm_v == 0.0 || norm_c == 0.0) {
    if (params.zero_norm_policy == ZeroNormPolicy::passthrough) {
      return EmbeddingVector::from_span(v_star);
    }
    throw Error(ErrorCode::ZeroNormVector,
                norm_v == 0.0 ? "learned embedding has zero norm" : "concept embedding has zero norm");
  }

  const double radius = params.beta * norm_c;
  const std::size_t d = v_star.size();
  std::vector<double> v_tilde(d);
  std::vector<double> c_tilde(d);
  for (std::size_t i = 0; i < d; ++i) {
    v_tilde[i] = radius * v_star[i] / norm_v;
    c_tilde[i] = radius * c[i] / norm_c;
  }

  const double theta = angle_between(v_star, c);
  const double alpha = params.alpha;
  std::vector<double> out(d);

  if (theta < params.parallel_tolerance) {
    // sin(theta) is ill-conditioned here; interpolate linearly and renormalize.
    for (std::size_t i = 0; i < d; ++i) out[i] = (1.0 - alpha) * v_tilde[i] + alpha * c_tilde[i];
    return rescale_to(out, radius);
  }
  if (theta > std::numbers::pi - params.antipodal_tolerance) {
    throw Error(ErrorCode::AntipodalVectors,
                "angle " + std::to_string(theta) + " rad leaves the rotation plane undefined");
  }

  const double sin_theta = std::sin(theta);
  const double w_v = std::sin((1.0 - alpha) * theta) / sin_theta;
  const double w_c = std::sin(alpha * theta) / sin_theta;
  for (std::size_t i = 0; i < d; ++i) out[i] = w_v * v_tilde[i] + w_c * c_tilde[i];
  return EmbeddingVector(std::move(out));
}

PromptEmbedding adjust_prompt(const PromptEmbedding& p_star, const PromptEmbedding& p_c,
                              const AdjustParams& params,
                              std::optional<std::size_t> active_positions) {
  params.validate();
  if (p_star.length() != p_c.length()) {
    throw Error(ErrorCode::SequenceLengthMismatch,
                "sequence lengths " + std::to_string(p_star.length()) + " and " +
                    std::to_string(p_c.length()) + " differ");
  }
  if (p_star.dim() != p_c.dim()) {
    throw Error(ErrorCode::DimMismatch, "prompt embeddings have dims " +
                                            std::to_string(p_star.dim()) + " and " +
                                            std::to_string(p_c.dim()));
  }

  const std::size_t length = p_star.length();
  const std::size_t active = active_positions ? std::min(*active_positions, length) : length;
  EmbeddingMatrix out = p_star.positions();
  std::string failures;
  ErrorCode first_code = ErrorCode::InvalidVector;

  for (std::size_t i = 0; i < active; ++i) {
    const auto star = p_star.position(i);
    const auto ref = p_c.position(i);
    if (l2_norm(star) < kZeroNormThreshold || l2_norm(ref) < kZeroNormThreshold) {
      if (params.zero_norm_policy == ZeroNormPolicy::passthrough) continue;
      if (failures.empty()) first_code = ErrorCode::ZeroNormVector;
      failures += "position " + std::to_string(i) + ": zero-norm embedding; ";
      continue;
    }
    try {
      out.set_row(i, adjust_token(star, ref, params).values());
    } catch (const Error& e) {
      if (failures.empty()) first_code = e.code();
      failures += "position " + std::to_string(i) + ": " + std::string(to_string(e.code())) + " (" + e.detail() + "); ";
    }
  }
  if (!failures.empty()) {
    throw Error(first_code, failures.substr(0, failures.size() - 2));
  }
  return PromptEmbedding(std::move(out), p_star.prompt_text());
}

EmbeddingMatrix adjust_rows(const EmbeddingMatrix& input, const EmbeddingMatrix& reference,
                            const AdjustParams& params) {
  if (input.rows() != reference.rows()) {
    throw Error(ErrorCode::PairingMismatch, "input has " + std::to_string(input.rows()) +
                                                " rows, reference has " +
                                                std::to_string(reference.rows()));
  }
  if (input.dim() != reference.dim()) {
    throw Error(ErrorCode::DimMismatch, "input dim " + std::to_string(input.dim()) +
                                            " vs reference dim " + std::to_string(reference.dim()));
  }
  EmbeddingMatrix out = input;
  for (std::size_t i = 0; i < input.rows(); ++i) {
    try {
      out.set_row(i, adjust_token(input.row(i), reference.row(i), params).values());
    } catch (const Error& e) {
      throw Error(e.code(), "row " + std::to_string(i) + ": " + e.detail());
    }
  }
  return out;
}

double beta_heuristic(std::span<const double> v_star, std::span<const double> c) {
  const double norm_v = l2_norm(v_star);
  const double norm_c = l2_norm(c);
  if (norm_v == 0.0 || norm_c == 0.0) {
    throw Error(ErrorCode::ZeroNormVector, "beta heuristic needs nonzero norms");
  }
  return (norm_v + norm_c) / (2.0 * norm_c);
}

}  // namespace tea
