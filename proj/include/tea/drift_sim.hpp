#pragma once

// Synthetic checkpoint series that mimic an embedding drifting during
// unconstrained personalization: its norm grows linearly and its direction
// rotates inside a fixed 2-plane containing the starting vector, so every
// downstream quantity has a closed form.
//
//   v(t) = (1 + gamma t) * R(phi(t)) * base,   phi(t) = min(phi_max, omega t)
//
// plus optional i.i.d. Gaussian noise added after scaling and rotation.

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "tea/embedding.hpp"

namespace tea {

inline constexpr double kMaxDriftAngle = std::numbers::pi - 1e-3;

inline constexpr const char* kSimulatedTokenLabel = "v_star";
inline constexpr const char* kSimulatedConceptLabel = "concept";

struct DriftSpec {
  EmbeddingVector base{1.0};
  std::size_t steps = 1;           ///< checkpoints 0..steps are produced
  double norm_growth = 0.0;        ///< gamma
  double rotation_rate = 0.0;      ///< omega, rad per step
  double max_angle = kMaxDriftAngle;
  std::uint64_t plane_seed = 0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;

  void validate() const;
  double scale(std::size_t t) const { return 1.0 + norm_growth * static_cast<double>(t); }
  /// Rotation angle at step t after clamping to max_angle and pi - 1e-3.
  double angle(std::size_t t) const;
};

struct SimulatedSeries {
  CheckpointSeries series;
  std::vector<std::string> notes;
};

/// Unit vector orthogonal to `base`, drawn deterministically from `seed`.
/// Together with base/|base| it spans the rotation plane.
std::vector<double> rotation_partner(std::span<const double> base, std::uint64_t seed);

/// Each checkpoint t (step id t) is a 2 x d frame labelled
/// {"v_star", "concept"}: the drifted vector and the untouched base.
SimulatedSeries simulate_token(const DriftSpec& spec);

struct SimulatedPromptPair {
  CheckpointSeries drifting;
  CheckpointSeries reference;
  std::vector<std::string> notes;
};

/// L-position sequences. Position 0 of the reference is spec.base; the others
/// are Gaussian vectors of the same norm drawn from plane_seed. Positions in
/// drift_positions follow the token drift law, each in its own seeded plane;
/// the rest match the reference at every step.
SimulatedPromptPair simulate_prompt(const DriftSpec& spec, std::size_t length,
                                    const std::vector<std::size_t>& drift_positions);

}  // namespace tea
