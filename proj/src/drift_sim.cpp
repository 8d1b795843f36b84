#include "tea/drift_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace tea {

namespace {

// Separates the stream used for reference positions from the plane streams.
constexpr std::uint64_t kReferenceStream = 0x9e3779b97f4a7c15ULL;

std::vector<double> drifted(std::span<const double> base, std::span<const double> partner,
                            double scale, double phi) {
  const double radius = l2_norm(base);
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  std::vector<double> out(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) {
    out[k] = scale * (c * base[k] + s * radius * partner[k]);
  }
  return out;
}

}  // namespace

void DriftSpec::validate() const {
  if (steps < 1) throw Error(ErrorCode::InvalidParameter, "drift needs at least one step");
  if (l2_norm(base) == 0.0) throw Error(ErrorCode::ZeroNormVector, "drift base has zero norm");
  if (!(scale(steps) > 0.0) || !(scale(0) > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "norm growth drives the scale non-positive");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorCode::InvalidParameter, "noise sigma must be a nonnegative real");
  }
  if (!std::isfinite(rotation_rate) || !std::isfinite(norm_growth) || !(max_angle >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "drift rates must be finite, max angle nonnegative");
  }
  if (base.dim() < 2 && rotation_rate != 0.0) {
    throw Error(ErrorCode::InvalidParameter, "rotation needs dim >= 2");
  }
}

double DriftSpec::angle(std::size_t t) const {
  const double limit = std::min(max_angle, kMaxDriftAngle);
  return std::min(limit, rotation_rate * static_cast<double>(t));
}

std::vector<double> rotation_partner(std::span<const double> base, std::uint64_t seed) {
  const std::size_t d = base.size();
  std::vector<double> w(d, 0.0);
  if (d < 2) return w;
  const double norm = l2_norm(base);
  if (norm == 0.0) throw Error(ErrorCode::ZeroNormVector, "rotation plane needs a nonzero base");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 16; ++attempt) {
    for (double& x : w) x = gauss(rng);
    // Two Gram-Schmidt passes against the unit base.
    for (int pass = 0; pass < 2; ++pass) {
      double proj = 0.0;
      for (std::size_t k = 0; k < d; ++k) proj += w[k] * base[k] / norm;
      for (std::size_t k = 0; k < d; ++k) w[k] -= proj * base[k] / norm;
    }
    const double wn = l2_norm(w);
    if (wn > 1e-8) {
      for (double& x : w) x /= wn;
      return w;
    }
  }
  throw Error(ErrorCode::InvalidParameter, "could not draw a rotation partner");
}

SimulatedSeries simulate_token(const DriftSpec& spec) {
  spec.validate();
  SimulatedSeries out;
  const auto base = spec.base.values();
  const auto partner = rotation_partner(base, spec.plane_seed);
  std::mt19937_64 noise_rng(spec.noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<std::int64_t> steps;
  std::vector<EmbeddingMatrix> frames;
  bool clamped = false;
  for (std::size_t t = 0; t <= spec.steps; ++t) {
    const double phi = spec.angle(t);
    if (phi < spec.rotation_rate * static_cast<double>(t)) clamped = true;
    auto v = drifted(base, partner, spec.scale(t), phi);
    if (spec.noise_sigma > 0.0) {
      for (double& x : v) x += spec.noise_sigma * noise(noise_rng);
    }
    std::vector<double> data = v;
    data.insert(data.end(), base.begin(), base.end());
    steps.push_back(static_cast<std::int64_t>(t));
    frames.emplace_back(2, base.size(), std::move(data),
                        std::vector<std::string>{kSimulatedTokenLabel, kSimulatedConceptLabel});
  }
  if (clamped) {
    out.notes.push_back("rotation angle clamped at " +
                        std::to_string(std::min(spec.max_angle, kMaxDriftAngle)) + " rad");
  }
  out.series = CheckpointSeries(std::move(steps), std::move(frames));
  return out;
}

SimulatedPromptPair simulate_prompt(const DriftSpec& spec, std::size_t length,
                                    const std::vector<std::size_t>& drift_positions) {
  spec.validate();
  if (length == 0) throw Error(ErrorCode::InvalidParameter, "prompt length must be >= 1");
  for (std::size_t p : drift_positions) {
    if (p >= length) {
      throw Error(ErrorCode::IndexError, "drift position " + std::to_string(p) +
                                             " outside [0, " + std::to_string(length) + ")");
    }
  }
  const std::set<std::size_t> drifting(drift_positions.begin(), drift_positions.end());
  const std::size_t d = spec.base.dim();
  const double radius = l2_norm(spec.base.values());

  std::vector<std::vector<double>> reference(length);
  reference[0] = spec.base.values();
  std::mt19937_64 ref_rng(spec.plane_seed ^ kReferenceStream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 1; i < length; ++i) {
    std::vector<double> r(d);
    for (double& x : r) x = gauss(ref_rng);
    const double rn = l2_norm(r);
    for (double& x : r) x *= radius / rn;
    reference[i] = std::move(r);
  }
  std::vector<std::vector<double>> partners(length);
  for (std::size_t i : drifting) partners[i] = rotation_partner(reference[i], spec.plane_seed + i);

  std::vector<double> ref_data;
  ref_data.reserve(length * d);
  for (const auto& r : reference) ref_data.insert(ref_data.end(), r.begin(), r.end());
  const EmbeddingMatrix ref_frame(length, d, ref_data);

  std::mt19937_64 noise_rng(spec.noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::int64_t> steps;
  std::vector<EmbeddingMatrix> drift_frames;
  std::vector<EmbeddingMatrix> ref_frames;
  bool clamped = false;
  for (std::size_t t = 0; t <= spec.steps; ++t) {
    const double phi = spec.angle(t);
    if (phi < spec.rotation_rate * static_cast<double>(t)) clamped = true;
    std::vector<double> data = ref_data;
    for (std::size_t i : drifting) {
      auto v = drifted(reference[i], partners[i], spec.scale(t), phi);
      if (spec.noise_sigma > 0.0) {
        for (double& x : v) x += spec.noise_sigma * noise(noise_rng);
      }
      std::copy(v.begin(), v.end(), data.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    steps.push_back(static_cast<std::int64_t>(t));
    drift_frames.emplace_back(length, d, std::move(data));
    ref_frames.push_back(ref_frame);
  }

  SimulatedPromptPair out;
  if (clamped) {
    out.notes.push_back("rotation angle clamped at " +
                        std::to_string(std::min(spec.max_angle, kMaxDriftAngle)) + " rad");
  }
  out.drifting = CheckpointSeries(steps, std::move(drift_frames));
  out.reference = CheckpointSeries(std::move(steps), std::move(ref_frames));
  return out;
}

}  // namespace tea
