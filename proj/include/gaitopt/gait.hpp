#pragma once

// Continuous gait space for quadruped interlimb coordination.
//
// A gait command is a 3-vector of phase offsets in [0, 1). Component i is the
// phase lead of foot i+1 relative to the front-left foot, so (0, g1, g2, g3)
// are the per-foot offsets in order (FL, FR, RL, RR). The space is periodic
// per component: 0.99 and 0.01 are nearly the same coordination pattern, so
// all distances are circular.

#include <array>
#include <cmath>
#include <cstddef>

#include "gaitopt/common.hpp"

namespace gaitopt {

/// Reduces x into [0, 1) with a non-negative result (mathematical modulo).
inline double wrap_unit(double x) {
  require(std::isfinite(x), "wrap: non-finite component");
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;  // rounding of tiny negatives can land exactly on 1
  return r;
}

/// Phase-offset triple; every constructor path normalizes through wrap_unit,
/// so the components are always in [0, 1).
class GaitCommand {
 public:
  GaitCommand() = default;  // all feet in phase (pronk)

  static GaitCommand wrap(const std::array<double, 3>& raw) {
    GaitCommand g;
    for (int i = 0; i < 3; ++i) g.offsets_[i] = wrap_unit(raw[i]);
    return g;
  }

  double operator[](std::size_t i) const { return offsets_[i]; }
  const std::array<double, 3>& offsets() const { return offsets_; }

  friend bool operator==(const GaitCommand&, const GaitCommand&) = default;

 private:
  std::array<double, 3> offsets_{0.0, 0.0, 0.0};
};

/// Modulo-1 normalization of a raw offset triple.
inline GaitCommand wrap(const std::array<double, 3>& raw) { return GaitCommand::wrap(raw); }

/// Distance on the unit circle between two phase fractions in [0, 1).
inline double circular_delta(double a, double b) {
  const double d = std::fabs(a - b);
  return d > 0.5 ? 1.0 - d : d;
}

/// Sum of squared per-component circular distances. Symmetric, zero iff equal.
inline double gait_distance_sq(const GaitCommand& a, const GaitCommand& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += square(circular_delta(a[i], b[i]));
  return s;
}

inline double gait_distance(const GaitCommand& a, const GaitCommand& b) {
  return std::sqrt(gait_distance_sq(a, b));
}

namespace gaits {
// Two-beat gait encodings under the (0, g1, g2, g3) foot-offset convention:
// trot pairs diagonals, pace pairs laterals, bound pairs front/rear,
// pronk moves all four feet together.
inline const GaitCommand trot = GaitCommand::wrap({0.5, 0.5, 0.0});
inline const GaitCommand pace = GaitCommand::wrap({0.5, 0.0, 0.5});
inline const GaitCommand bound = GaitCommand::wrap({0.0, 0.5, 0.5});
inline const GaitCommand pronk = GaitCommand::wrap({0.0, 0.0, 0.0});
}  // namespace gaits

inline constexpr int kNumCanonicalGaits = 4;

/// Canonical gait table, fixed order (trot, pace, bound, pronk).
inline const std::array<GaitCommand, kNumCanonicalGaits>& canonical_gaits() {
  static const std::array<GaitCommand, kNumCanonicalGaits> table{
      gaits::trot, gaits::pace, gaits::bound, gaits::pronk};
  return table;
}

inline const char* canonical_gait_name(int i) {
  static constexpr const char* names[kNumCanonicalGaits] = {"trot", "pace", "bound", "pronk"};
  return names[i];
}

inline int canonical_gait_index(const GaitCommand& g) {
  for (int i = 0; i < kNumCanonicalGaits; ++i)
    if (canonical_gaits()[i] == g) return i;
  return -1;
}

/// Circular distance from g to the nearest canonical gait.
inline double nearest_canonical_distance(const GaitCommand& g) {
  double best = gait_distance_sq(g, canonical_gaits()[0]);
  for (int i = 1; i < kNumCanonicalGaits; ++i)
    best = std::min(best, gait_distance_sq(g, canonical_gaits()[i]));
  return std::sqrt(best);
}

/// Per-foot phase offsets (FL, FR, RL, RR).
inline std::array<double, 4> foot_offsets(const GaitCommand& g) {
  return {0.0, g[0], g[1], g[2]};
}

/// Stance flags at one instant of the global phase clock.
struct ContactState {
  std::array<bool, 4> stance{true, true, true, true};  // (FL, FR, RL, RR)
  double phase = 0.0;
};

/// Foot f is in stance iff frac(phase + offset_f) < duty.
inline ContactState contact_schedule(const GaitCommand& g, double phase, double duty) {
  require(std::isfinite(phase), "contact_schedule: non-finite phase");
  require(std::isfinite(duty) && duty > 0.0 && duty < 1.0,
          "contact_schedule: duty factor must lie in (0, 1)");
  const std::array<double, 4> offsets = foot_offsets(g);
  ContactState c;
  c.phase = wrap_unit(phase);
  for (int f = 0; f < 4; ++f) c.stance[f] = wrap_unit(c.phase + offsets[f]) < duty;
  return c;
}

/// Softmin interpolation weights over (trot, pace, bound, pronk):
/// w_i proportional to exp(-d_i^2 / sigma_w^2), normalized to sum 1.
inline std::array<double, 4> canonical_weights(const GaitCommand& g, double sigma_w = 0.25) {
  require(std::isfinite(sigma_w) && sigma_w > 0.0, "canonical_weights: sigma_w must be > 0");
  std::array<double, 4> d2{};
  double d2_min = 0.0;
  for (int i = 0; i < kNumCanonicalGaits; ++i) {
    d2[i] = gait_distance_sq(g, canonical_gaits()[i]);
    if (i == 0 || d2[i] < d2_min) d2_min = d2[i];
  }
  const double inv = 1.0 / (sigma_w * sigma_w);
  std::array<double, 4> w{};
  double sum = 0.0;
  for (int i = 0; i < kNumCanonicalGaits; ++i) {
    w[i] = std::exp(-(d2[i] - d2_min) * inv);  // shift by the min for stability
    sum += w[i];
  }
  for (double& wi : w) wi /= sum;
  return w;
}

}  // namespace gaitopt
