#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace gaitopt {

/// Thrown when a model produces a non-finite output during planning or rollout.
class ModelDivergenceError : public std::runtime_error {
 public:
  explicit ModelDivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when regression training produces a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& head, int epoch, const std::string& what)
      : std::runtime_error("training failed for head '" + head + "' at epoch " +
                           std::to_string(epoch) + ": " + what),
        head_(head),
        epoch_(epoch) {}
  const std::string& head() const { return head_; }
  int epoch() const { return epoch_; }

 private:
  std::string head_;
  int epoch_;
};

/// Thrown when the planner cannot produce a usable distribution
/// (e.g. every sampled trajectory diverged).
class PlannerError : public std::runtime_error {
 public:
  explicit PlannerError(const std::string& what) : std::runtime_error(what) {}
};

inline double square(double x) { return x * x; }

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Squared Euclidean distance between two equal-length vectors.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "squared_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += square(a[i] - b[i]);
  return s;
}

inline double clamp_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace gaitopt
