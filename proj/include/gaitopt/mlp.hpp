#pragma once

// Small feed-forward regressors trained by mini-batch gradient descent with
// momentum. Parameters live in one flat vector (per layer: row-major weights
// then biases), which keeps the optimizer, the finite-difference gradient
// check and serialization trivial. Hidden activation is tanh, output is
// linear; the loss everywhere is mean squared error averaged over samples
// and output components.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gaitopt/common.hpp"
#include "gaitopt/rng.hpp"

namespace gaitopt {

using Matrix = std::vector<std::vector<double>>;  // rows = samples

/// Per-feature standardization fitted on training data. Features with (near)
/// zero spread keep unit scale so the transform stays invertible.
struct Normalizer {
  std::vector<double> mean, stddev;

  static Normalizer fit(const Matrix& rows) {
    require(!rows.empty(), "normalizer: empty data");
    const std::size_t d = rows[0].size();
    Normalizer n;
    n.mean.assign(d, 0.0);
    n.stddev.assign(d, 0.0);
    for (const auto& r : rows)
      for (std::size_t i = 0; i < d; ++i) n.mean[i] += r[i];
    for (double& m : n.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows)
      for (std::size_t i = 0; i < d; ++i) n.stddev[i] += square(r[i] - n.mean[i]);
    for (double& s : n.stddev) {
      s = std::sqrt(s / static_cast<double>(rows.size()));
      if (s < 1e-12) s = 1.0;
    }
    return n;
  }

  std::vector<double> normalize(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / stddev[i];
    return out;
  }

  std::vector<double> denormalize(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * stddev[i] + mean[i];
    return out;
  }

  std::size_t dim() const { return mean.size(); }
};

class Regressor {
 public:
  /// layer_sizes = (input, hidden..., output); weights start at Xavier scale.
  Regressor(std::vector<int> layer_sizes, uint64_t seed) : sizes_(std::move(layer_sizes)) {
    require(sizes_.size() >= 2, "regressor: need at least input and output layers");
    for (int s : sizes_) require(s >= 1, "regressor: layer sizes must be >= 1");
    offsets_.resize(sizes_.size() - 1);
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_[l] = total;
      total += static_cast<std::size_t>(sizes_[l] + 1) * sizes_[l + 1];
    }
    params_.assign(total, 0.0);
    RngStream rs(seed ^ kStreamInit, static_cast<uint32_t>(sizes_.size()));
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const double scale = std::sqrt(1.0 / sizes_[l]);
      double* w = weights(l);
      for (int i = 0; i < sizes_[l + 1] * sizes_[l]; ++i) w[i] = scale * rs.normal();
      // biases start at zero
    }
  }

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  int num_layers() const { return static_cast<int>(sizes_.size()); }

  /// Sum over layers of (fan_in + 1) * fan_out.
  std::size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::vector<double> forward(std::span<const double> x) const {
    require(static_cast<int>(x.size()) == input_dim(), "regressor: bad input size");
    std::vector<double> act(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      affine(l, act, next);
      if (l + 2 < sizes_.size())
        for (double& v : next) v = std::tanh(v);
      act.swap(next);
    }
    return act;
  }

  /// MSE over the index subset plus its gradient w.r.t. all parameters.
  /// grad must be preallocated to param_count(); it is overwritten.
  double loss_and_gradient(const Matrix& X, const Matrix& Y,
                           std::span<const std::size_t> idx,
                           std::vector<double>& grad) const {
    require(!idx.empty(), "regressor: empty batch");
    require(grad.size() == params_.size(), "regressor: gradient buffer size mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
    const int L = static_cast<int>(sizes_.size()) - 1;  // number of affine layers
    const double inv = 1.0 / (static_cast<double>(idx.size()) * output_dim());

    std::vector<std::vector<double>> acts(L + 1);
    double loss = 0.0;
    for (const std::size_t s : idx) {
      // forward pass, keeping post-activation values per layer
      acts[0].assign(X[s].begin(), X[s].end());
      for (int l = 0; l < L; ++l) {
        affine(l, acts[l], acts[l + 1]);
        if (l + 1 < L)
          for (double& v : acts[l + 1]) v = std::tanh(v);
      }
      // backward pass
      std::vector<double> delta(sizes_.back());
      for (int o = 0; o < sizes_.back(); ++o) {
        const double err = acts[L][o] - Y[s][o];
        loss += err * err * inv;
        delta[o] = 2.0 * err * inv;
      }
      for (int l = L - 1; l >= 0; --l) {
        double* gw = grad.data() + offsets_[l];
        double* gb = gw + static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
        const double* w = params_.data() + offsets_[l];
        const auto& input = acts[l];
        for (int o = 0; o < sizes_[l + 1]; ++o) {
          const double d = delta[o];
          double* grow = gw + static_cast<std::size_t>(o) * sizes_[l];
          for (int i = 0; i < sizes_[l]; ++i) grow[i] += d * input[i];
          gb[o] += d;
        }
        if (l > 0) {
          std::vector<double> prev(sizes_[l], 0.0);
          for (int o = 0; o < sizes_[l + 1]; ++o) {
            const double d = delta[o];
            const double* wrow = w + static_cast<std::size_t>(o) * sizes_[l];
            for (int i = 0; i < sizes_[l]; ++i) prev[i] += d * wrow[i];
          }
          for (int i = 0; i < sizes_[l]; ++i)
            prev[i] *= 1.0 - square(acts[l][i]);  // d tanh = 1 - tanh^2
          delta.swap(prev);
        }
      }
    }
    return loss;
  }

  double batch_mse(const Matrix& X, const Matrix& Y,
                   std::span<const std::size_t> idx) const {
    double loss = 0.0;
    for (const std::size_t s : idx) {
      const auto y = forward(X[s]);
      for (int o = 0; o < output_dim(); ++o) loss += square(y[o] - Y[s][o]);
    }
    return loss / (static_cast<double>(idx.size()) * output_dim());
  }

 private:
  void affine(std::size_t layer, const std::vector<double>& in,
              std::vector<double>& out) const {
    const int rows = sizes_[layer + 1];
    const int cols = sizes_[layer];
    const double* w = params_.data() + offsets_[layer];
    const double* b = w + static_cast<std::size_t>(rows) * cols;
    out.assign(rows, 0.0);
    for (int o = 0; o < rows; ++o) {
      const double* wrow = w + static_cast<std::size_t>(o) * cols;
      double acc = b[o];
      for (int i = 0; i < cols; ++i) acc += wrow[i] * in[i];
      out[o] = acc;
    }
  }

  double* weights(std::size_t layer) { return params_.data() + offsets_[layer]; }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;  // per affine layer into params_
  std::vector<double> params_;
};

struct FitConfig {
  double learning_rate = 0.02;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 80;
  uint64_t seed = 0;
  std::vector<int> hidden{64, 64};
  double validation_fraction = 0.2;

  void validate() const {
    require(learning_rate > 0.0, "fit config: learning rate must be > 0");
    require(validation_fraction > 0.0 && validation_fraction <= 0.5,
            "fit config: validation fraction must lie in (0, 0.5]");
    require(batch_size >= 1 && epochs >= 1, "fit config: batch size and epochs must be >= 1");
    require(momentum >= 0.0 && momentum < 1.0, "fit config: momentum must lie in [0, 1)");
  }
};

struct FitReport {
  double train_mse = 0.0;
  double val_mse = 0.0;
  int epochs = 0;
};

/// Mini-batch SGD with momentum on normalized data. Deterministic under a
/// fixed config seed. Throws TrainingError on a non-finite loss.
inline FitReport fit_regressor(Regressor& reg, const Matrix& X, const Matrix& Y,
                               const FitConfig& cfg, const std::string& name = "regressor") {
  cfg.validate();
  require(X.size() == Y.size() && !X.empty(), "fit: need matching non-empty data");

  const std::size_t n = X.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  RngStream split_rs(cfg.seed ^ kStreamTrain, 0x5317u);
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(idx[i], idx[split_rs.below(i + 1)]);
  std::size_t n_val = static_cast<std::size_t>(std::round(cfg.validation_fraction * n));
  if (n > 1 && n_val == 0) n_val = 1;
  if (n_val >= n) n_val = n - 1;
  std::vector<std::size_t> val(idx.begin(), idx.begin() + n_val);
  std::vector<std::size_t> train(idx.begin() + n_val, idx.end());

  std::vector<double> grad(reg.param_count());
  std::vector<double> velocity(reg.param_count(), 0.0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    RngStream shuffle_rs(cfg.seed ^ kStreamTrain, 1, static_cast<uint32_t>(epoch));
    for (std::size_t i = train.size() - 1; i > 0; --i)
      std::swap(train[i], train[shuffle_rs.below(i + 1)]);
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(train.size(), start + cfg.batch_size);
      const double loss = reg.loss_and_gradient(
          X, Y, std::span(train).subspan(start, stop - start), grad);
      if (!std::isfinite(loss))
        throw TrainingError(name, epoch, "loss diverged to a non-finite value");
      auto& p = reg.params();
      for (std::size_t k = 0; k < p.size(); ++k) {
        velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * grad[k];
        p[k] += velocity[k];
      }
    }
  }

  FitReport report;
  report.epochs = cfg.epochs;
  report.train_mse = reg.batch_mse(X, Y, train);
  report.val_mse = val.empty() ? report.train_mse : reg.batch_mse(X, Y, val);
  return report;
}

/// Central-difference gradient of the batch MSE, parameter by parameter.
inline std::vector<double> numeric_gradient(const Regressor& reg, const Matrix& X,
                                            const Matrix& Y,
                                            std::span<const std::size_t> idx,
                                            double epsilon) {
  require(epsilon >= 1e-7 && epsilon <= 1e-3, "grad check: epsilon out of range");
  Regressor probe = reg;
  std::vector<double> grad(reg.param_count());
  for (std::size_t k = 0; k < grad.size(); ++k) {
    const double saved = probe.params()[k];
    probe.params()[k] = saved + epsilon;
    const double up = probe.batch_mse(X, Y, idx);
    probe.params()[k] = saved - epsilon;
    const double down = probe.batch_mse(X, Y, idx);
    probe.params()[k] = saved;
    grad[k] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

inline double max_relative_error(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double denom = std::max({std::fabs(a[k]), std::fabs(b[k]), 1e-10});
    worst = std::max(worst, std::fabs(a[k] - b[k]) / denom);
  }
  return worst;
}

/// Max relative disagreement between analytic and central-difference gradients.
inline double grad_check(const Regressor& reg, const Matrix& X, const Matrix& Y,
                         std::span<const std::size_t> idx, double epsilon) {
  std::vector<double> analytic(reg.param_count());
  reg.loss_and_gradient(X, Y, idx, analytic);
  const std::vector<double> numeric = numeric_gradient(reg, X, Y, idx, epsilon);
  return max_relative_error(analytic, numeric);
}

// ---------------------------------------------------------------------------
// Serialization: magic, u32 layer count, u32 layer sizes, then 64-bit reals
// (input normalizer mean/std, target normalizer mean/std, parameters).

inline constexpr char kRegressorMagic[8] = {'G', 'O', 'P', 'T', 'R', 'E', 'G', '1'};

struct TrainedHead {
  Regressor reg;
  Normalizer in_norm;
  Normalizer out_norm;

  std::vector<double> predict(std::span<const double> x) const {
    return out_norm.denormalize(reg.forward(in_norm.normalize(x)));
  }
};

namespace detail {
inline void write_f64(std::ofstream& f, std::span<const double> xs) {
  f.write(reinterpret_cast<const char*>(xs.data()),
          static_cast<std::streamsize>(xs.size() * sizeof(double)));
}
inline void read_f64(std::ifstream& f, std::span<double> xs) {
  f.read(reinterpret_cast<char*>(xs.data()),
         static_cast<std::streamsize>(xs.size() * sizeof(double)));
}
}  // namespace detail

inline void save_head(const std::string& path, const TrainedHead& head) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "save_head: cannot open " + path);
  f.write(kRegressorMagic, 8);
  const auto& sizes = head.reg.layer_sizes();
  const uint32_t n = static_cast<uint32_t>(sizes.size());
  f.write(reinterpret_cast<const char*>(&n), 4);
  for (int s : sizes) {
    const uint32_t u = static_cast<uint32_t>(s);
    f.write(reinterpret_cast<const char*>(&u), 4);
  }
  detail::write_f64(f, head.in_norm.mean);
  detail::write_f64(f, head.in_norm.stddev);
  detail::write_f64(f, head.out_norm.mean);
  detail::write_f64(f, head.out_norm.stddev);
  detail::write_f64(f, head.reg.params());
  require(f.good(), "save_head: write failed for " + path);
}

inline TrainedHead load_head(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "load_head: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  require(f.good() && std::memcmp(magic, kRegressorMagic, 8) == 0,
          "load_head: bad magic in " + path);
  uint32_t n = 0;
  f.read(reinterpret_cast<char*>(&n), 4);
  require(f.good() && n >= 2 && n <= 64, "load_head: corrupt layer count in " + path);
  std::vector<int> sizes(n);
  for (auto& s : sizes) {
    uint32_t u = 0;
    f.read(reinterpret_cast<char*>(&u), 4);
    require(f.good() && u >= 1 && u <= (1u << 20), "load_head: corrupt layer size");
    s = static_cast<int>(u);
  }
  TrainedHead head{Regressor(sizes, 0), Normalizer{}, Normalizer{}};
  head.in_norm.mean.resize(sizes.front());
  head.in_norm.stddev.resize(sizes.front());
  head.out_norm.mean.resize(sizes.back());
  head.out_norm.stddev.resize(sizes.back());
  detail::read_f64(f, head.in_norm.mean);
  detail::read_f64(f, head.in_norm.stddev);
  detail::read_f64(f, head.out_norm.mean);
  detail::read_f64(f, head.out_norm.stddev);
  detail::read_f64(f, head.reg.params());
  require(f.good(), "load_head: truncated file " + path);
  return head;
}

}  // namespace gaitopt
