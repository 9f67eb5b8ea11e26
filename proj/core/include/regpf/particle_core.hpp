#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "regpf/random.hpp"
#include "regpf/sv_model.hpp"

namespace regpf {

using ThetaVector = Eigen::Vector3d;
using ThetaMatrix = Eigen::Matrix3d;

inline ThetaVector as_vector(const SVParamsTransformed& t) { return {t.alpha, t.psi, t.lambda}; }
inline SVParamsTransformed as_params(const ThetaVector& v) { return {v[0], v[1], v[2]}; }

/// Weighted particles over the parameter-augmented state (x, theta).
/// Log-weights are unnormalized; only their differences matter.
struct ParticleCloud {
  std::vector<double> states;
  std::vector<SVParamsTransformed> params;
  std::vector<double> log_weights;

  std::size_t size() const { return states.size(); }

  /// Throws DomainError on mismatched lengths or an empty cloud, DegeneracyError when no
  /// log-weight is finite.
  void validate() const;

  /// Cloud with equal log-weights (zero).
  static ParticleCloud uniform(std::vector<double> states, std::vector<SVParamsTransformed> params);

  friend bool operator==(const ParticleCloud&, const ParticleCloud&) = default;
};

/// Shrinkage a and jitter factor for the Gaussian kernel move; b^2 = 1 - a^2.
struct KernelConfig {
  double a = 0.98;
  /// Initial diagonal jitter, relative to trace(V) / 3.
  double jitter = 1e-10;

  double b() const;
  void validate() const;
};

/// Shrinkage from a discount factor delta: a = (3 delta - 1) / (2 delta).
double shrinkage_from_discount(double delta);

/// Max-shifted softmax of log-weights. Throws DegeneracyError when every entry is -inf (or NaN).
std::vector<double> normalize(std::span<const double> log_weights);
inline std::vector<double> normalize(const ParticleCloud& cloud) { return normalize(cloud.log_weights); }

/// Effective sample size N / (1 + N * sum_i (w_i - mean(w))^2 / (sum w)^2), in [1, N].
/// Accepts unnormalized nonnegative weights; throws DegeneracyError when they sum to zero.
double ess(std::span<const double> weights);

/// ESS of a cloud's importance weights.
double ess(const ParticleCloud& cloud);

/// `count` independent categorical draws with probabilities proportional to `weights`.
std::vector<std::size_t> multinomial_indices(std::span<const double> weights, std::size_t count, Rng& rng);

/// Particles indexed by `indices`, with equal log-weights.
ParticleCloud gather(const ParticleCloud& cloud, std::span<const std::size_t> indices);

/// Multinomial resampling: N draws by normalized weight, uniform output weights.
ParticleCloud multinomial_resample(const ParticleCloud& cloud, Rng& rng);

struct MeanCov {
  ThetaVector mean = ThetaVector::Zero();
  ThetaMatrix cov = ThetaMatrix::Zero();
};

/// Weighted mean and population-weighted covariance (no bias correction).
MeanCov weighted_mean_cov(std::span<const SVParamsTransformed> params, std::span<const double> weights);

/// Liu-West kernel move theta -> a theta + (1 - a) mean + b L z with L L^T = V + jitter I.
/// The factor is computed once at construction so it can be shared by every particle of a step.
class LiuWestKernel {
 public:
  LiuWestKernel(const MeanCov& stats, const KernelConfig& config);

  /// Location of the kernel centred at theta: a theta + (1 - a) mean.
  ThetaVector shrunk_mean(const ThetaVector& theta) const;

  /// Move with externally drawn standard normals.
  ThetaVector move(const ThetaVector& theta, const std::array<double, 3>& z) const;
  ThetaVector move(const ThetaVector& theta, Rng& rng) const;

  const ThetaMatrix& factor() const { return factor_; }
  /// Jitter actually added to the diagonal before factorization.
  double applied_jitter() const { return applied_jitter_; }

 private:
  ThetaVector mean_;
  ThetaMatrix factor_ = ThetaMatrix::Zero();
  double a_;
  double b_;
  double applied_jitter_ = 0.0;
};

/// One-off kernel move (factorizes V on every call).
ThetaVector liu_west_move(const ThetaVector& theta, const ThetaVector& mean, const ThetaMatrix& cov,
                          const KernelConfig& config, Rng& rng);

}  // namespace regpf
