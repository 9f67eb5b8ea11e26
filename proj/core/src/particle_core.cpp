#include "regpf/particle_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "regpf/errors.hpp"

namespace regpf {

void ParticleCloud::validate() const {
  if (states.empty()) throw DomainError("particle cloud is empty");
  if (params.size() != states.size() || log_weights.size() != states.size()) {
    throw DomainError("particle cloud sequences differ in length");
  }
  const bool any_finite =
      std::any_of(log_weights.begin(), log_weights.end(), [](double lw) { return lw > -std::numeric_limits<double>::infinity() && !std::isnan(lw); });
  if (!any_finite) throw DegeneracyError("all particle log-weights are -inf");
}

ParticleCloud ParticleCloud::uniform(std::vector<double> states, std::vector<SVParamsTransformed> params) {
  ParticleCloud cloud;
  cloud.log_weights.assign(states.size(), 0.0);
  cloud.states = std::move(states);
  cloud.params = std::move(params);
  return cloud;
}

double KernelConfig::b() const { return std::sqrt(std::max(0.0, 1.0 - a * a)); }

void KernelConfig::validate() const {
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError("kernel shrinkage a must lie in [0, 1]");
  if (!(jitter >= 0.0) || !std::isfinite(jitter)) throw DomainError("kernel jitter must be nonnegative");
}

double shrinkage_from_discount(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("discount factor must lie in (0, 1]");
  return (3.0 * delta - 1.0) / (2.0 * delta);
}

std::vector<double> normalize(std::span<const double> log_weights) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (!std::isnan(lw)) max_lw = std::max(max_lw, lw);
  }
  if (!(max_lw > -std::numeric_limits<double>::infinity())) {
    throw DegeneracyError("cannot normalize: every log-weight is -inf");
  }
  if (std::isinf(max_lw)) throw NumericalError("cannot normalize: a log-weight is +inf");

  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::isnan(log_weights[i]) ? 0.0 : std::exp(log_weights[i] - max_lw);
    total += w[i];
  }
  for (double& wi : w) wi /= total;
  return w;
}

double ess(std::span<const double> weights) {
  const double n = static_cast<double>(weights.size());
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DegeneracyError("ESS undefined for all-zero weights");
  const double mean = total / n;
  double dispersion = 0.0;
  for (double w : weights) dispersion += (w - mean) * (w - mean);
  const double value = n / (1.0 + n * dispersion / (total * total));
  return std::clamp(value, 1.0, n);
}

double ess(const ParticleCloud& cloud) { return ess(normalize(cloud)); }

std::vector<std::size_t> multinomial_indices(std::span<const double> weights, std::size_t count, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> indices(count);
  for (auto& idx : indices) idx = pick(rng);
  return indices;
}

ParticleCloud gather(const ParticleCloud& cloud, std::span<const std::size_t> indices) {
  ParticleCloud out;
  out.states.reserve(indices.size());
  out.params.reserve(indices.size());
  for (std::size_t j : indices) {
    out.states.push_back(cloud.states.at(j));
    out.params.push_back(cloud.params.at(j));
  }
  out.log_weights.assign(indices.size(), 0.0);
  return out;
}

ParticleCloud multinomial_resample(const ParticleCloud& cloud, Rng& rng) {
  cloud.validate();
  const auto w = normalize(cloud);
  const auto indices = multinomial_indices(w, cloud.size(), rng);
  return gather(cloud, indices);
}

MeanCov weighted_mean_cov(std::span<const SVParamsTransformed> params, std::span<const double> weights) {
  if (params.size() != weights.size()) throw DomainError("params and weights differ in length");
  MeanCov out;
  for (std::size_t i = 0; i < params.size(); ++i) out.mean += weights[i] * as_vector(params[i]);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ThetaVector d = as_vector(params[i]) - out.mean;
    out.cov.noalias() += weights[i] * (d * d.transpose());
  }
  // Symmetric by construction up to rounding; make it exact.
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

LiuWestKernel::LiuWestKernel(const MeanCov& stats, const KernelConfig& config)
    : mean_(stats.mean), a_(config.a), b_(config.b()) {
  config.validate();
  if (b_ == 0.0) return;

  const double trace = stats.cov.trace();
  if (!std::isfinite(trace)) throw NumericalError("kernel covariance is not finite");
  if (trace <= 0.0) return;  // all parameter particles coincide: the move is a pure shrink

  double jitter = config.jitter * trace / 3.0;
  for (int attempt = 0; attempt <= 3; ++attempt, jitter *= 10.0) {
    Eigen::LLT<ThetaMatrix> llt(stats.cov + jitter * ThetaMatrix::Identity());
    if (llt.info() == Eigen::Success) {
      factor_ = llt.matrixL();
      applied_jitter_ = jitter;
      return;
    }
  }
  throw NumericalError("kernel covariance factorization failed after jitter escalation");
}

ThetaVector LiuWestKernel::shrunk_mean(const ThetaVector& theta) const { return a_ * theta + (1.0 - a_) * mean_; }

ThetaVector LiuWestKernel::move(const ThetaVector& theta, const std::array<double, 3>& z) const {
  const ThetaVector zv(z[0], z[1], z[2]);
  return shrunk_mean(theta) + b_ * (factor_ * zv);
}

ThetaVector LiuWestKernel::move(const ThetaVector& theta, Rng& rng) const {
  std::normal_distribution<double> normal;
  std::array<double, 3> z{};
  for (double& zi : z) zi = normal(rng);
  return move(theta, z);
}

ThetaVector liu_west_move(const ThetaVector& theta, const ThetaVector& mean, const ThetaMatrix& cov,
                          const KernelConfig& config, Rng& rng) {
  MeanCov stats;
  stats.mean = mean;
  stats.cov = cov;
  return LiuWestKernel(stats, config).move(theta, rng);
}

}  // namespace regpf
