#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "regpf/random.hpp"

namespace regpf {

/// Natural parameterization of the univariate stochastic volatility model
///
///   y_t | x_t       ~ N(0, exp(x_t))
///   x_t | x_{t-1}   ~ N(alpha + phi * x_{t-1}, sigma2)
///   x_0             ~ N(0, sigma2 / (1 - phi^2))
struct SVParams {
  double alpha = 0.0;
  double phi = 0.0;
  double sigma2 = 1.0;

  friend bool operator==(const SVParams&, const SVParams&) = default;
};

/// Unconstrained parameterization carried by the particles:
/// psi = log((1 + phi) / (1 - phi)), lambda = log(sigma2).
struct SVParamsTransformed {
  double alpha = 0.0;
  double psi = 0.0;
  double lambda = 0.0;

  friend bool operator==(const SVParamsTransformed&, const SVParamsTransformed&) = default;
};

/// Throws DomainError unless sigma2 > 0, |phi| < 1 and all fields are finite.
void validate(const SVParams& p);

SVParamsTransformed to_transformed(const SVParams& p);
SVParams from_transformed(const SVParamsTransformed& t);

enum class DatasetLabel { daily, weekly, custom };

std::string_view to_string(DatasetLabel label);
DatasetLabel parse_dataset_label(std::string_view text);

/// alpha = 0, phi = 0.99, sigma2 = 0.01.
SVParams daily_params();
/// alpha = 0, phi = 0.9, sigma2 = 0.1.
SVParams weekly_params();
/// Default horizon for a labelled dataset: 1500 (daily), 500 (weekly).
std::size_t default_horizon(DatasetLabel label);

/// A simulated path. `y` holds y_1..y_T (y[t - 1] is y_t); `x_true` holds x_0..x_T.
struct Dataset {
  std::size_t horizon = 0;
  std::vector<double> y;
  std::vector<double> x_true;
  SVParams params_true;
  std::uint64_t seed = 0;
  DatasetLabel label = DatasetLabel::custom;

  /// Observation at time t, 1 <= t <= horizon.
  double obs(std::size_t t) const { return y.at(t - 1); }
  void validate() const;
};

/// Simulates T steps from the stationary start. Bitwise reproducible for equal (p, T, seed).
Dataset simulate(const SVParams& p, std::size_t horizon, std::uint64_t seed,
                 DatasetLabel label = DatasetLabel::custom);

/// Same model, drawing from a caller-owned stream. The returned dataset records seed 0.
Dataset simulate(const SVParams& p, std::size_t horizon, Rng& rng);

/// log N(x; mean, variance).
double log_normal_density(double x, double mean, double variance);

/// log N(y; 0, exp(x)) = -(log 2pi + x + y^2 exp(-x)) / 2.
double log_measurement_density(double y, double x);

/// alpha + phi * x_prev.
double transition_mean(double x_prev, const SVParams& p);

/// log N(x_next; alpha + phi * x_prev, sigma2).
double log_transition_density(double x_next, double x_prev, const SVParams& p);

struct GaussianProposal {
  double mean = 0.0;
  double variance = 1.0;
};

/// Gaussian approximation of prior N(prior_mean, prior_variance) times the measurement
/// factor exp(-x/2 - y2 exp(-x)/2), obtained from a second-order expansion of the log
/// measurement factor at prior_mean. `y2` is the squared observation divided by any
/// measurement scale.
GaussianProposal taylor_proposal(double prior_mean, double prior_variance, double y2);

/// State proposal for x_{t+1} given x_t, expanded at the transition mean.
GaussianProposal shephard_pitt_proposal(double x_prev, const SVParams& p, double y_next);

}  // namespace regpf
