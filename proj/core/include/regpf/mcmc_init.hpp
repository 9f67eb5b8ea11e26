#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "regpf/particle_core.hpp"
#include "regpf/random.hpp"
#include "regpf/sv_model.hpp"

// Metropolis-within-Gibbs startup for the filters.
//
// The sampler works on the centred model
//
//   y_t | x_t ~ N(0, beta2 exp(x_t)),   x_t = phi x_{t-1} + sigma eps_t,   x_1 ~ N(0, sigma2 / (1 - phi^2))
//
// under the improper prior 1 / (sigma beta) on (beta2, phi, sigma2) restricted to |phi| < 1.
// Chain states index x_1..x_n as x[0..n-1]. Conversion to the drift parameterization used
// by the filters happens once, when draws are exported as particles.

namespace regpf {

struct GibbsConfig {
  /// Initialization window: the chain targets the posterior given y_1..y_n.
  std::size_t n = 100;
  std::size_t burn_in = 2000;
  std::size_t thin = 1;
  /// Total sweeps; 0 means burn_in + thin * N for the requested N.
  std::size_t iterations = 0;

  std::size_t total_iterations(std::size_t particles) const;
  /// Throws DomainError when n < 2, burn_in >= iterations, thin == 0, or too few retained draws.
  void validate(std::size_t particles) const;
};

/// Uniform-weight particles at time n, in the filter's (drift, transformed) parameterization.
struct InitSample {
  std::size_t n = 0;
  std::vector<double> x_n;
  std::vector<SVParamsTransformed> theta;

  // Provenance, persisted in init.meta.json.
  std::vector<std::uint64_t> seeds;
  std::size_t iterations = 0;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  double phi_acceptance = 0.0;
  double x_acceptance = 0.0;

  std::size_t size() const { return x_n.size(); }
  ParticleCloud to_cloud() const;
};

/// Gibbs chain state on the centred model.
struct CenteredState {
  double beta2 = 1.0;
  double phi = 0.5;
  double sigma2 = 0.1;
  std::vector<double> x;
};

/// What to do when an inverse-gamma scale falls below 1e-12.
enum class ScaleFloor { raise, clamp };

inline constexpr double kScaleFloor = 1e-12;

/// Inverse-gamma draw with density proportional to z^{-shape-1} exp(-scale / z).
double sample_inverse_gamma(double shape, double scale, Rng& rng, ScaleFloor floor = ScaleFloor::raise);

/// beta2 | ... ~ IG(shape (n-1)/2, scale sum_t y_t^2 exp(-x_t) / 2).
double sample_beta2(std::span<const double> y, std::span<const double> x, Rng& rng);

/// sigma2 | ... ~ IG(shape (n-1)/2, scale [sum_{t>=2} (x_t - phi x_{t-1})^2 + x_1^2 (1 - phi^2)] / 2).
double sample_sigma2(std::span<const double> x, double phi, Rng& rng, ScaleFloor floor = ScaleFloor::raise);

/// Unnormalized log pi(phi | x, sigma2); -inf outside (-1, 1).
double log_phi_conditional(std::span<const double> x, double sigma2, double phi);

/// Untruncated Gaussian whose truncation to (-1, 1) is the phi proposal; `variance` is
/// +inf when the quadratic carries no information (n == 2).
GaussianProposal phi_proposal(std::span<const double> x, double sigma2);

/// log MH acceptance ratio for moving phi from `current` to `proposed` under the independent
/// truncated-Gaussian proposal. Clamp with min(0, .) to obtain a log-probability.
double phi_log_acceptance(std::span<const double> x, double sigma2, double current, double proposed);

/// One MH step for phi; returns the new value (current on rejection).
double sample_phi_mh(std::span<const double> x, double sigma2, double phi_current, Rng& rng);

/// Unnormalized log pi(x_t = value | x_{-t}, y_t, beta2, phi, sigma2), 1 <= t <= n.
double log_x_conditional(std::size_t t, std::span<const double> x, double value, double y_t, double beta2,
                         double phi, double sigma2);

/// Gaussian proposal for x_t: the two-sided AR prior (one-sided at t = 1 and t = n) combined
/// with a second-order expansion of the measurement term at the prior mean.
GaussianProposal x_proposal(std::size_t t, std::span<const double> x, double y_t, double beta2, double phi,
                            double sigma2);

double x_log_acceptance(std::size_t t, std::span<const double> x, double y_t, double beta2, double phi,
                        double sigma2, double current, double proposed);

/// One MH step for x_t; returns the new value (x[t-1] on rejection).
double sample_x_mh(std::size_t t, std::span<const double> x, double y_t, double beta2, double phi, double sigma2,
                   Rng& rng);

/// Log joint density of the centred model (prior included) up to a constant.
double log_joint_centered(std::span<const double> y, const CenteredState& state);

/// Data-driven starting point: centred log(y^2) for x and matching beta2.
CenteredState initial_state(std::span<const double> y);

struct SweepAcceptance {
  bool phi = false;
  std::size_t x = 0;
};

/// One full sweep beta2 | sigma2 | phi | x_1..x_n.
SweepAcceptance gibbs_sweep(std::span<const double> y, CenteredState& state, Rng& rng);

/// Exact map from the centred model to the drift model: alpha = (1 - phi) log beta2.
SVParams to_drift_params(double beta2, double phi, double sigma2);

/// Runs one chain on y_1..y_n and exports N retained draws as uniform-weight particles.
/// `y` must hold at least cfg.n observations; only the first cfg.n are used.
InitSample run_gibbs(std::span<const double> y, const GibbsConfig& cfg, std::size_t particles, Rng& rng);

/// Convenience overload seeding a fresh stream; records the seed in the sample.
InitSample run_gibbs(std::span<const double> y, const GibbsConfig& cfg, std::size_t particles, std::uint64_t seed);

/// Independent chains (one per seed) pooled round-robin into one sample.
InitSample run_gibbs_chains(std::span<const double> y, const GibbsConfig& cfg, std::size_t particles,
                            std::span<const std::uint64_t> seeds);

}  // namespace regpf
