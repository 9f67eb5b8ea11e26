#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regpf/mcmc_init.hpp"
#include "regpf/metrics.hpp"
#include "regpf/particle_core.hpp"
#include "regpf/random.hpp"
#include "regpf/sv_model.hpp"

namespace regpf {

enum class Algorithm { sis, sir, apf };
enum class StateProposal { transition, shephard_pitt };
enum class ResampleRule { never, always, ess_threshold };
/// Parameters used for the APF first-stage likelihood: each particle's own (current) values,
/// or their kernel-shrunk location a theta + (1 - a) mean.
enum class ApfSelection { current, shrunk };

/// The seven named filter configurations.
enum class Variant { sis, sis_p, sir, sir_p, sir_r, sir_r_p, apf };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);
const std::array<Variant, 7>& all_variants();

struct FilterConfig {
  Algorithm algo = Algorithm::sir;
  StateProposal state_proposal = StateProposal::transition;
  ResampleRule resample_rule = ResampleRule::always;
  double kappa_frac = 0.9;
  std::size_t n_particles = 2000;
  KernelConfig kernel;
  ApfSelection apf_selection = ApfSelection::current;
  /// A trace records the first step whose ESS drops below collapse_frac * N.
  double collapse_frac = 0.01;

  void validate() const;
  /// Name of the matching variant, or "custom".
  std::string label() const;

  static FilterConfig for_variant(Variant v, std::size_t n_particles, const KernelConfig& kernel = {});
};

/// Standard normals consumed by one particle in one propagation step.
struct ParticleNoise {
  std::array<double, 3> kernel{};
  double state = 0.0;
};

std::vector<ParticleNoise> draw_noise(std::size_t n, Rng& rng);

/// -(y^2 exp(-x_new) + x_new) / 2: the transition-proposal weight increment without constants.
double transition_log_increment(double y, double x_new);

/// -(y^2 (exp(-x_new) - exp(-mu)) + x_new - mu) / 2: the APF second-stage log-weight.
double apf_log_weight(double y, double x_new, double mu);

/// Log importance-weight increment for a draw x_new from `proposal` given x_prev under p.
/// With the transition proposal the transition and proposal densities cancel and only the
/// measurement term remains; otherwise likelihood * transition / proposal is applied.
double log_weight_increment(double y, double x_new, double x_prev, const SVParams& p, StateProposal proposal);

/// Kernel move plus state proposal plus weight update, driven by pre-drawn noise (one entry per
/// particle). Permuting the cloud and the noise identically permutes the output.
ParticleCloud propagate(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg,
                        const LiuWestKernel& kernel, std::span<const ParticleNoise> noise);

/// Kernel built from the weighted mean and covariance of the cloud's parameters.
LiuWestKernel make_kernel(const ParticleCloud& cloud, const KernelConfig& config);

/// Regularized SIS step (no resampling).
ParticleCloud sis_step(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng);

struct FilteredEstimate {
  double x_mean = 0.0;
  SVParams params;
};

/// Weighted means; parameters are mapped to natural space particle by particle before averaging.
FilteredEstimate filtered_estimate(const ParticleCloud& cloud);
FilteredEstimate filtered_estimate(const ParticleCloud& cloud, std::span<const double> weights);

struct StepResult {
  /// Cloud handed to the next step (resampled if `resampled`).
  ParticleCloud cloud;
  /// ESS of the importance weights, before any resampling.
  double ess = 0.0;
  bool resampled = false;
  /// Posterior means from the importance-weighted cloud.
  FilteredEstimate estimate;
};

/// Regularized SIR step: SIS step, then multinomial resampling when the rule fires.
StepResult sir_step(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng);

/// APF first stage: ancestor indices drawn with probabilities w_k p(y_next | mu_k).
std::vector<std::size_t> apf_select(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng);

/// Regularized APF step. Output weights are the second-stage ratios only.
ParticleCloud apf_step(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng);

/// Dispatches on cfg.algo.
StepResult filter_step(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng);

struct TraceEntry {
  std::size_t t = 0;
  double x_mean = 0.0;
  double alpha_mean = 0.0;
  double phi_mean = 0.0;
  double sigma2_mean = 0.0;
  double ess = 0.0;
  double rmse_cum = 0.0;
  bool resampled = false;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct RunTrace {
  std::string algo;
  std::size_t n_particles = 0;
  std::size_t start_index = 0;
  std::vector<TraceEntry> entries;
  ParticleCloud final_cloud;
  /// A step threw (all weights vanished or a numerical failure); entries stop there.
  bool aborted = false;
  std::string abort_reason;
  /// First t with ESS < collapse_frac * N.
  std::optional<std::size_t> collapse_step;

  std::vector<AugmentedPoint> estimates() const;
};

/// Assimilates y_{n+1..T} starting from `init` at time n = start_index (n >= 2).
RunTrace run_filter(const Dataset& data, const ParticleCloud& init, const FilterConfig& cfg,
                    std::size_t start_index, Rng& rng);

inline RunTrace run_filter(const Dataset& data, const InitSample& init, const FilterConfig& cfg, Rng& rng) {
  return run_filter(data, init.to_cloud(), cfg, init.n, rng);
}

/// Truth points (x_true[t], true parameters) aligned with a trace's entries.
std::vector<AugmentedPoint> truth_points(const Dataset& data, const RunTrace& trace);

}  // namespace regpf
