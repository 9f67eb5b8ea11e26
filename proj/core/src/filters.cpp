#include "regpf/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "regpf/errors.hpp"

namespace regpf {

namespace {

constexpr std::array<Variant, 7> kVariants = {Variant::sis,   Variant::sis_p,   Variant::sir, Variant::sir_p,
                                              Variant::sir_r, Variant::sir_r_p, Variant::apf};

void shift_to_max(std::vector<double>& log_weights) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (!std::isnan(lw)) max_lw = std::max(max_lw, lw);
  }
  if (!(max_lw > -std::numeric_limits<double>::infinity())) {
    throw DegeneracyError("all updated log-weights are -inf");
  }
  if (std::isinf(max_lw)) throw NumericalError("an updated log-weight is +inf");
  for (double& lw : log_weights) lw -= max_lw;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::sis:
      return "SIS";
    case Variant::sis_p:
      return "SIS-p";
    case Variant::sir:
      return "SIR";
    case Variant::sir_p:
      return "SIR-p";
    case Variant::sir_r:
      return "SIR-r";
    case Variant::sir_r_p:
      return "SIR-r-p";
    case Variant::apf:
      return "APF";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : kVariants) {
    if (to_string(v) == text) return v;
  }
  throw DomainError("unknown filter variant '" + std::string(text) + "'");
}

const std::array<Variant, 7>& all_variants() { return kVariants; }

void FilterConfig::validate() const {
  kernel.validate();
  if (n_particles < 1) throw DomainError("n_particles must be positive");
  if (!(kappa_frac > 0.0 && kappa_frac <= 1.0)) throw DomainError("kappa_frac must lie in (0, 1]");
  if (!(collapse_frac >= 0.0 && collapse_frac <= 1.0)) throw DomainError("collapse_frac must lie in [0, 1]");
  if (algo == Algorithm::sis && resample_rule != ResampleRule::never) {
    throw DomainError("SIS filters never resample");
  }
  if (algo == Algorithm::apf && state_proposal != StateProposal::transition) {
    throw DomainError("the APF propagates states with the transition density");
  }
}

std::string FilterConfig::label() const {
  for (Variant v : kVariants) {
    const auto ref = for_variant(v, n_particles, kernel);
    if (ref.algo == algo && ref.state_proposal == state_proposal && ref.resample_rule == resample_rule) {
      if (resample_rule == ResampleRule::ess_threshold && kappa_frac != 0.9) break;
      return std::string(to_string(v));
    }
  }
  return "custom";
}

FilterConfig FilterConfig::for_variant(Variant v, std::size_t n_particles, const KernelConfig& kernel) {
  FilterConfig cfg;
  cfg.n_particles = n_particles;
  cfg.kernel = kernel;
  switch (v) {
    case Variant::sis:
    case Variant::sis_p:
      cfg.algo = Algorithm::sis;
      cfg.resample_rule = ResampleRule::never;
      break;
    case Variant::sir:
    case Variant::sir_p:
      cfg.algo = Algorithm::sir;
      cfg.resample_rule = ResampleRule::always;
      break;
    case Variant::sir_r:
    case Variant::sir_r_p:
      cfg.algo = Algorithm::sir;
      cfg.resample_rule = ResampleRule::ess_threshold;
      break;
    case Variant::apf:
      cfg.algo = Algorithm::apf;
      cfg.resample_rule = ResampleRule::never;
      break;
  }
  const bool sp = v == Variant::sis_p || v == Variant::sir_p || v == Variant::sir_r_p;
  cfg.state_proposal = sp ? StateProposal::shephard_pitt : StateProposal::transition;
  return cfg;
}

std::vector<ParticleNoise> draw_noise(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal;
  std::vector<ParticleNoise> noise(n);
  for (auto& e : noise) {
    for (double& z : e.kernel) z = normal(rng);
    e.state = normal(rng);
  }
  return noise;
}

double transition_log_increment(double y, double x_new) { return -0.5 * (y * y * std::exp(-x_new) + x_new); }

double apf_log_weight(double y, double x_new, double mu) {
  return -0.5 * (y * y * (std::exp(-x_new) - std::exp(-mu)) + x_new - mu);
}

double log_weight_increment(double y, double x_new, double x_prev, const SVParams& p, StateProposal proposal) {
  if (proposal == StateProposal::transition) return transition_log_increment(y, x_new);
  const auto q = shephard_pitt_proposal(x_prev, p, y);
  return log_measurement_density(y, x_new) + log_transition_density(x_new, x_prev, p) -
         log_normal_density(x_new, q.mean, q.variance);
}

LiuWestKernel make_kernel(const ParticleCloud& cloud, const KernelConfig& config) {
  const auto w = normalize(cloud);
  return LiuWestKernel(weighted_mean_cov(cloud.params, w), config);
}

ParticleCloud propagate(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg,
                        const LiuWestKernel& kernel, std::span<const ParticleNoise> noise) {
  const std::size_t n = cloud.size();
  if (noise.size() != n) throw DomainError("propagate: one noise entry per particle required");

  ParticleCloud out;
  out.states.resize(n);
  out.params.resize(n);
  out.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SVParamsTransformed theta = as_params(kernel.move(as_vector(cloud.params[i]), noise[i].kernel));
    const SVParams p = from_transformed(theta);
    const double x_prev = cloud.states[i];
    double x_new;
    if (cfg.state_proposal == StateProposal::transition) {
      x_new = transition_mean(x_prev, p) + std::sqrt(p.sigma2) * noise[i].state;
    } else {
      const auto q = shephard_pitt_proposal(x_prev, p, y_next);
      x_new = q.mean + std::sqrt(q.variance) * noise[i].state;
    }
    out.params[i] = theta;
    out.states[i] = x_new;
    out.log_weights[i] = cloud.log_weights[i] + log_weight_increment(y_next, x_new, x_prev, p, cfg.state_proposal);
  }
  shift_to_max(out.log_weights);
  return out;
}

ParticleCloud sis_step(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng) {
  cloud.validate();
  const LiuWestKernel kernel = make_kernel(cloud, cfg.kernel);
  const auto noise = draw_noise(cloud.size(), rng);
  return propagate(cloud, y_next, cfg, kernel, noise);
}

FilteredEstimate filtered_estimate(const ParticleCloud& cloud) { return filtered_estimate(cloud, normalize(cloud)); }

FilteredEstimate filtered_estimate(const ParticleCloud& cloud, std::span<const double> weights) {
  FilteredEstimate est;
  est.params = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    const SVParams p = from_transformed(cloud.params[i]);
    est.x_mean += w * cloud.states[i];
    est.params.alpha += w * p.alpha;
    est.params.phi += w * p.phi;
    est.params.sigma2 += w * p.sigma2;
  }
  return est;
}

namespace {

StepResult finish_step(ParticleCloud weighted, const FilterConfig& cfg, Rng& rng) {
  StepResult r;
  const auto w = normalize(weighted);
  r.ess = ess(w);
  r.estimate = filtered_estimate(weighted, w);
  const double n = static_cast<double>(weighted.size());
  r.resampled = cfg.resample_rule == ResampleRule::always ||
                (cfg.resample_rule == ResampleRule::ess_threshold && r.ess < cfg.kappa_frac * n);
  if (r.resampled) {
    r.cloud = gather(weighted, multinomial_indices(w, weighted.size(), rng));
  } else {
    r.cloud = std::move(weighted);
  }
  return r;
}

}  // namespace

StepResult sir_step(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng) {
  return finish_step(sis_step(cloud, y_next, cfg, rng), cfg, rng);
}

namespace {

// First-stage predictive means mu_k and log selection weights log w_k + log p(y | mu_k).
void apf_first_stage(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, const LiuWestKernel& kernel,
                     std::vector<double>& mu, std::vector<double>& log_g) {
  const std::size_t n = cloud.size();
  mu.resize(n);
  log_g.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SVParams p = cfg.apf_selection == ApfSelection::current
                           ? from_transformed(cloud.params[i])
                           : from_transformed(as_params(kernel.shrunk_mean(as_vector(cloud.params[i]))));
    mu[i] = transition_mean(cloud.states[i], p);
    log_g[i] = cloud.log_weights[i] + log_measurement_density(y_next, mu[i]);
  }
}

}  // namespace

std::vector<std::size_t> apf_select(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng) {
  cloud.validate();
  const LiuWestKernel kernel = make_kernel(cloud, cfg.kernel);
  std::vector<double> mu, log_g;
  apf_first_stage(cloud, y_next, cfg, kernel, mu, log_g);
  return multinomial_indices(normalize(log_g), cloud.size(), rng);
}

ParticleCloud apf_step(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng) {
  cloud.validate();
  const std::size_t n = cloud.size();
  const LiuWestKernel kernel = make_kernel(cloud, cfg.kernel);
  std::vector<double> mu, log_g;
  apf_first_stage(cloud, y_next, cfg, kernel, mu, log_g);
  const auto ancestors = multinomial_indices(normalize(log_g), n, rng);
  const auto noise = draw_noise(n, rng);

  ParticleCloud out;
  out.states.resize(n);
  out.params.resize(n);
  out.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = ancestors[i];
    const SVParamsTransformed theta = as_params(kernel.move(as_vector(cloud.params[j]), noise[i].kernel));
    const SVParams p = from_transformed(theta);
    const double x_new = transition_mean(cloud.states[j], p) + std::sqrt(p.sigma2) * noise[i].state;
    out.params[i] = theta;
    out.states[i] = x_new;
    out.log_weights[i] = apf_log_weight(y_next, x_new, mu[j]);
  }
  shift_to_max(out.log_weights);
  return out;
}

StepResult filter_step(const ParticleCloud& cloud, double y_next, const FilterConfig& cfg, Rng& rng) {
  switch (cfg.algo) {
    case Algorithm::sis:
      return finish_step(sis_step(cloud, y_next, cfg, rng), cfg, rng);
    case Algorithm::sir:
      return sir_step(cloud, y_next, cfg, rng);
    case Algorithm::apf:
      return finish_step(apf_step(cloud, y_next, cfg, rng), cfg, rng);
  }
  throw DomainError("unknown algorithm");
}

std::vector<AugmentedPoint> RunTrace::estimates() const {
  std::vector<AugmentedPoint> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({e.x_mean, e.alpha_mean, e.phi_mean, e.sigma2_mean});
  return out;
}

std::vector<AugmentedPoint> truth_points(const Dataset& data, const RunTrace& trace) {
  std::vector<AugmentedPoint> out;
  out.reserve(trace.entries.size());
  const auto& p = data.params_true;
  for (const auto& e : trace.entries) out.push_back({data.x_true.at(e.t), p.alpha, p.phi, p.sigma2});
  return out;
}

RunTrace run_filter(const Dataset& data, const ParticleCloud& init, const FilterConfig& cfg, std::size_t start_index,
                    Rng& rng) {
  cfg.validate();
  data.validate();
  init.validate();
  if (start_index < 2) throw DomainError("filtering must start at n >= 2");
  if (start_index > data.horizon) throw DomainError("start index beyond the dataset horizon");
  if (init.size() != cfg.n_particles) {
    throw DomainError("initial cloud has " + std::to_string(init.size()) + " particles, config expects " +
                      std::to_string(cfg.n_particles));
  }

  RunTrace trace;
  trace.algo = cfg.label();
  trace.n_particles = cfg.n_particles;
  trace.start_index = start_index;
  trace.entries.reserve(data.horizon - start_index);

  const SVParams& truth = data.params_true;
  const double collapse_level = cfg.collapse_frac * static_cast<double>(cfg.n_particles);
  CumulativeRmse rmse;
  ParticleCloud cloud = init;
  for (std::size_t t = start_index; t < data.horizon; ++t) {
    StepResult step;
    try {
      step = filter_step(cloud, data.obs(t + 1), cfg, rng);
    } catch (const DegeneracyError& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      break;
    } catch (const NumericalError& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      break;
    }

    TraceEntry entry;
    entry.t = t + 1;
    entry.x_mean = step.estimate.x_mean;
    entry.alpha_mean = step.estimate.params.alpha;
    entry.phi_mean = step.estimate.params.phi;
    entry.sigma2_mean = step.estimate.params.sigma2;
    entry.ess = step.ess;
    entry.resampled = step.resampled;
    rmse.add({entry.x_mean, entry.alpha_mean, entry.phi_mean, entry.sigma2_mean},
             {data.x_true[t + 1], truth.alpha, truth.phi, truth.sigma2});
    entry.rmse_cum = rmse.value();
    trace.entries.push_back(entry);
    if (!trace.collapse_step && entry.ess < collapse_level) trace.collapse_step = entry.t;

    cloud = std::move(step.cloud);
  }
  trace.final_cloud = std::move(cloud);
  return trace;
}

}  // namespace regpf
