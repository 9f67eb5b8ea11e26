#include "regpf/mcmc_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "regpf/errors.hpp"

namespace regpf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// E[log chi^2_1]
constexpr double kLogChiSquareMean = -1.2703628454614782;

void require_window(std::size_t n) {
  if (n < 2) throw DomainError("Gibbs initialization needs n >= 2 observations, got " + std::to_string(n));
}

double square(double v) { return v * v; }

double sigma2_scale(std::span<const double> x, double phi) {
  double ss = square(x[0]) * (1.0 - phi * phi);
  for (std::size_t t = 1; t < x.size(); ++t) ss += square(x[t] - phi * x[t - 1]);
  return 0.5 * ss;
}

// Probability mass of N(mean, variance) on (-1, 1), used to decide whether the
// truncated Gaussian can be sampled by inversion.
struct TruncatedNormal {
  double mean;
  double sd;
  double lower_tail;  // P(Z < a) or P(Z > a) depending on side
  double upper_tail;
  int side;  // -1: both bounds below the mean, +1: both above, 0: straddles
  double mass;
};

TruncatedNormal truncate_unit_interval(const GaussianProposal& g) {
  const boost::math::normal_distribution<double> std_normal;
  TruncatedNormal tn{g.mean, std::sqrt(g.variance), 0.0, 0.0, 0, 0.0};
  const double a = (-1.0 - g.mean) / tn.sd;
  const double b = (1.0 - g.mean) / tn.sd;
  if (a > 0.0) {
    tn.side = 1;
    tn.lower_tail = boost::math::cdf(boost::math::complement(std_normal, a));
    tn.upper_tail = boost::math::cdf(boost::math::complement(std_normal, b));
    tn.mass = tn.lower_tail - tn.upper_tail;
  } else {
    tn.side = b < 0.0 ? -1 : 0;
    tn.lower_tail = boost::math::cdf(std_normal, a);
    tn.upper_tail = boost::math::cdf(std_normal, b);
    tn.mass = tn.upper_tail - tn.lower_tail;
  }
  return tn;
}

double draw_truncated(const TruncatedNormal& tn, Rng& rng) {
  const boost::math::normal_distribution<double> std_normal;
  std::uniform_real_distribution<double> u01;
  double z;
  if (tn.side == 1) {
    const double u = tn.upper_tail + u01(rng) * tn.mass;
    z = boost::math::quantile(boost::math::complement(std_normal, u));
  } else {
    const double u = tn.lower_tail + u01(rng) * tn.mass;
    z = boost::math::quantile(std_normal, u);
  }
  constexpr double kEdge = 1.0 - 1e-15;
  return std::clamp(tn.mean + tn.sd * z, -kEdge, kEdge);
}

double x_log_ratio(std::size_t t, std::span<const double> x, double y_t, double beta2, double phi, double sigma2,
                   double current, double proposed, const GaussianProposal& q) {
  return log_x_conditional(t, x, proposed, y_t, beta2, phi, sigma2) -
         log_x_conditional(t, x, current, y_t, beta2, phi, sigma2) + log_normal_density(current, q.mean, q.variance) -
         log_normal_density(proposed, q.mean, q.variance);
}

bool usable(const TruncatedNormal& tn) { return std::isfinite(tn.sd) && tn.sd > 0.0 && tn.mass > 1e-300; }

double phi_log_ratio(std::span<const double> x, double sigma2, double current, double proposed,
                     const GaussianProposal& g, bool gaussian) {
  const double target = log_phi_conditional(x, sigma2, proposed) - log_phi_conditional(x, sigma2, current);
  if (!gaussian) return target;
  return target + log_normal_density(current, g.mean, g.variance) - log_normal_density(proposed, g.mean, g.variance);
}

}  // namespace

std::size_t GibbsConfig::total_iterations(std::size_t particles) const {
  return iterations != 0 ? iterations : burn_in + thin * particles;
}

void GibbsConfig::validate(std::size_t particles) const {
  require_window(n);
  if (thin == 0) throw DomainError("thin must be at least 1");
  const std::size_t total = total_iterations(particles);
  if (burn_in >= total) throw DomainError("burn_in must be smaller than iterations");
  if ((total - burn_in) / thin < particles) {
    throw DomainError("too few retained draws: (iterations - burn_in) / thin < N");
  }
}

ParticleCloud InitSample::to_cloud() const { return ParticleCloud::uniform(x_n, theta); }

double sample_inverse_gamma(double shape, double scale, Rng& rng, ScaleFloor floor) {
  if (!(shape > 0.0)) throw DomainError("inverse-gamma shape must be positive");
  if (!(scale >= kScaleFloor)) {
    if (floor == ScaleFloor::raise || std::isnan(scale)) {
      throw NumericalError("inverse-gamma scale " + std::to_string(scale) + " below floor");
    }
    scale = kScaleFloor;
  }
  std::gamma_distribution<double> gamma(shape, 1.0);
  double g = gamma(rng);
  while (!(g > 0.0)) g = gamma(rng);
  return scale / g;
}

double sample_beta2(std::span<const double> y, std::span<const double> x, Rng& rng) {
  require_window(y.size());
  if (x.size() != y.size()) throw DomainError("sample_beta2: y and x differ in length");
  double scale = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) scale += y[t] * y[t] * std::exp(-x[t]);
  scale *= 0.5;
  return sample_inverse_gamma(0.5 * static_cast<double>(y.size() - 1), scale, rng);
}

double sample_sigma2(std::span<const double> x, double phi, Rng& rng, ScaleFloor floor) {
  require_window(x.size());
  if (!(std::abs(phi) < 1.0)) throw DomainError("sample_sigma2: |phi| must be < 1");
  return sample_inverse_gamma(0.5 * static_cast<double>(x.size() - 1), sigma2_scale(x, phi), rng, floor);
}

double log_phi_conditional(std::span<const double> x, double sigma2, double phi) {
  if (!(std::abs(phi) < 1.0)) return kNegInf;
  return 0.5 * std::log1p(-phi * phi) - sigma2_scale(x, phi) / sigma2;
}

GaussianProposal phi_proposal(std::span<const double> x, double sigma2) {
  // Exponent as a quadratic in phi: -(A phi^2 - 2 B phi) / (2 sigma2) with
  // A = sum_{t=2}^{n-1} x_t^2 and B = sum_{t=2}^{n} x_t x_{t-1}.
  double quad = 0.0;
  double cross = 0.0;
  for (std::size_t t = 1; t + 1 < x.size(); ++t) quad += x[t] * x[t];
  for (std::size_t t = 1; t < x.size(); ++t) cross += x[t] * x[t - 1];
  if (!(quad > 0.0)) return {0.0, std::numeric_limits<double>::infinity()};
  return {cross / quad, sigma2 / quad};
}

double phi_log_acceptance(std::span<const double> x, double sigma2, double current, double proposed) {
  const auto g = phi_proposal(x, sigma2);
  return phi_log_ratio(x, sigma2, current, proposed, g, std::isfinite(g.variance));
}

double sample_phi_mh(std::span<const double> x, double sigma2, double phi_current, Rng& rng) {
  require_window(x.size());
  if (!(std::abs(phi_current) < 1.0)) throw DomainError("sample_phi_mh: |phi| must be < 1");

  const auto g = phi_proposal(x, sigma2);
  bool gaussian = std::isfinite(g.variance);
  double proposed = phi_current;
  if (gaussian) {
    const auto tn = truncate_unit_interval(g);
    gaussian = usable(tn);
    if (gaussian) proposed = draw_truncated(tn, rng);
  }
  if (!gaussian) {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    proposed = uniform(rng);
  }

  const double log_ratio = phi_log_ratio(x, sigma2, phi_current, proposed, g, gaussian);
  std::uniform_real_distribution<double> u01;
  return std::log(u01(rng)) < log_ratio ? proposed : phi_current;
}

double log_x_conditional(std::size_t t, std::span<const double> x, double value, double y_t, double beta2,
                         double phi, double sigma2) {
  const std::size_t n = x.size();
  if (t < 1 || t > n) throw DomainError("log_x_conditional: t out of range");
  double prior;
  if (t == 1) {
    prior = -value * value * (1.0 - phi * phi) / (2.0 * sigma2);
  } else {
    prior = -square(value - phi * x[t - 2]) / (2.0 * sigma2);
  }
  if (t < n) prior -= square(x[t] - phi * value) / (2.0 * sigma2);
  return prior - 0.5 * value - 0.5 * y_t * y_t * std::exp(-value) / beta2;
}

GaussianProposal x_proposal(std::size_t t, std::span<const double> x, double y_t, double beta2, double phi,
                            double sigma2) {
  const std::size_t n = x.size();
  if (t < 1 || t > n) throw DomainError("x_proposal: t out of range");
  double precision;
  double weighted_mean;  // precision * prior mean
  if (t == 1) {
    precision = (1.0 - phi * phi) / sigma2;
    weighted_mean = 0.0;
  } else {
    precision = 1.0 / sigma2;
    weighted_mean = phi * x[t - 2] / sigma2;
  }
  if (t < n) {
    precision += phi * phi / sigma2;
    weighted_mean += phi * x[t] / sigma2;
  }
  return taylor_proposal(weighted_mean / precision, 1.0 / precision, y_t * y_t / beta2);
}

double x_log_acceptance(std::size_t t, std::span<const double> x, double y_t, double beta2, double phi,
                        double sigma2, double current, double proposed) {
  const auto q = x_proposal(t, x, y_t, beta2, phi, sigma2);
  return x_log_ratio(t, x, y_t, beta2, phi, sigma2, current, proposed, q);
}

double sample_x_mh(std::size_t t, std::span<const double> x, double y_t, double beta2, double phi, double sigma2,
                   Rng& rng) {
  const auto q = x_proposal(t, x, y_t, beta2, phi, sigma2);
  std::normal_distribution<double> normal;
  const double current = x[t - 1];
  const double proposed = q.mean + std::sqrt(q.variance) * normal(rng);
  const double log_ratio = x_log_ratio(t, x, y_t, beta2, phi, sigma2, current, proposed, q);
  std::uniform_real_distribution<double> u01;
  return std::log(u01(rng)) < log_ratio ? proposed : current;
}

double log_joint_centered(std::span<const double> y, const CenteredState& s) {
  if (!(std::abs(s.phi) < 1.0) || !(s.sigma2 > 0.0) || !(s.beta2 > 0.0)) return kNegInf;
  if (s.x.size() != y.size()) throw DomainError("log_joint_centered: y and x differ in length");
  const double log_sigma2 = std::log(s.sigma2);
  const double log_beta2 = std::log(s.beta2);
  double lp = -0.5 * log_sigma2 - 0.5 * log_beta2;
  for (std::size_t t = 0; t < y.size(); ++t) {
    lp += -0.5 * log_beta2 - 0.5 * s.x[t] - 0.5 * y[t] * y[t] * std::exp(-s.x[t]) / s.beta2;
  }
  lp += 0.5 * std::log1p(-s.phi * s.phi) - 0.5 * static_cast<double>(y.size()) * log_sigma2;
  lp -= sigma2_scale(s.x, s.phi) / s.sigma2;
  return lp;
}

CenteredState initial_state(std::span<const double> y) {
  require_window(y.size());
  double mean_y2 = 0.0;
  for (double v : y) mean_y2 += v * v;
  mean_y2 /= static_cast<double>(y.size());
  const double offset = 0.01 * mean_y2 + 1e-300;

  CenteredState s;
  s.x.resize(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) s.x[t] = std::log(y[t] * y[t] + offset);
  const double level = std::accumulate(s.x.begin(), s.x.end(), 0.0) / static_cast<double>(y.size());
  for (double& v : s.x) v -= level;
  s.beta2 = std::exp(level - kLogChiSquareMean);
  return s;
}

SweepAcceptance gibbs_sweep(std::span<const double> y, CenteredState& s, Rng& rng) {
  SweepAcceptance acc;
  s.beta2 = sample_beta2(y, s.x, rng);
  s.sigma2 = sample_sigma2(s.x, s.phi, rng);
  const double phi = sample_phi_mh(s.x, s.sigma2, s.phi, rng);
  acc.phi = phi != s.phi;
  s.phi = phi;
  for (std::size_t t = 1; t <= s.x.size(); ++t) {
    const double v = sample_x_mh(t, s.x, y[t - 1], s.beta2, s.phi, s.sigma2, rng);
    if (v != s.x[t - 1]) ++acc.x;
    s.x[t - 1] = v;
  }
  return acc;
}

SVParams to_drift_params(double beta2, double phi, double sigma2) {
  return {(1.0 - phi) * std::log(beta2), phi, sigma2};
}

InitSample run_gibbs(std::span<const double> y, const GibbsConfig& cfg, std::size_t particles, Rng& rng) {
  cfg.validate(particles);
  if (y.size() < cfg.n) throw DomainError("fewer observations than the initialization window");
  const auto window = y.first(cfg.n);

  InitSample out;
  out.n = cfg.n;
  out.iterations = cfg.total_iterations(particles);
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  out.x_n.reserve(particles);
  out.theta.reserve(particles);

  CenteredState state = initial_state(window);
  std::size_t phi_accepted = 0;
  std::size_t x_accepted = 0;
  for (std::size_t it = 1; it <= out.iterations && out.x_n.size() < particles; ++it) {
    const auto acc = gibbs_sweep(window, state, rng);
    phi_accepted += acc.phi ? 1 : 0;
    x_accepted += acc.x;
    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
      const double log_beta2 = std::log(state.beta2);
      out.x_n.push_back(state.x.back() + log_beta2);
      out.theta.push_back(to_transformed(to_drift_params(state.beta2, state.phi, state.sigma2)));
    }
  }
  const double sweeps = static_cast<double>(out.iterations);
  out.phi_acceptance = static_cast<double>(phi_accepted) / sweeps;
  out.x_acceptance = static_cast<double>(x_accepted) / (sweeps * static_cast<double>(cfg.n));
  return out;
}

InitSample run_gibbs(std::span<const double> y, const GibbsConfig& cfg, std::size_t particles, std::uint64_t seed) {
  Rng rng(seed);
  InitSample out = run_gibbs(y, cfg, particles, rng);
  out.seeds = {seed};
  return out;
}

InitSample run_gibbs_chains(std::span<const double> y, const GibbsConfig& cfg, std::size_t particles,
                            std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw DomainError("run_gibbs_chains needs at least one seed");
  const std::size_t chains = seeds.size();
  const std::size_t per_chain = (particles + chains - 1) / chains;

  GibbsConfig chain_cfg = cfg;
  if (chain_cfg.iterations == 0) chain_cfg.iterations = cfg.burn_in + cfg.thin * per_chain;

  std::vector<InitSample> samples;
  samples.reserve(chains);
  for (auto seed : seeds) samples.push_back(run_gibbs(y, chain_cfg, per_chain, seed));

  InitSample out;
  out.n = cfg.n;
  out.iterations = chain_cfg.iterations;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  out.seeds.assign(seeds.begin(), seeds.end());
  for (std::size_t i = 0; i < particles; ++i) {
    const auto& s = samples[i % chains];
    out.x_n.push_back(s.x_n[i / chains]);
    out.theta.push_back(s.theta[i / chains]);
  }
  for (const auto& s : samples) {
    out.phi_acceptance += s.phi_acceptance / static_cast<double>(chains);
    out.x_acceptance += s.x_acceptance / static_cast<double>(chains);
  }
  return out;
}

}  // namespace regpf
