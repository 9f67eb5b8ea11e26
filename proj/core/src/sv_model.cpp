#include "regpf/sv_model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "regpf/errors.hpp"

namespace regpf {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

void validate(const SVParams& p) {
  if (!std::isfinite(p.alpha) || !std::isfinite(p.phi) || !std::isfinite(p.sigma2)) {
    throw DomainError("SV parameters must be finite");
  }
  if (!(p.sigma2 > 0.0)) {
    throw DomainError("sigma2 must be positive, got " + std::to_string(p.sigma2));
  }
  if (!(std::abs(p.phi) < 1.0)) {
    throw DomainError("phi must lie in (-1, 1), got " + std::to_string(p.phi));
  }
}

SVParamsTransformed to_transformed(const SVParams& p) {
  validate(p);
  // log1p keeps psi accurate for phi near zero.
  return {p.alpha, std::log1p(p.phi) - std::log1p(-p.phi), std::log(p.sigma2)};
}

SVParams from_transformed(const SVParamsTransformed& t) {
  if (!std::isfinite(t.alpha) || !std::isfinite(t.psi) || !std::isfinite(t.lambda)) {
    throw DomainError("transformed SV parameters must be finite");
  }
  // (e^psi - 1) / (e^psi + 1) = tanh(psi / 2), which stays strictly inside (-1, 1)
  // for |psi| up to ~36; clamp beyond that so the invariant survives rounding.
  double phi = std::tanh(0.5 * t.psi);
  constexpr double kEdge = 1.0 - 1e-16;
  if (phi >= 1.0) phi = kEdge;
  if (phi <= -1.0) phi = -kEdge;
  double sigma2 = std::exp(t.lambda);
  if (sigma2 <= 0.0) sigma2 = std::numeric_limits<double>::min();
  if (!std::isfinite(sigma2)) sigma2 = std::numeric_limits<double>::max();
  return {t.alpha, phi, sigma2};
}

std::string_view to_string(DatasetLabel label) {
  switch (label) {
    case DatasetLabel::daily:
      return "daily";
    case DatasetLabel::weekly:
      return "weekly";
    case DatasetLabel::custom:
      return "custom";
  }
  return "custom";
}

DatasetLabel parse_dataset_label(std::string_view text) {
  if (text == "daily") return DatasetLabel::daily;
  if (text == "weekly") return DatasetLabel::weekly;
  if (text == "custom") return DatasetLabel::custom;
  throw DomainError("unknown dataset label '" + std::string(text) + "'");
}

SVParams daily_params() { return {0.0, 0.99, 0.01}; }
SVParams weekly_params() { return {0.0, 0.9, 0.1}; }

std::size_t default_horizon(DatasetLabel label) {
  return label == DatasetLabel::weekly ? 500 : 1500;
}

void Dataset::validate() const {
  if (horizon == 0) throw DomainError("dataset horizon must be positive");
  if (y.size() != horizon || x_true.size() != horizon + 1) {
    throw DomainError("dataset lengths inconsistent with horizon " + std::to_string(horizon));
  }
  regpf::validate(params_true);
}

Dataset simulate(const SVParams& p, std::size_t horizon, Rng& rng) {
  validate(p);
  if (horizon == 0) throw DomainError("horizon must be at least 1");

  Dataset d;
  d.horizon = horizon;
  d.params_true = p;
  d.y.resize(horizon);
  d.x_true.resize(horizon + 1);

  std::normal_distribution<double> normal;
  const double sigma = std::sqrt(p.sigma2);
  d.x_true[0] = std::sqrt(p.sigma2 / (1.0 - p.phi * p.phi)) * normal(rng);
  for (std::size_t t = 1; t <= horizon; ++t) {
    d.x_true[t] = p.alpha + p.phi * d.x_true[t - 1] + sigma * normal(rng);
    d.y[t - 1] = std::exp(0.5 * d.x_true[t]) * normal(rng);
  }
  return d;
}

Dataset simulate(const SVParams& p, std::size_t horizon, std::uint64_t seed, DatasetLabel label) {
  Rng rng(seed);
  Dataset d = simulate(p, horizon, rng);
  d.seed = seed;
  d.label = label;
  return d;
}

double log_normal_density(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance) + r * r / variance);
}

double log_measurement_density(double y, double x) {
  return -0.5 * (kLog2Pi + x + y * y * std::exp(-x));
}

double transition_mean(double x_prev, const SVParams& p) { return p.alpha + p.phi * x_prev; }

double log_transition_density(double x_next, double x_prev, const SVParams& p) {
  return log_normal_density(x_next, transition_mean(x_prev, p), p.sigma2);
}

GaussianProposal taylor_proposal(double prior_mean, double prior_variance, double y2) {
  const double scaled = y2 * std::exp(-prior_mean);
  const double grad = -0.5 + 0.5 * scaled;
  const double curvature = -0.5 * scaled;
  const double precision = 1.0 / prior_variance - curvature;
  return {prior_mean + grad / precision, 1.0 / precision};
}

GaussianProposal shephard_pitt_proposal(double x_prev, const SVParams& p, double y_next) {
  return taylor_proposal(transition_mean(x_prev, p), p.sigma2, y_next * y_next);
}

}  // namespace regpf
