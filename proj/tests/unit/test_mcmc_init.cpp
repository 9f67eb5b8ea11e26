#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles/quadrature.hpp"
#include "oracles/stats.hpp"
#include "oracles/sv_joint.hpp"
#include "regpf/errors.hpp"
#include "regpf/mcmc_init.hpp"

namespace regpf {
namespace {

// Centred AR(1) path x_1..x_n started from its stationary law.
std::vector<double> ar_path(std::size_t n, double phi, double sigma2, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> x(n);
  x[0] = std::sqrt(sigma2 / (1.0 - phi * phi)) * z(rng);
  for (std::size_t t = 1; t < n; ++t) x[t] = phi * x[t - 1] + std::sqrt(sigma2) * z(rng);
  return x;
}

TEST(InverseGamma, MomentAndPositivity) {
  Rng rng(1);
  // n = 5 and sum y^2 e^{-x} = 8: shape 2, scale 4, mean 4.
  const std::vector<double> y{2.0, 2.0, 0.0, 0.0, 0.0}, x(5, 0.0);
  double sum = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    const double v = sample_beta2(y, x, rng);
    ASSERT_GT(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum / 1e6, 4.0, 0.04);
}

TEST(InverseGamma, KolmogorovSmirnov) {
  Rng rng(2);
  for (auto [shape, scale] : {std::pair{2.0, 4.0}, std::pair{0.5, 0.1}, std::pair{49.5, 12.0}}) {
    std::vector<double> draws(100000);
    for (double& d : draws) d = sample_inverse_gamma(shape, scale, rng);
    const double d = oracle::ks_statistic(draws, [&](double z) { return oracle::inverse_gamma_cdf(z, shape, scale); });
    EXPECT_LT(d, oracle::ks_critical_1pct(draws.size())) << shape << " " << scale;
  }
}

TEST(InverseGamma, SigmaConditionalMoment) {
  // x = 1 repeated 9 times, phi = 0.5: shape 4, scale (0.75 + 8 * 0.25) / 2, mean scale / 3.
  const std::vector<double> x(9, 1.0);
  Rng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 400000; ++i) sum += sample_sigma2(x, 0.5, rng);
  EXPECT_NEAR(sum / 4e5, 1.375 / 3.0, 0.01 * 1.375 / 3.0);
}

TEST(InverseGamma, ScaleFloor) {
  const std::vector<double> zero(4, 0.0);
  Rng rng(4);
  EXPECT_THROW(sample_sigma2(zero, 0.3, rng), NumericalError);
  const double v = sample_sigma2(zero, 0.3, rng, ScaleFloor::clamp);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1e-6);
}

TEST(PhiStep, ConditionalMatchesJoint) {
  const auto x = ar_path(20, 0.7, 0.3, 5);
  const std::vector<double> y(20, 0.4);
  for (double a : {-0.9, 0.0, 0.3}) {
    for (double b : {-0.5, 0.6, 0.95}) {
      const double lib = log_phi_conditional(x, 0.3, b) - log_phi_conditional(x, 0.3, a);
      const double ref = oracle::centered_log_joint(y, x, 1.3, b, 0.3) - oracle::centered_log_joint(y, x, 1.3, a, 0.3);
      EXPECT_NEAR(lib, ref, 1e-9);
    }
  }
  EXPECT_EQ(log_phi_conditional(x, 0.3, 1.0), -INFINITY);
}

TEST(PhiStep, SelfProposalAcceptsSurely) {
  const auto x = ar_path(50, 0.9, 0.1, 6);
  for (double phi : {-0.3, 0.5, 0.97}) EXPECT_EQ(phi_log_acceptance(x, 0.1, phi, phi), 0.0);
}

TEST(PhiStep, ChainMatchesGridQuadrature) {
  const auto x = ar_path(2000, 0.9, 0.1, 7);
  const double sigma2 = 0.1;
  auto log_target = [&](double phi) {
    double q = x[0] * x[0] * (1.0 - phi * phi);
    for (std::size_t t = 1; t < x.size(); ++t) q += (x[t] - phi * x[t - 1]) * (x[t] - phi * x[t - 1]);
    return 0.5 * std::log(1.0 - phi * phi) - q / (2.0 * sigma2);
  };
  const double ref = oracle::grid_mean(log_target, -1.0, 1.0, 10000);
  Rng rng(8);
  double phi = 0.0, sum = 0.0;
  const int steps = 20000;
  for (int i = 0; i < steps; ++i) {
    phi = sample_phi_mh(x, sigma2, phi, rng);
    ASSERT_LT(std::abs(phi), 1.0);
    sum += phi;
  }
  EXPECT_NEAR(sum / steps, ref, 0.05);
}

TEST(PhiStep, ShortWindowFallsBackToUniformProposal) {
  const std::vector<double> x{0.3, -0.2};
  EXPECT_FALSE(std::isfinite(phi_proposal(x, 0.5).variance));
  Rng rng(9);
  double phi = 0.0;
  for (int i = 0; i < 1000; ++i) {
    phi = sample_phi_mh(x, 0.5, phi, rng);
    ASSERT_LT(std::abs(phi), 1.0);
  }
}

TEST(XStep, ConditionalMatchesJointRatio) {
  const std::vector<double> y{0.5, -1.2, 0.8, 0.1, 2.0};
  auto x = ar_path(5, 0.8, 0.2, 10);
  const double beta2 = 0.7, phi = 0.8, sigma2 = 0.2;
  for (std::size_t t = 1; t <= 5; ++t) {
    for (double v : {-1.0, 0.4}) {
      auto xa = x, xb = x;
      xa[t - 1] = v;
      xb[t - 1] = v + 0.9;
      const double lib = log_x_conditional(t, x, v + 0.9, y[t - 1], beta2, phi, sigma2) -
                         log_x_conditional(t, x, v, y[t - 1], beta2, phi, sigma2);
      const double ref = oracle::centered_log_joint(y, xb, beta2, phi, sigma2) -
                         oracle::centered_log_joint(y, xa, beta2, phi, sigma2);
      EXPECT_NEAR(lib, ref, 1e-10) << "t = " << t;
    }
  }
}

TEST(XStep, AcceptanceIsProbability) {
  const std::vector<double> y{0.5, -1.2, 0.8};
  const auto x = ar_path(3, 0.5, 0.4, 11);
  Rng rng(12);
  std::normal_distribution<double> z;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t t = 1 + static_cast<std::size_t>(i % 3);
    const double lr = x_log_acceptance(t, x, y[t - 1], 1.1, 0.5, 0.4, x[t - 1], x[t - 1] + z(rng));
    ASSERT_FALSE(std::isnan(lr));
    const double p = std::exp(std::min(0.0, lr));
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_EQ(x_log_acceptance(t, x, y[t - 1], 1.1, 0.5, 0.4, x[t - 1], x[t - 1]), 0.0);
  }
}

double x_chain_mean(std::size_t t, std::vector<double> x, double y_t, double beta2, double phi, double sigma2,
                    std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  const int steps = 200000;
  for (int i = 0; i < steps; ++i) {
    x[t - 1] = sample_x_mh(t, x, y_t, beta2, phi, sigma2, rng);
    sum += x[t - 1];
  }
  return sum / steps;
}

double x_grid_mean(std::size_t t, const std::vector<double>& x, double y_t, double beta2, double phi, double sigma2) {
  const std::size_t n = x.size();
  auto log_target = [&](double v) {
    double lp = -0.5 * v - 0.5 * y_t * y_t * std::exp(-v) / beta2;
    lp -= t == 1 ? v * v * (1.0 - phi * phi) / (2.0 * sigma2) : (v - phi * x[t - 2]) * (v - phi * x[t - 2]) / (2.0 * sigma2);
    if (t < n) lp -= (x[t] - phi * v) * (x[t] - phi * v) / (2.0 * sigma2);
    return lp;
  };
  return oracle::grid_mean(log_target, -15.0, 15.0, 20000);
}

TEST(XStep, ChainMatchesGridQuadrature) {
  const std::vector<double> x{0.4, -0.3, 0.9, 0.2, -0.6};
  // y_t = 0 and beta2 = 1, then a genuinely non-Gaussian target.
  for (auto [y_t, beta2] : {std::pair{0.0, 1.0}, std::pair{1.5, 0.7}, std::pair{0.05, 2.0}}) {
    for (std::size_t t : {1u, 3u, 5u}) {
      const double ref = x_grid_mean(t, x, y_t, beta2, 0.8, 0.3);
      EXPECT_NEAR(x_chain_mean(t, x, y_t, beta2, 0.8, 0.3, 13 + t), ref, 0.02) << "t = " << t << " y = " << y_t;
    }
  }
}

TEST(Joint, MatchesIndependentTranscription) {
  const std::vector<double> y{0.5, -1.2, 0.8, 0.1};
  CenteredState a{1.2, 0.6, 0.3, {0.1, -0.4, 0.2, 0.5}};
  CenteredState b{0.8, -0.2, 1.1, {1.0, 0.3, -0.7, 0.0}};
  const double lib = log_joint_centered(y, a) - log_joint_centered(y, b);
  const double ref = oracle::centered_log_joint(y, a.x, a.beta2, a.phi, a.sigma2) -
                     oracle::centered_log_joint(y, b.x, b.beta2, b.phi, b.sigma2);
  EXPECT_NEAR(lib, ref, 1e-10);
}

TEST(DriftMap, StationaryMeanMatches) {
  const auto p = to_drift_params(2.5, 0.9, 0.1);
  EXPECT_NEAR(p.alpha / (1.0 - p.phi), std::log(2.5), 1e-12);
  EXPECT_EQ(to_drift_params(1.0, 0.99, 0.01).alpha, 0.0);
}

// Posterior over (phi, log sigma2) for the n = 3 window with beta2 = 1 held fixed, on a
// midpoint grid; x_1..x_3 are integrated by a forward pass over a 1-D grid of x cells whose
// transition masses are exact normal-CDF differences.
struct Posterior2d {
  std::vector<double> phi, log_sigma2, mass;  // mass[i * log_sigma2.size() + j]
};

Posterior2d tiny_posterior(const std::vector<double>& y) {
  Posterior2d post;
  const std::size_t n_phi = 40, n_l = 60, k = 200;
  const double l_lo = -14.0, l_hi = 16.0, x_lo = -8.0, x_hi = 26.0;
  for (std::size_t i = 0; i < n_phi; ++i) post.phi.push_back(-1.0 + (i + 0.5) * 2.0 / n_phi);
  for (std::size_t j = 0; j < n_l; ++j) post.log_sigma2.push_back(l_lo + (j + 0.5) * (l_hi - l_lo) / n_l);
  const double h = (x_hi - x_lo) / k;
  std::vector<double> xs(k), edges(k + 1);
  for (std::size_t c = 0; c <= k; ++c) edges[c] = x_lo + h * c;
  for (std::size_t c = 0; c < k; ++c) xs[c] = x_lo + h * (c + 0.5);
  std::vector<std::vector<double>> meas(y.size(), std::vector<double>(k));
  for (std::size_t t = 0; t < y.size(); ++t)
    for (std::size_t c = 0; c < k; ++c) meas[t][c] = std::exp(-0.5 * xs[c] - 0.5 * y[t] * y[t] * std::exp(-xs[c]));
  auto ncdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };

  std::vector<double> f(k), g(k), cdf(k + 1);
  for (double phi : post.phi) {
    for (double l : post.log_sigma2) {
      const double s = std::exp(0.5 * l), sd0 = s / std::sqrt(1.0 - phi * phi);
      for (std::size_t c = 0; c < k; ++c) f[c] = (ncdf(edges[c + 1] / sd0) - ncdf(edges[c] / sd0)) * meas[0][c];
      for (std::size_t t = 1; t < y.size(); ++t) {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t a = 0; a < k; ++a) {
          if (f[a] == 0.0) continue;
          const double m = phi * xs[a];
          for (std::size_t c = 0; c <= k; ++c) cdf[c] = ncdf((edges[c] - m) / s);
          for (std::size_t c = 0; c < k; ++c) g[c] += f[a] * (cdf[c + 1] - cdf[c]);
        }
        for (std::size_t c = 0; c < k; ++c) f[c] = g[c] * meas[t][c];
      }
      // Prior (sigma2)^{-1/2} times the Jacobian sigma2 of the log-scale grid.
      post.mass.push_back(std::accumulate(f.begin(), f.end(), 0.0) * std::exp(0.5 * l));
    }
  }
  const double total = std::accumulate(post.mass.begin(), post.mass.end(), 0.0);
  for (double& m : post.mass) m /= total;
  return post;
}

std::size_t bin_of(double phi, double log_sigma2) {
  const std::size_t bp = std::min<std::size_t>(3, static_cast<std::size_t>((phi + 1.0) / 0.5));
  const std::size_t bs = log_sigma2 < -2.0 ? 0 : (log_sigma2 < 1.0 ? 1 : 2);
  return bp * 3 + bs;
}

TEST(Sweep, PreservesTargetOnTinyWindow) {
  // The full (beta2, sigma2, phi, x) target is improper under the 1/(sigma beta) prior (the
  // direction x -> x + c, beta2 -> beta2 e^{-c} is not damped as c -> -inf), so the check
  // runs the remaining sweep with beta2 fixed at 1, composed from the library samplers in
  // the sweep's order.
  const std::vector<double> y{0.5, -1.2, 0.8};
  const auto post = tiny_posterior(y);
  std::vector<double> expected(12, 0.0);
  for (std::size_t i = 0; i < post.phi.size(); ++i)
    for (std::size_t j = 0; j < post.log_sigma2.size(); ++j)
      expected[bin_of(post.phi[i], post.log_sigma2[j])] += post.mass[i * post.log_sigma2.size() + j];

  Rng rng(21);
  CenteredState s{1.0, 0.0, 1.0, {0.0, 0.0, 0.0}};
  std::vector<double> observed(12, 0.0);
  const std::size_t burn = 10000, sweeps = 2'000'000;
  for (std::size_t it = 0; it < burn + sweeps; ++it) {
    s.sigma2 = sample_sigma2(s.x, s.phi, rng, ScaleFloor::clamp);
    s.phi = sample_phi_mh(s.x, s.sigma2, s.phi, rng);
    for (std::size_t t = 1; t <= 3; ++t) s.x[t - 1] = sample_x_mh(t, s.x, y[t - 1], 1.0, s.phi, s.sigma2, rng);
    if (it >= burn) observed[bin_of(s.phi, std::log(s.sigma2))] += 1.0 / sweeps;
  }
  double tv = 0.0;
  for (std::size_t b = 0; b < 12; ++b) tv += 0.5 * std::abs(observed[b] - expected[b]);
  EXPECT_LT(tv, 0.05);
}

TEST(BetaStep, KolmogorovSmirnovAgainstConditional) {
  const std::vector<double> y{0.5, -1.2, 0.8, 0.3}, x{0.2, -0.1, 0.4, 0.0};
  double scale = 0.0;
  for (std::size_t t = 0; t < 4; ++t) scale += 0.5 * y[t] * y[t] * std::exp(-x[t]);
  Rng rng(22);
  std::vector<double> draws(100000);
  for (double& d : draws) d = sample_beta2(y, x, rng);
  EXPECT_LT(oracle::ks_statistic(draws, [&](double z) { return oracle::inverse_gamma_cdf(z, 1.5, scale); }),
            oracle::ks_critical_1pct(draws.size()));
}

TEST(RunGibbs, ShapeAndDeterminism) {
  const std::vector<double> y = [] {
    const auto x = ar_path(60, 0.9, 0.1, 23);
    Rng rng(24);
    std::normal_distribution<double> z;
    std::vector<double> out;
    for (double v : x) out.push_back(std::exp(0.5 * v) * z(rng));
    return out;
  }();
  GibbsConfig cfg;
  cfg.n = 50;
  cfg.burn_in = 200;
  const auto a = run_gibbs(y, cfg, 300, std::uint64_t{5});
  const auto b = run_gibbs(y, cfg, 300, std::uint64_t{5});
  ASSERT_EQ(a.size(), 300u);
  EXPECT_EQ(a.x_n, b.x_n);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.iterations, 500u);
  const auto cloud = a.to_cloud();
  for (double w : normalize(cloud)) EXPECT_DOUBLE_EQ(w, 1.0 / 300.0);
  for (const auto& th : a.theta) {
    const auto p = from_transformed(th);
    EXPECT_LT(std::abs(p.phi), 1.0);
    EXPECT_GT(p.sigma2, 0.0);
  }
  EXPECT_GT(a.phi_acceptance, 0.0);
  EXPECT_GT(a.x_acceptance, 0.0);

  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto pooled = run_gibbs_chains(y, cfg, 100, seeds);
  EXPECT_EQ(pooled.size(), 100u);
  EXPECT_EQ(pooled.seeds, seeds);
}

TEST(RunGibbs, Preconditions) {
  const std::vector<double> y{0.3, 0.1, -0.2};
  GibbsConfig cfg;
  cfg.n = 1;
  EXPECT_THROW(run_gibbs(y, cfg, 10, std::uint64_t{1}), DomainError);
  cfg.n = 5;
  EXPECT_THROW(run_gibbs(y, cfg, 10, std::uint64_t{1}), DomainError);
  cfg.n = 3;
  cfg.iterations = 100;
  cfg.burn_in = 100;
  EXPECT_THROW(run_gibbs(y, cfg, 10, std::uint64_t{1}), DomainError);
  cfg.burn_in = 95;
  EXPECT_THROW(run_gibbs(y, cfg, 10, std::uint64_t{1}), DomainError);
  cfg.thin = 0;
  EXPECT_THROW(cfg.validate(1), DomainError);
}

TEST(RunGibbs, WeeklyCalibration) {
  // Long independent chains put the exact posterior sd of sigma2 at 0.06-0.12 for these
  // seeds, wider than the tolerance, so this is expected to miss; kept as stated.
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = simulate(weekly_params(), 300, 100 + seed);
    GibbsConfig cfg;
    cfg.n = 300;
    const auto init = run_gibbs(data.y, cfg, 2000, seed);
    double phi = 0.0, sigma2 = 0.0;
    for (const auto& th : init.theta) {
      const auto p = from_transformed(th);
      phi += p.phi / 2000.0;
      sigma2 += p.sigma2 / 2000.0;
    }
    if (std::abs(phi - 0.9) <= 0.1 && std::abs(sigma2 - 0.1) <= 0.05) ++hits;
  }
  EXPECT_GE(hits, 9) << "posterior means within tolerance for " << hits << "/10 seeds";
}

}  // namespace
}  // namespace regpf
