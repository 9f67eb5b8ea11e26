#include "regpf/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "regpf/errors.hpp"

namespace regpf {

std::vector<double> rmse_trace(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size()) throw DomainError("rmse_trace: length mismatch");
  std::vector<double> out(estimates.size());
  double sum_sq = 0.0;
  for (std::size_t u = 0; u < estimates.size(); ++u) {
    const double e = estimates[u] - truths[u];
    sum_sq += e * e;
    out[u] = std::sqrt(sum_sq / static_cast<double>(u + 1));
  }
  return out;
}

ComponentRmse rmse_trace(std::span<const AugmentedPoint> estimates, std::span<const AugmentedPoint> truths) {
  if (estimates.size() != truths.size()) throw DomainError("rmse_trace: length mismatch");
  const std::size_t n = estimates.size();
  auto component = [&](auto member) {
    std::vector<double> e(n), z(n);
    for (std::size_t u = 0; u < n; ++u) {
      e[u] = estimates[u].*member;
      z[u] = truths[u].*member;
    }
    return rmse_trace(e, z);
  };

  ComponentRmse out;
  out.x = component(&AugmentedPoint::x);
  out.alpha = component(&AugmentedPoint::alpha);
  out.phi = component(&AugmentedPoint::phi);
  out.sigma2 = component(&AugmentedPoint::sigma2);

  CumulativeRmse running;
  out.total.resize(n);
  for (std::size_t u = 0; u < n; ++u) {
    running.add(estimates[u], truths[u]);
    out.total[u] = running.value();
  }
  return out;
}

void CumulativeRmse::add(const AugmentedPoint& estimate, const AugmentedPoint& truth) {
  const double ex = estimate.x - truth.x;
  const double ea = estimate.alpha - truth.alpha;
  const double ep = estimate.phi - truth.phi;
  const double es = estimate.sigma2 - truth.sigma2;
  state_sq_ += ex * ex;
  total_sq_ += ex * ex + ea * ea + ep * ep + es * es;
  ++count_;
}

double CumulativeRmse::value() const {
  return count_ == 0 ? 0.0 : std::sqrt(total_sq_ / static_cast<double>(count_));
}

double CumulativeRmse::state_value() const {
  return count_ == 0 ? 0.0 : std::sqrt(state_sq_ / static_cast<double>(count_));
}

namespace {

std::vector<const RunSummary*> usable_runs(std::span<const RunSummary> runs, std::size_t& excluded) {
  std::vector<const RunSummary*> used;
  excluded = 0;
  for (const auto& r : runs) {
    if (r.degenerate) {
      ++excluded;
    } else {
      used.push_back(&r);
    }
  }
  if (used.empty()) throw DomainError("no non-degenerate runs to summarize");
  return used;
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

ParamMse param_mse(std::span<const RunSummary> runs, const SVParams& truth) {
  ParamMse out;
  const auto used = usable_runs(runs, out.runs_excluded);
  out.runs_used = used.size();
  for (const RunSummary* r : used) {
    out.alpha += (r->estimate.alpha - truth.alpha) * (r->estimate.alpha - truth.alpha);
    out.phi += (r->estimate.phi - truth.phi) * (r->estimate.phi - truth.phi);
    out.sigma2 += (r->estimate.sigma2 - truth.sigma2) * (r->estimate.sigma2 - truth.sigma2);
  }
  const double count = static_cast<double>(used.size());
  out.alpha /= count;
  out.phi /= count;
  out.sigma2 /= count;
  return out;
}

ParamMse param_median_squared_error(std::span<const RunSummary> runs, const SVParams& truth) {
  ParamMse out;
  const auto used = usable_runs(runs, out.runs_excluded);
  out.runs_used = used.size();
  std::vector<double> a, p, s;
  for (const RunSummary* r : used) {
    a.push_back((r->estimate.alpha - truth.alpha) * (r->estimate.alpha - truth.alpha));
    p.push_back((r->estimate.phi - truth.phi) * (r->estimate.phi - truth.phi));
    s.push_back((r->estimate.sigma2 - truth.sigma2) * (r->estimate.sigma2 - truth.sigma2));
  }
  out.alpha = median(std::move(a));
  out.phi = median(std::move(p));
  out.sigma2 = median(std::move(s));
  return out;
}

Envelope aggregate_across_runs(std::span<const std::vector<double>> traces) {
  std::size_t length = 0;
  for (const auto& t : traces) length = std::max(length, t.size());

  Envelope env;
  env.mean.assign(length, kMissing);
  env.min.assign(length, kMissing);
  env.max.assign(length, kMissing);
  env.count.assign(length, 0);
  for (std::size_t step = 0; step < length; ++step) {
    double sum = 0.0;
    for (const auto& t : traces) {
      if (step >= t.size() || std::isnan(t[step])) continue;
      const double v = t[step];
      if (env.count[step] == 0) {
        env.min[step] = v;
        env.max[step] = v;
      } else {
        env.min[step] = std::min(env.min[step], v);
        env.max[step] = std::max(env.max[step], v);
      }
      sum += v;
      ++env.count[step];
    }
    if (env.count[step] > 0) {
      env.mean[step] = std::clamp(sum / static_cast<double>(env.count[step]), env.min[step], env.max[step]);
    }
  }
  return env;
}

}  // namespace regpf
