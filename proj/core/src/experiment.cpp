#include "regpf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "regpf/errors.hpp"
#include "regpf/metrics.hpp"

namespace regpf {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename F>
void parallel_for(std::size_t count, std::size_t jobs, F&& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(jobs, count);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw DomainError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return v;
}

bool parse_flag(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw DomainError("invalid boolean '" + std::string(value) + "' for " + std::string(key));
}

bool is_sir_family(std::string_view algo) {
  return algo == "SIR" || algo == "SIR-p" || algo == "SIR-r" || algo == "SIR-r-p";
}
bool is_sis_family(std::string_view algo) { return algo == "SIS" || algo == "SIS-p"; }

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<double> metric_values(std::span<const SummaryRow> rows, std::string_view algo, double SummaryRow::*metric) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.algo == algo && !r.degenerate && !std::isnan(r.*metric)) v.push_back(r.*metric);
  }
  return v;
}

struct Reference {
  const char* algo;
  double alpha, phi, sigma2;
};

// Published mean squared errors (10 runs, N = 10000), shown for comparison only.
constexpr Reference kDailyReference[] = {
    {"SIS", 0.00719, 0.66767, 0.89327},   {"SIS-p", 0.00945, 0.83264, 0.87910}, {"SIR", 0.00885, 0.12433, 0.00676},
    {"SIR-p", 0.00925, 0.13355, 0.00670}, {"SIR-r", 0.00315, 0.15252, 0.00643}, {"SIR-r-p", 0.00912, 0.13456, 0.00654},
    {"APF", 0.00065, 0.00855, 0.00506},
};
constexpr Reference kWeeklyReference[] = {
    {"SIS", 0.00534, 0.51290, 0.70540},   {"SIS-p", 0.00487, 0.55648, 0.71242}, {"SIR", 0.00589, 0.05292, 0.00010},
    {"SIR-p", 0.00442, 0.03754, 0.00009}, {"SIR-r", 0.00380, 0.04885, 0.00009}, {"SIR-r-p", 0.00431, 0.03687, 0.00009},
    {"APF", 0.00016, 0.00029, 0.00008},
};

std::string fixed(double v, int precision = 5) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!data_file) regpf::validate(params);
  if (runs < 1) throw DomainError("--runs must be at least 1");
  if (particles < 2) throw DomainError("--particles must be at least 2");
  if (init_n < 2) throw DomainError("--init-n must be at least 2");
  if (!data_file && init_n > horizon) throw DomainError("--init-n exceeds the horizon");
  if (jobs < 1) throw DomainError("--jobs must be at least 1");
  if (algos.empty()) throw DomainError("no filter variants selected");
  for (Variant v : algos) filter_config(v).validate();
  if (!init_file) gibbs_config().validate(particles);
}

FilterConfig ExperimentConfig::filter_config(Variant v) const {
  KernelConfig kernel;
  kernel.a = shrinkage_a;
  FilterConfig cfg = FilterConfig::for_variant(v, particles, kernel);
  cfg.kappa_frac = kappa_frac;
  return cfg;
}

GibbsConfig ExperimentConfig::gibbs_config() const {
  GibbsConfig g;
  g.n = init_n;
  g.burn_in = burn_in;
  g.thin = thin;
  return g;
}

std::vector<Variant> parse_variant_list(std::string_view text) {
  if (text == "all") return {all_variants().begin(), all_variants().end()};
  std::vector<Variant> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string name = trim(text.substr(start, comma - start));
    if (!name.empty()) out.push_back(parse_variant(name));
    start = comma + 1;
  }
  if (out.empty()) throw DomainError("empty variant list");
  return out;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "label") {
    cfg.label = parse_dataset_label(value);
    if (cfg.label == DatasetLabel::daily) cfg.params = daily_params();
    if (cfg.label == DatasetLabel::weekly) cfg.params = weekly_params();
    cfg.horizon = default_horizon(cfg.label);
  } else if (key == "alpha") {
    cfg.params.alpha = parse_number<double>(key, value);
    cfg.label = DatasetLabel::custom;
  } else if (key == "phi") {
    cfg.params.phi = parse_number<double>(key, value);
    cfg.label = DatasetLabel::custom;
  } else if (key == "sigma2") {
    cfg.params.sigma2 = parse_number<double>(key, value);
    cfg.label = DatasetLabel::custom;
  } else if (key == "horizon") {
    cfg.horizon = parse_number<std::size_t>(key, value);
  } else if (key == "particles") {
    cfg.particles = parse_number<std::size_t>(key, value);
  } else if (key == "init-n") {
    cfg.init_n = parse_number<std::size_t>(key, value);
  } else if (key == "burn-in") {
    cfg.burn_in = parse_number<std::size_t>(key, value);
  } else if (key == "thin") {
    cfg.thin = parse_number<std::size_t>(key, value);
  } else if (key == "runs") {
    cfg.runs = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "algo") {
    cfg.algos = parse_variant_list(value);
  } else if (key == "kappa-frac") {
    cfg.kappa_frac = parse_number<double>(key, value);
  } else if (key == "shrinkage-a") {
    cfg.shrinkage_a = parse_number<double>(key, value);
  } else if (key == "jobs") {
    cfg.jobs = parse_number<std::size_t>(key, value);
  } else if (key == "out") {
    cfg.out = std::string(value);
  } else if (key == "data") {
    cfg.data_file = std::string(value);
  } else if (key == "init") {
    cfg.init_file = std::string(value);
  } else if (key == "fixed-dataset") {
    cfg.fixed_dataset = parse_flag(key, value);
  } else {
    throw DomainError("unknown setting '" + std::string(key) + "'");
  }
}

void apply_config_file(ExperimentConfig& cfg, const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    apply_setting(cfg, trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
}

Dataset dataset_for_run(const ExperimentConfig& cfg, std::size_t run) {
  if (cfg.data_file) return read_dataset(*cfg.data_file);
  const std::uint64_t seed = cfg.fixed_dataset ? cfg.seed : cfg.run_seed(run);
  return simulate(cfg.params, cfg.horizon, seed, cfg.label);
}

InitSample init_for_run(const ExperimentConfig& cfg, const Dataset& data, std::size_t run) {
  if (cfg.init_file) {
    InitSample init = read_init(*cfg.init_file);
    if (init.size() != cfg.particles) {
      throw DomainError("init sample holds " + std::to_string(init.size()) + " particles, expected " +
                        std::to_string(cfg.particles));
    }
    return init;
  }
  Rng rng = make_stream(cfg.run_seed(run), {kInitStream});
  InitSample init = run_gibbs(data.y, cfg.gibbs_config(), cfg.particles, rng);
  init.seeds = {cfg.run_seed(run)};
  return init;
}

RunTrace trace_for_run(const ExperimentConfig& cfg, const Dataset& data, const InitSample& init, Variant v,
                       std::size_t run) {
  Rng rng = make_stream(cfg.run_seed(run), {kFilterStream, static_cast<std::uint64_t>(v)});
  return run_filter(data, init, cfg.filter_config(v), rng);
}

RunSummary summarize(const RunTrace& trace, std::size_t run) {
  RunSummary s;
  s.algo = trace.algo;
  s.run = run;
  s.degenerate = trace.aborted || trace.entries.empty();
  if (!trace.entries.empty()) {
    const auto& last = trace.entries.back();
    s.estimate = {last.alpha_mean, last.phi_mean, last.sigma2_mean};
    s.final_rmse = last.rmse_cum;
  } else {
    s.estimate = {kNaN, kNaN, kNaN};
    s.final_rmse = kNaN;
  }
  return s;
}

fs::path run_dir(const ExperimentConfig& cfg, std::size_t run) { return cfg.out / "runs" / ("run" + std::to_string(run)); }

fs::path trace_path(const ExperimentConfig& cfg, std::size_t run, Variant v) {
  return run_dir(cfg, run) / ("trace_" + std::string(to_string(v)) + ".csv");
}

std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<RunOutput> runs(cfg.runs);

  parallel_for(cfg.runs, cfg.jobs, [&](std::size_t r) {
    RunOutput& out = runs[r];
    out.run = r;
    out.dataset = dataset_for_run(cfg, r);
    out.init = init_for_run(cfg, out.dataset, r);
    out.traces.resize(cfg.algos.size());
    write_dataset(run_dir(cfg, r), out.dataset);
    write_init(run_dir(cfg, r) / "init.csv", out.init);
  });

  const std::size_t per_run = cfg.algos.size();
  parallel_for(cfg.runs * per_run, cfg.jobs, [&](std::size_t task) {
    const std::size_t r = task / per_run;
    const Variant v = cfg.algos[task % per_run];
    RunOutput& out = runs[r];
    RunTrace trace = trace_for_run(cfg, out.dataset, out.init, v, r);
    TraceMeta meta;
    meta.run = r;
    meta.seed = cfg.run_seed(r);
    meta.dataset_seed = out.dataset.seed;
    meta.dataset_label = std::string(to_string(out.dataset.label));
    meta.kappa_frac = cfg.kappa_frac;
    meta.shrinkage_a = cfg.shrinkage_a;
    write_trace(trace_path(cfg, r, v), trace, out.dataset, meta);
    out.traces[task % per_run] = std::move(trace);
  });
  return runs;
}

RankingCheck check_ranking(std::span<const SummaryRow> rows, double SummaryRow::*metric) {
  RankingCheck check;
  check.apf = median_of(metric_values(rows, "APF", metric));
  check.best_sir = kNaN;
  check.best_sis = kNaN;
  for (Variant v : all_variants()) {
    const std::string_view name = to_string(v);
    const double m = median_of(metric_values(rows, name, metric));
    if (std::isnan(m)) continue;
    if (is_sir_family(name)) check.best_sir = std::isnan(check.best_sir) ? m : std::min(check.best_sir, m);
    if (is_sis_family(name)) check.best_sis = std::isnan(check.best_sis) ? m : std::min(check.best_sis, m);
  }
  check.holds = check.apf < check.best_sir && check.best_sir < check.best_sis;
  return check;
}

std::vector<SummaryRow> summary_rows(const ExperimentConfig& cfg, std::span<const RunOutput> runs) {
  std::vector<SummaryRow> rows;
  for (std::size_t k = 0; k < cfg.algos.size(); ++k) {
    for (const auto& run : runs) {
      rows.push_back(summary_row(summarize(run.traces[k], run.run), run.dataset.params_true));
    }
  }
  return rows;
}

std::vector<EnvelopeRow> envelope_rows(const ExperimentConfig& cfg, std::span<const RunOutput> runs) {
  std::vector<EnvelopeRow> rows;
  for (std::size_t k = 0; k < cfg.algos.size(); ++k) {
    const std::string algo(to_string(cfg.algos[k]));
    std::vector<std::vector<double>> ess, rmse, rmse_x;
    std::size_t start = 0;
    for (const auto& run : runs) {
      const RunTrace& trace = run.traces[k];
      start = trace.start_index;
      std::vector<double> e, r, xs, xt;
      for (const auto& entry : trace.entries) {
        e.push_back(entry.ess);
        r.push_back(entry.rmse_cum);
        xs.push_back(entry.x_mean);
        xt.push_back(run.dataset.x_true.at(entry.t));
      }
      ess.push_back(std::move(e));
      rmse.push_back(std::move(r));
      rmse_x.push_back(rmse_trace(xs, xt));
    }
    const std::pair<const char*, const std::vector<std::vector<double>>*> metrics[] = {
        {"ess", &ess}, {"rmse", &rmse}, {"rmse_x", &rmse_x}};
    for (const auto& [name, traces] : metrics) {
      const Envelope env = aggregate_across_runs(*traces);
      for (std::size_t i = 0; i < env.mean.size(); ++i) {
        rows.push_back({start + 1 + i, algo + ":" + name, env.mean[i], env.min[i], env.max[i], env.count[i]});
      }
    }
  }
  return rows;
}

std::string render_report(DatasetLabel label, std::size_t particles, std::span<const SummaryRow> rows) {
  std::vector<std::string> algos;
  std::size_t runs = 0;
  for (const auto& r : rows) {
    if (std::find(algos.begin(), algos.end(), r.algo) == algos.end()) algos.push_back(r.algo);
    runs = std::max(runs, r.run + 1);
  }

  std::ostringstream out;
  out << "Regularized particle filter benchmark\n";
  out << "dataset: " << to_string(label) << ", particles: " << particles << ", runs: " << runs << "\n\n";

  auto table = [&](const char* title, auto reduce) {
    out << title << "\n";
    out << std::left << std::setw(10) << "algo" << std::right << std::setw(12) << "alpha" << std::setw(12) << "phi"
        << std::setw(12) << "sigma2" << std::setw(10) << "used" << std::setw(10) << "excluded" << "\n";
    for (const auto& algo : algos) {
      std::size_t used = 0, excluded = 0;
      for (const auto& r : rows) {
        if (r.algo != algo) continue;
        (r.degenerate ? excluded : used) += 1;
      }
      out << std::left << std::setw(10) << algo << std::right << std::setw(12)
          << fixed(reduce(metric_values(rows, algo, &SummaryRow::mse_alpha))) << std::setw(12)
          << fixed(reduce(metric_values(rows, algo, &SummaryRow::mse_phi))) << std::setw(12)
          << fixed(reduce(metric_values(rows, algo, &SummaryRow::mse_sigma2))) << std::setw(10) << used
          << std::setw(10) << excluded << "\n";
    }
    out << "\n";
  };
  table("Mean squared error of final estimates", [](std::vector<double> v) {
    if (v.empty()) return kNaN;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  });
  table("Median squared error of final estimates", [](std::vector<double> v) { return median_of(std::move(v)); });

  auto ranking_line = [&](const char* name, double SummaryRow::*metric) {
    const RankingCheck c = check_ranking(rows, metric);
    out << "ordering by median squared error of " << name << ": APF " << fixed(c.apf) << " < best SIR-family "
        << fixed(c.best_sir) << " < best SIS-family " << fixed(c.best_sis) << ": "
        << (c.holds ? "holds" : "violated") << "\n";
  };
  ranking_line("phi", &SummaryRow::mse_phi);
  ranking_line("sigma2", &SummaryRow::mse_sigma2);

  std::span<const Reference> reference;
  if (label == DatasetLabel::daily) reference = kDailyReference;
  if (label == DatasetLabel::weekly) reference = kWeeklyReference;
  if (!reference.empty()) {
    out << "\nReference mean squared errors, published study (N = 10000, 10 runs; display only)\n";
    out << std::left << std::setw(10) << "algo" << std::right << std::setw(12) << "alpha" << std::setw(12) << "phi"
        << std::setw(12) << "sigma2" << "\n";
    for (const auto& ref : reference) {
      out << std::left << std::setw(10) << ref.algo << std::right << std::setw(12) << fixed(ref.alpha)
          << std::setw(12) << fixed(ref.phi) << std::setw(12) << fixed(ref.sigma2) << "\n";
    }
  }
  return out.str();
}

BenchReport run_bench(const ExperimentConfig& cfg) {
  const auto runs = run_experiment(cfg);
  BenchReport report;
  report.summary = summary_rows(cfg, runs);
  report.envelope = envelope_rows(cfg, runs);
  report.phi = check_ranking(report.summary, &SummaryRow::mse_phi);
  report.sigma2 = check_ranking(report.summary, &SummaryRow::mse_sigma2);
  report.text = render_report(cfg.label, cfg.particles, report.summary);

  write_summary(cfg.out / "summary.csv", report.summary);
  write_envelope(cfg.out / "envelope.csv", report.envelope);
  write_file_atomic(cfg.out / "report.txt", report.text);

  nlohmann::json meta;
  meta["label"] = std::string(to_string(cfg.label));
  meta["alpha"] = cfg.params.alpha;
  meta["phi"] = cfg.params.phi;
  meta["sigma2"] = cfg.params.sigma2;
  meta["horizon"] = cfg.horizon;
  meta["particles"] = cfg.particles;
  meta["init_n"] = cfg.init_n;
  meta["burn_in"] = cfg.burn_in;
  meta["thin"] = cfg.thin;
  meta["runs"] = cfg.runs;
  meta["seed"] = cfg.seed;
  meta["kappa_frac"] = cfg.kappa_frac;
  meta["shrinkage_a"] = cfg.shrinkage_a;
  meta["fixed_dataset"] = cfg.fixed_dataset;
  std::vector<std::string> names;
  for (Variant v : cfg.algos) names.emplace_back(to_string(v));
  meta["algos"] = names;
  write_file_atomic(cfg.out / "bench.meta.json", meta.dump(2) + "\n");
  return report;
}

std::string regenerate_report(const fs::path& dir) {
  const auto rows = read_summary(dir / "summary.csv");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "bench.meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError((dir / "bench.meta.json").string() + ": " + e.what());
  }
  DatasetLabel label;
  std::size_t particles;
  try {
    label = parse_dataset_label(meta.at("label").get<std::string>());
    particles = meta.at("particles").get<std::size_t>();
  } catch (const std::exception& e) {
    throw IoError((dir / "bench.meta.json").string() + ": " + e.what());
  }
  std::string text = render_report(label, particles, rows);
  write_file_atomic(dir / "report.txt", text);
  return text;
}

}  // namespace regpf
