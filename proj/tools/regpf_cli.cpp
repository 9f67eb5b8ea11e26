// regpf: command-line harness for the regularized particle filter experiments.
//
//   regpf simulate --label daily --seed 1 --out data/
//   regpf init     --data data/dataset.csv --particles 2000 --out init/
//   regpf run      --label daily --algo APF --runs 1 --out runs/
//   regpf bench    --label weekly --runs 10 --jobs 4 --out bench/
//   regpf report   --out bench/
//
// Exit codes: 0 success, 1 usage/config, 2 I/O, 3 numerical failure outside a filter run.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regpf/errors.hpp"
#include "regpf/experiment.hpp"
#include "regpf/io.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

// Settings in application order; `label` first so explicit parameters override it.
const std::vector<std::string> kSettingKeys = {
    "label", "alpha",  "phi",  "sigma2",     "horizon",     "particles", "init-n", "burn-in", "thin", "runs",
    "seed",  "algo",   "kappa-frac", "shrinkage-a", "jobs", "out", "data", "init", "fixed-dataset",
};

struct Flags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;
  bool fixed_dataset = false;
};

void add_flags(CLI::App& cmd, Flags& f, bool experiment) {
  auto opt = [&](const std::string& key, const std::string& help) {
    f.options[key] = cmd.add_option("--" + key, f.values[key], help);
  };
  cmd.add_option("--config", f.config_file, "key=value file; flags override its values");
  opt("label", "dataset preset: daily or weekly");
  opt("alpha", "AR drift of the log-volatility");
  opt("phi", "AR persistence, |phi| < 1");
  opt("sigma2", "AR innovation variance");
  opt("horizon", "number of observations T");
  opt("seed", "base seed; run r uses seed + r");
  opt("out", "output directory");
  if (!experiment) return;
  opt("particles", "particle count N");
  opt("init-n", "Gibbs initialization window n");
  opt("burn-in", "Gibbs burn-in sweeps");
  opt("thin", "Gibbs thinning interval");
  opt("runs", "independent runs R");
  opt("algo", "SIS, SIS-p, SIR, SIR-p, SIR-r, SIR-r-p, APF, all, or a comma list");
  opt("kappa-frac", "ESS resampling threshold as a fraction of N");
  opt("shrinkage-a", "kernel shrinkage a");
  opt("jobs", "concurrent runs");
  opt("data", "dataset.csv to filter instead of simulating");
  opt("init", "init.csv to reuse instead of running the Gibbs sampler");
  f.options["fixed-dataset"] = cmd.add_flag("--fixed-dataset", f.fixed_dataset, "reuse one simulated path for all runs");
}

regpf::ExperimentConfig build_config(const Flags& f) {
  regpf::ExperimentConfig cfg;
  if (!f.config_file.empty()) regpf::apply_config_file(cfg, f.config_file);
  for (const auto& key : kSettingKeys) {
    const auto it = f.options.find(key);
    if (it == f.options.end() || it->second->count() == 0) continue;
    if (key == "fixed-dataset") {
      regpf::apply_setting(cfg, key, f.fixed_dataset ? "true" : "false");
    } else {
      regpf::apply_setting(cfg, key, f.values.at(key));
    }
  }
  return cfg;
}

int cmd_simulate(const Flags& f) {
  const auto cfg = build_config(f);
  regpf::validate(cfg.params);
  const auto data = regpf::simulate(cfg.params, cfg.horizon, cfg.seed, cfg.label);
  const auto path = regpf::write_dataset(cfg.out, data);
  std::cout << "wrote " << path.string() << " (T = " << data.horizon << ", label " << regpf::to_string(data.label)
            << ")\n";
  return 0;
}

int cmd_init(const Flags& f) {
  auto cfg = build_config(f);
  cfg.init_file.reset();
  cfg.validate();
  const auto data = regpf::dataset_for_run(cfg, 0);
  const auto init = regpf::init_for_run(cfg, data, 0);
  if (!cfg.data_file) regpf::write_dataset(cfg.out, data);
  regpf::write_init(cfg.out / "init.csv", init);
  std::cout << "wrote " << (cfg.out / "init.csv").string() << " (N = " << init.size() << ", n = " << init.n
            << ", phi acceptance " << init.phi_acceptance << ", x acceptance " << init.x_acceptance << ")\n";
  return 0;
}

int cmd_run(const Flags& f) {
  const auto cfg = build_config(f);
  const auto runs = regpf::run_experiment(cfg);
  for (const auto& run : runs) {
    for (std::size_t k = 0; k < cfg.algos.size(); ++k) {
      const auto& trace = run.traces[k];
      std::cout << regpf::trace_path(cfg, run.run, cfg.algos[k]).string() << ": " << trace.entries.size()
                << " steps";
      if (trace.collapse_step) std::cout << ", weights collapsed at t = " << *trace.collapse_step;
      if (trace.aborted) std::cout << ", aborted: " << trace.abort_reason;
      std::cout << "\n";
    }
  }
  return 0;
}

int cmd_bench(const Flags& f) {
  const auto cfg = build_config(f);
  const auto report = regpf::run_bench(cfg);
  std::cout << report.text;
  return 0;
}

int cmd_report(const Flags& f) {
  const auto cfg = build_config(f);
  std::cout << regpf::regenerate_report(cfg.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized particle filters for stochastic volatility"};
  app.require_subcommand(1);

  Flags simulate_flags, init_flags, run_flags, bench_flags, report_flags;
  auto* simulate = app.add_subcommand("simulate", "simulate a dataset (dataset.csv + dataset.meta.json)");
  add_flags(*simulate, simulate_flags, false);
  auto* init = app.add_subcommand("init", "Gibbs initialization sample (init.csv + init.meta.json)");
  add_flags(*init, init_flags, true);
  auto* run = app.add_subcommand("run", "run filter variants and write traces");
  add_flags(*run, run_flags, true);
  auto* bench = app.add_subcommand("bench", "all variants x runs: summary, envelopes, report");
  add_flags(*bench, bench_flags, true);
  auto* report = app.add_subcommand("report", "rebuild report.txt from a bench directory");
  add_flags(*report, report_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(simulate_flags);
    if (*init) return cmd_init(init_flags);
    if (*run) return cmd_run(run_flags);
    if (*bench) return cmd_bench(bench_flags);
    if (*report) return cmd_report(report_flags);
  } catch (const regpf::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const regpf::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const regpf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const regpf::DegeneracyError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
