#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regpf/filters.hpp"
#include "regpf/io.hpp"
#include "regpf/mcmc_init.hpp"
#include "regpf/sv_model.hpp"

// Experiment orchestration behind the command-line harness: datasets, shared Gibbs
// startup, the seven filter variants over independent runs, and the files they produce.
//
// Seed discipline: run r uses base seed + r. Within a run the dataset, the Gibbs chain
// and each variant's filter draw from separate streams derived from that seed, so
// results do not depend on the order (or thread) in which runs execute.

namespace regpf {

struct ExperimentConfig {
  DatasetLabel label = DatasetLabel::daily;
  SVParams params = daily_params();
  std::size_t horizon = 1500;
  /// Load this dataset instead of simulating (implies a fixed dataset across runs).
  std::optional<std::filesystem::path> data_file;
  /// Reuse this initial sample instead of running the Gibbs sampler.
  std::optional<std::filesystem::path> init_file;
  /// Reuse one simulated path (seed = base seed) for every run.
  bool fixed_dataset = false;

  std::size_t particles = 2000;
  std::size_t init_n = 100;
  std::size_t burn_in = 2000;
  std::size_t thin = 1;
  std::size_t runs = 10;
  std::uint64_t seed = 1;
  std::vector<Variant> algos{all_variants().begin(), all_variants().end()};
  double kappa_frac = 0.9;
  double shrinkage_a = 0.98;
  std::size_t jobs = 1;
  std::filesystem::path out = "out";

  /// Throws DomainError on invalid settings.
  void validate() const;
  FilterConfig filter_config(Variant v) const;
  GibbsConfig gibbs_config() const;
  std::uint64_t run_seed(std::size_t run) const { return seed + run; }
};

/// Applies one `key=value` setting; keys mirror the long CLI flags without dashes
/// (e.g. `init-n=100`, `algo=SIR-r-p`). Throws DomainError on unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Reads a flat key=value file ('#' starts a comment) into `cfg`.
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Parses `all` or a comma-separated list of variant names.
std::vector<Variant> parse_variant_list(std::string_view text);

Dataset dataset_for_run(const ExperimentConfig& cfg, std::size_t run);
InitSample init_for_run(const ExperimentConfig& cfg, const Dataset& data, std::size_t run);
RunTrace trace_for_run(const ExperimentConfig& cfg, const Dataset& data, const InitSample& init, Variant v,
                       std::size_t run);

/// Final estimates of a trace (or a degenerate marker when it aborted).
RunSummary summarize(const RunTrace& trace, std::size_t run);

/// Directory holding one run's dataset, init sample and traces.
std::filesystem::path run_dir(const ExperimentConfig& cfg, std::size_t run);
std::filesystem::path trace_path(const ExperimentConfig& cfg, std::size_t run, Variant v);

struct RunOutput {
  std::size_t run = 0;
  Dataset dataset;
  InitSample init;
  std::vector<RunTrace> traces;  // aligned with cfg.algos
};

/// Runs every configured variant for every run (up to cfg.jobs concurrently) and writes
/// datasets, init samples and traces under cfg.out.
std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg);

struct RankingCheck {
  double apf = 0.0;
  double best_sir = 0.0;
  double best_sis = 0.0;
  bool holds = false;
};

struct BenchReport {
  std::vector<SummaryRow> summary;
  std::vector<EnvelopeRow> envelope;
  RankingCheck phi;
  RankingCheck sigma2;
  std::string text;
};

/// Median-squared-error ordering APF < best SIR-family < best SIS-family for one parameter.
RankingCheck check_ranking(std::span<const SummaryRow> rows, double SummaryRow::*metric);

std::vector<SummaryRow> summary_rows(const ExperimentConfig& cfg, std::span<const RunOutput> runs);
std::vector<EnvelopeRow> envelope_rows(const ExperimentConfig& cfg, std::span<const RunOutput> runs);

/// Plain-text report: per-variant MSEs, ranking lines, and the published reference table.
std::string render_report(DatasetLabel label, std::size_t particles, std::span<const SummaryRow> rows);

/// Full benchmark: run_experiment plus summary.csv, envelope.csv, bench.meta.json, report.txt.
BenchReport run_bench(const ExperimentConfig& cfg);

/// Rebuilds report.txt from summary.csv and bench.meta.json in `dir`.
std::string regenerate_report(const std::filesystem::path& dir);

}  // namespace regpf
