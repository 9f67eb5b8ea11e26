#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regpf/filters.hpp"
#include "regpf/mcmc_init.hpp"
#include "regpf/metrics.hpp"
#include "regpf/sv_model.hpp"

// CSV / JSON persistence. Numbers are written in shortest round-trip form, so
// parse(write(x)) == x bit for bit, and every write goes through a temporary file
// renamed into place. Failures throw IoError.

namespace regpf {

/// Shortest decimal text that parses back to exactly `v`; empty for NaN.
std::string format_double(double v);
/// Inverse of format_double (empty text -> NaN). Throws IoError on malformed input.
double parse_double(std::string_view text);

/// Writes `content` to `path` via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// `foo.csv` -> `foo.meta.json`.
std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

// --- datasets: dataset.csv (t,y,x_true) + dataset.meta.json ---------------------------------

/// Writes <dir>/dataset.csv and <dir>/dataset.meta.json; returns the csv path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& csv_path);

// --- traces: trace.csv + trace.meta.json ----------------------------------------------------

struct TraceRow {
  std::size_t t = 0;
  std::string algo;
  double x_true = 0.0;
  double x_mean = 0.0;
  double alpha_mean = 0.0;
  double phi_mean = 0.0;
  double sigma2_mean = 0.0;
  double ess = 0.0;
  double rmse_cum = 0.0;
  bool resampled = false;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Provenance recorded next to a trace.
struct TraceMeta {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::uint64_t dataset_seed = 0;
  std::string dataset_label;
  double kappa_frac = 0.9;
  double shrinkage_a = 0.98;
};

std::vector<TraceRow> trace_rows(const RunTrace& trace, const Dataset& data);
void write_trace(const std::filesystem::path& csv_path, const RunTrace& trace, const Dataset& data,
                 const TraceMeta& meta);
std::vector<TraceRow> read_trace(const std::filesystem::path& csv_path);

// --- initial samples: init.csv (i,x_n,alpha,psi,lambda) + init.meta.json --------------------

void write_init(const std::filesystem::path& csv_path, const InitSample& init);
InitSample read_init(const std::filesystem::path& csv_path);

// --- summary.csv ----------------------------------------------------------------------------

/// One row per (algo, run): squared errors of the final parameter estimates.
struct SummaryRow {
  std::string algo;
  std::size_t run = 0;
  double mse_alpha = 0.0;
  double mse_phi = 0.0;
  double mse_sigma2 = 0.0;
  double final_rmse = 0.0;
  bool degenerate = false;

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

SummaryRow summary_row(const RunSummary& run, const SVParams& truth);
void write_summary(const std::filesystem::path& csv_path, std::span<const SummaryRow> rows);
std::vector<SummaryRow> read_summary(const std::filesystem::path& csv_path);

// --- envelope.csv ---------------------------------------------------------------------------

struct EnvelopeRow {
  std::size_t t = 0;
  std::string metric;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;

  friend bool operator==(const EnvelopeRow&, const EnvelopeRow&) = default;
};

void write_envelope(const std::filesystem::path& csv_path, std::span<const EnvelopeRow> rows);
std::vector<EnvelopeRow> read_envelope(const std::filesystem::path& csv_path);

}  // namespace regpf
