#include "regpf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "regpf/errors.hpp"

namespace regpf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Lines of a CSV file after checking the header.
std::vector<std::string> csv_body(const fs::path& path, std::string_view header) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw IoError(path.string() + ": unexpected header '" + line + "'");
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  return rows;
}

std::vector<std::string_view> fields(const fs::path& path, std::string_view line, std::size_t expected) {
  auto f = split(line);
  if (f.size() != expected) {
    throw IoError(path.string() + ": expected " + std::to_string(expected) + " fields in '" + std::string(line) + "'");
  }
  return f;
}

template <typename Int>
Int parse_int(std::string_view text) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw IoError("malformed integer '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw IoError("malformed flag '" + std::string(text) + "'");
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

template <typename T>
T get_field(const json& j, const char* key, const fs::path& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": missing or invalid '" + key + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw IoError("cannot format number");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  if (text.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw IoError("malformed number '" + std::string(text) + "'");
  }
  return v;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " into place");
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path meta_path_for(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

fs::path write_dataset(const fs::path& dir, const Dataset& data) {
  data.validate();
  std::string csv = "t,y,x_true\n";
  csv += "0,," + format_double(data.x_true[0]) + "\n";
  for (std::size_t t = 1; t <= data.horizon; ++t) {
    csv += std::to_string(t) + "," + format_double(data.y[t - 1]) + "," + format_double(data.x_true[t]) + "\n";
  }
  const fs::path csv_path = dir / "dataset.csv";
  write_file_atomic(csv_path, csv);

  json meta;
  meta["alpha"] = data.params_true.alpha;
  meta["phi"] = data.params_true.phi;
  meta["sigma2"] = data.params_true.sigma2;
  meta["T"] = data.horizon;
  meta["seed"] = data.seed;
  meta["label"] = std::string(to_string(data.label));
  write_json(meta_path_for(csv_path), meta);
  return csv_path;
}

Dataset read_dataset(const fs::path& csv_path) {
  const auto rows = csv_body(csv_path, "t,y,x_true");
  const fs::path mpath = meta_path_for(csv_path);
  const json meta = read_json(mpath);

  Dataset d;
  d.horizon = get_field<std::size_t>(meta, "T", mpath);
  d.seed = get_field<std::uint64_t>(meta, "seed", mpath);
  d.params_true = {get_field<double>(meta, "alpha", mpath), get_field<double>(meta, "phi", mpath),
                   get_field<double>(meta, "sigma2", mpath)};
  try {
    d.label = parse_dataset_label(get_field<std::string>(meta, "label", mpath));
  } catch (const DomainError& e) {
    throw IoError(mpath.string() + ": " + e.what());
  }

  if (rows.size() != d.horizon + 1) throw IoError(csv_path.string() + ": row count does not match T");
  d.y.resize(d.horizon);
  d.x_true.resize(d.horizon + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto f = fields(csv_path, rows[r], 3);
    if (parse_int<std::size_t>(f[0]) != r) throw IoError(csv_path.string() + ": rows out of order");
    if (r == 0) {
      if (!f[1].empty()) throw IoError(csv_path.string() + ": row t=0 must have an empty y");
    } else {
      d.y[r - 1] = parse_double(f[1]);
    }
    d.x_true[r] = parse_double(f[2]);
  }
  try {
    d.validate();
  } catch (const DomainError& e) {
    throw IoError(csv_path.string() + ": " + e.what());
  }
  return d;
}

std::vector<TraceRow> trace_rows(const RunTrace& trace, const Dataset& data) {
  std::vector<TraceRow> rows;
  rows.reserve(trace.entries.size());
  for (const auto& e : trace.entries) {
    rows.push_back({e.t, trace.algo, data.x_true.at(e.t), e.x_mean, e.alpha_mean, e.phi_mean, e.sigma2_mean, e.ess,
                    e.rmse_cum, e.resampled});
  }
  return rows;
}

void write_trace(const fs::path& csv_path, const RunTrace& trace, const Dataset& data, const TraceMeta& meta) {
  std::string csv = "t,algo,x_true,x_mean,alpha_mean,phi_mean,sigma2_mean,ess,rmse_cum,resampled\n";
  for (const auto& r : trace_rows(trace, data)) {
    csv += std::to_string(r.t) + "," + r.algo + "," + format_double(r.x_true) + "," + format_double(r.x_mean) + "," +
           format_double(r.alpha_mean) + "," + format_double(r.phi_mean) + "," + format_double(r.sigma2_mean) + "," +
           format_double(r.ess) + "," + format_double(r.rmse_cum) + "," + (r.resampled ? "1" : "0") + "\n";
  }
  write_file_atomic(csv_path, csv);

  json j;
  j["algo"] = trace.algo;
  j["particles"] = trace.n_particles;
  j["start_index"] = trace.start_index;
  j["steps"] = trace.entries.size();
  j["aborted"] = trace.aborted;
  j["abort_reason"] = trace.abort_reason;
  j["degenerate"] = trace.collapse_step.has_value();
  j["collapse_step"] = trace.collapse_step ? json(*trace.collapse_step) : json(nullptr);
  j["run"] = meta.run;
  j["seed"] = meta.seed;
  j["dataset_seed"] = meta.dataset_seed;
  j["dataset_label"] = meta.dataset_label;
  j["kappa_frac"] = meta.kappa_frac;
  j["shrinkage_a"] = meta.shrinkage_a;
  write_json(meta_path_for(csv_path), j);
}

std::vector<TraceRow> read_trace(const fs::path& csv_path) {
  std::vector<TraceRow> out;
  for (const auto& line : csv_body(csv_path, "t,algo,x_true,x_mean,alpha_mean,phi_mean,sigma2_mean,ess,rmse_cum,resampled")) {
    const auto f = fields(csv_path, line, 10);
    out.push_back({parse_int<std::size_t>(f[0]), std::string(f[1]), parse_double(f[2]), parse_double(f[3]),
                   parse_double(f[4]), parse_double(f[5]), parse_double(f[6]), parse_double(f[7]), parse_double(f[8]),
                   parse_bool(f[9])});
  }
  return out;
}

void write_init(const fs::path& csv_path, const InitSample& init) {
  std::string csv = "i,x_n,alpha,psi,lambda\n";
  for (std::size_t i = 0; i < init.size(); ++i) {
    const auto& th = init.theta[i];
    csv += std::to_string(i) + "," + format_double(init.x_n[i]) + "," + format_double(th.alpha) + "," +
           format_double(th.psi) + "," + format_double(th.lambda) + "\n";
  }
  write_file_atomic(csv_path, csv);

  json j;
  j["n"] = init.n;
  j["particles"] = init.size();
  j["seeds"] = init.seeds;
  j["iterations"] = init.iterations;
  j["burn_in"] = init.burn_in;
  j["thin"] = init.thin;
  j["phi_acceptance"] = init.phi_acceptance;
  j["x_acceptance"] = init.x_acceptance;
  j["mapping"] =
      "centred chain (beta2, phi, sigma2, x^c) exported as alpha = (1 - phi) * log(beta2), "
      "x_n = x^c_n + log(beta2), psi = log((1 + phi) / (1 - phi)), lambda = log(sigma2)";
  write_json(meta_path_for(csv_path), j);
}

InitSample read_init(const fs::path& csv_path) {
  const auto rows = csv_body(csv_path, "i,x_n,alpha,psi,lambda");
  const fs::path mpath = meta_path_for(csv_path);
  const json meta = read_json(mpath);

  InitSample s;
  s.n = get_field<std::size_t>(meta, "n", mpath);
  s.seeds = get_field<std::vector<std::uint64_t>>(meta, "seeds", mpath);
  s.iterations = get_field<std::size_t>(meta, "iterations", mpath);
  s.burn_in = get_field<std::size_t>(meta, "burn_in", mpath);
  s.thin = get_field<std::size_t>(meta, "thin", mpath);
  s.phi_acceptance = get_field<double>(meta, "phi_acceptance", mpath);
  s.x_acceptance = get_field<double>(meta, "x_acceptance", mpath);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto f = fields(csv_path, rows[r], 5);
    if (parse_int<std::size_t>(f[0]) != r) throw IoError(csv_path.string() + ": rows out of order");
    s.x_n.push_back(parse_double(f[1]));
    s.theta.push_back({parse_double(f[2]), parse_double(f[3]), parse_double(f[4])});
  }
  return s;
}

SummaryRow summary_row(const RunSummary& run, const SVParams& truth) {
  auto sq = [](double v) { return v * v; };
  SummaryRow row;
  row.algo = run.algo;
  row.run = run.run;
  row.final_rmse = run.final_rmse;
  row.degenerate = run.degenerate;
  if (run.degenerate) {
    row.mse_alpha = row.mse_phi = row.mse_sigma2 = std::numeric_limits<double>::quiet_NaN();
  } else {
    row.mse_alpha = sq(run.estimate.alpha - truth.alpha);
    row.mse_phi = sq(run.estimate.phi - truth.phi);
    row.mse_sigma2 = sq(run.estimate.sigma2 - truth.sigma2);
  }
  return row;
}

void write_summary(const fs::path& csv_path, std::span<const SummaryRow> rows) {
  std::string csv = "algo,run,mse_alpha,mse_phi,mse_sigma2,final_rmse,degenerate\n";
  for (const auto& r : rows) {
    csv += r.algo + "," + std::to_string(r.run) + "," + format_double(r.mse_alpha) + "," + format_double(r.mse_phi) +
           "," + format_double(r.mse_sigma2) + "," + format_double(r.final_rmse) + "," + (r.degenerate ? "1" : "0") +
           "\n";
  }
  write_file_atomic(csv_path, csv);
}

std::vector<SummaryRow> read_summary(const fs::path& csv_path) {
  std::vector<SummaryRow> out;
  for (const auto& line : csv_body(csv_path, "algo,run,mse_alpha,mse_phi,mse_sigma2,final_rmse,degenerate")) {
    const auto f = fields(csv_path, line, 7);
    out.push_back({std::string(f[0]), parse_int<std::size_t>(f[1]), parse_double(f[2]), parse_double(f[3]),
                   parse_double(f[4]), parse_double(f[5]), parse_bool(f[6])});
  }
  return out;
}

void write_envelope(const fs::path& csv_path, std::span<const EnvelopeRow> rows) {
  std::string csv = "t,metric,mean,min,max,count\n";
  for (const auto& r : rows) {
    csv += std::to_string(r.t) + "," + r.metric + "," + format_double(r.mean) + "," + format_double(r.min) + "," +
           format_double(r.max) + "," + std::to_string(r.count) + "\n";
  }
  write_file_atomic(csv_path, csv);
}

std::vector<EnvelopeRow> read_envelope(const fs::path& csv_path) {
  std::vector<EnvelopeRow> out;
  for (const auto& line : csv_body(csv_path, "t,metric,mean,min,max,count")) {
    const auto f = fields(csv_path, line, 6);
    out.push_back({parse_int<std::size_t>(f[0]), std::string(f[1]), parse_double(f[2]), parse_double(f[3]),
                   parse_double(f[4]), parse_int<std::size_t>(f[5])});
  }
  return out;
}

}  // namespace regpf
