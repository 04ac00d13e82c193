// Command-line front end: generate models, draw samples, run identification,
// sweep benchmarks, recover spike distributions, and run the stability
// verification suite.  All reports are JSON lines (one record per trial plus
// one aggregate), floats at 17 significant digits, RNG state derived only
// from --seed.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <limits>
#include <map>
#include <optional>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "mixident/bootstrap.hpp"
#include "mixident/errors.hpp"
#include "mixident/json_fmt.hpp"
#include "mixident/model.hpp"
#include "mixident/moments.hpp"
#include "mixident/recover.hpp"
#include "mixident/spikes.hpp"
#include "mixident/stability.hpp"

using namespace mixident;

namespace {

constexpr int kExitFailureStage = 2;

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("short write to " + path);
}

std::string read_text(const std::string& path) {
  if (path == "-")
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string fmt_or_null(double x) { return std::isnan(x) ? "null" : fmt_double(x); }

Strategy parse_strategy(const std::string& s) {
  return s == "sequential" ? Strategy::sequential : Strategy::doubling;
}

SearchMode parse_search(const std::string& s) {
  return s == "exhaustive" ? SearchMode::exhaustive : SearchMode::all_separated;
}

struct TrialConfig {
  int k = 0;
  int n = 0;
  double zeta = 0.0;
  double pi_min = 0.0;
  std::uint64_t seed = 0;
  std::string mode = "exact";   // exact | perturbed | empirical
  std::string eps_or_n = "0";   // eps for perturbed, sample count for empirical
  IdentifyOptions options;
};

struct TrialResult {
  TrialConfig cfg;
  bool success = false;
  double distance = std::numeric_limits<double>::quiet_NaN();
  std::string failure_stage;
  std::string failure_detail;
  std::optional<RecoveredModel> rec;
};

TrialResult run_trial(const TrialConfig& cfg, const MomentOracle& oracle,
                      const MixtureModel* truth) {
  TrialResult r;
  r.cfg = cfg;
  auto res = identify(oracle, cfg.n, cfg.k, cfg.zeta, cfg.pi_min, cfg.options);
  if (std::holds_alternative<Failure>(res)) {
    const auto& f = std::get<Failure>(res);
    r.failure_stage = stage_name(f.stage);
    r.failure_detail = f.detail;
    return r;
  }
  r.success = true;
  r.rec = std::move(std::get<RecoveredModel>(res));
  if (truth != nullptr && truth->k == cfg.k)
    r.distance = model_distance(*truth, r.rec->model).distance;
  return r;
}

std::string trial_to_json(const TrialResult& r, int index, bool include_model) {
  std::string out = "{\"trial\":" + std::to_string(index);
  out += ",\"k\":" + std::to_string(r.cfg.k);
  out += ",\"n\":" + std::to_string(r.cfg.n);
  out += ",\"zeta\":" + fmt_double(r.cfg.zeta);
  out += ",\"pi_min\":" + fmt_double(r.cfg.pi_min);
  out += ",\"mode\":\"" + r.cfg.mode + "\"";
  out += ",\"eps_or_N\":" + r.cfg.eps_or_n;
  out += ",\"seed\":" + std::to_string(r.cfg.seed);
  out += ",\"strategy\":\"";
  out += r.cfg.options.strategy == Strategy::sequential ? "sequential" : "doubling";
  out += "\",\"search\":\"";
  out += r.cfg.options.search == SearchMode::exhaustive ? "exhaustive" : "all-separated";
  out += "\",\"success\":";
  out += r.success ? "true" : "false";
  out += ",\"model_distance\":" + fmt_or_null(r.distance);
  if (!r.success) {
    out += ",\"failure_stage\":\"" + json_escape(r.failure_stage) + "\"";
    out += ",\"failure_detail\":\"" + json_escape(r.failure_detail) + "\"";
    return out + "}\n";
  }
  const auto& d = r.rec->diagnostics;
  out += ",\"failure_stage\":null";
  out += ",\"target_bit\":" + std::to_string(r.rec->selection.target_bit);
  out += ",\"candidates_tried\":" + std::to_string(d.candidates_tried);
  out += ",\"selection_score\":" + fmt_double(d.selection_score);
  out += ",\"hankel_lambda2\":" + fmt_double(d.hankel_lambda2);
  out += ",\"hankel_threshold\":" + fmt_double(d.hankel_threshold);
  out += ",\"power_residual\":" + fmt_double(d.power_residual);
  out += ",\"max_row_overshoot\":" + fmt_double(d.max_row_overshoot);
  out += ",\"ms_selection\":" + fmt_double(d.ms_selection);
  out += ",\"ms_bootstrap\":" + fmt_double(d.ms_bootstrap);
  out += ",\"ms_power\":" + fmt_double(d.ms_power);
  out += ",\"ms_recover\":" + fmt_double(d.ms_recover);
  if (include_model) {
    out += ",\"model\":{\"k\":" + std::to_string(r.rec->model.k);
    out += ",\"n\":" + std::to_string(r.rec->model.n);
    out += ",\"pi\":" + fmt_vector(r.rec->model.pi);
    out += ",\"M\":" + fmt_matrix_rows(r.rec->model.M) + "}";
    out += ",\"target_spikes\":{\"support\":" + fmt_vector(r.rec->target_spikes.support);
    out += ",\"weights\":" + fmt_vector(r.rec->target_spikes.weights) + "}";
  }
  return out + "}\n";
}

std::string aggregate_to_json(const std::vector<TrialResult>& results,
                              const std::string& extra = "") {
  std::vector<double> dists, totals;
  std::map<std::string, int> stages;
  for (const auto& r : results) {
    if (!r.success) {
      ++stages[r.failure_stage];
      continue;
    }
    if (!std::isnan(r.distance)) dists.push_back(r.distance);
    const auto& d = r.rec->diagnostics;
    totals.push_back(d.ms_selection + d.ms_bootstrap + d.ms_power + d.ms_recover);
  }
  int successes = 0;
  for (const auto& r : results) successes += r.success ? 1 : 0;
  std::string out = "{\"aggregate\":true,\"trials\":" + std::to_string(results.size());
  out += ",\"successes\":" + std::to_string(successes);
  out += ",\"median_distance\":" + fmt_or_null(quantile(dists, 0.5));
  out += ",\"q90_distance\":" + fmt_or_null(quantile(dists, 0.9));
  out += ",\"median_ms_total\":" + fmt_or_null(quantile(totals, 0.5));
  out += ",\"failure_stages\":{";
  bool first = true;
  for (const auto& [name, count] : stages) {
    if (!first) out += ",";
    first = false;
    out += "\"" + name + "\":" + std::to_string(count);
  }
  out += "}";
  if (!extra.empty()) out += "," + extra;
  return out + "}\n";
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  int k = 2;
  int n = 3;
  double zeta = 0.1;
  double pi_min = 0.05;
  int separated_rows = -1;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  const MixtureModel model = random_model(a.k, a.n, a.zeta, a.pi_min, a.separated_rows, a.seed);
  write_text(a.out, model_to_json(model));
  return 0;
}

// ------------------------------------------------------------------ sample

struct SampleArgs {
  std::string model_path;
  std::uint64_t samples = 0;
  std::uint64_t seed = 1;
  bool binary = false;
  std::string out;
};

int cmd_sample(const SampleArgs& a) {
  const MixtureModel model = load_model(a.model_path);
  const Dataset data = draw_samples(model, a.samples, a.seed);
  if (a.binary)
    save_dataset_binary(data, a.out);
  else
    save_dataset_text(data, a.out);
  return 0;
}

// ---------------------------------------------------------------- identify

struct IdentifyArgs {
  int k = 0;
  int n = 0;  // 0 = take it from the input
  double zeta = 0.0;
  double pi_min = 0.0;
  std::uint64_t seed = 1;
  std::string oracle_mode = "exact";
  double eps = 0.0;
  std::uint64_t samples = 0;
  std::string strategy = "doubling";
  std::string search = "all-separated";
  double threshold_exponent = 10.0;
  std::string model_path;
  std::string dataset_path;
  std::string out;
  std::string dump_bootstrap;
};

int cmd_identify(const IdentifyArgs& a) {
  std::optional<MixtureModel> truth;
  std::optional<MomentOracle> oracle;
  TrialConfig cfg;
  cfg.k = a.k;
  cfg.zeta = a.zeta;
  cfg.pi_min = a.pi_min;
  cfg.seed = a.seed;
  cfg.options.strategy = parse_strategy(a.strategy);
  cfg.options.search = parse_search(a.search);
  cfg.options.threshold_exponent = a.threshold_exponent;

  if (!a.dataset_path.empty()) {
    Dataset data = load_dataset(a.dataset_path);
    cfg.n = a.n > 0 ? a.n : data.n;
    cfg.mode = "empirical";
    cfg.eps_or_n = std::to_string(data.record_count);
    if (!a.model_path.empty()) truth = load_model(a.model_path);
    oracle = MomentOracle::empirical(std::move(data));
  } else if (!a.model_path.empty()) {
    truth = load_model(a.model_path);
    cfg.n = a.n > 0 ? a.n : truth->n;
    cfg.mode = a.oracle_mode;
    if (a.oracle_mode == "exact") {
      oracle = MomentOracle::exact(*truth);
    } else if (a.oracle_mode == "perturbed") {
      if (!(a.eps > 0)) throw std::runtime_error("--oracle perturbed needs --eps > 0");
      cfg.eps_or_n = fmt_double(a.eps);
      oracle = MomentOracle::perturbed(*truth, a.eps, a.seed);
    } else {
      if (a.samples == 0) throw std::runtime_error("--oracle empirical needs --samples");
      cfg.eps_or_n = std::to_string(a.samples);
      oracle = MomentOracle::empirical(draw_samples(*truth, a.samples, a.seed));
    }
  } else {
    throw std::runtime_error("identify needs --model or --dataset");
  }

  const TrialResult r = run_trial(cfg, *oracle, truth ? &*truth : nullptr);
  std::string report = trial_to_json(r, 0, true);
  report += aggregate_to_json({r});
  write_text(a.out, report);
  if (r.success && !a.dump_bootstrap.empty())
    write_text(a.dump_bootstrap, bootstrap_to_json(r.rec->bootstrap));
  return r.success ? 0 : kExitFailureStage;
}

// --------------------------------------------------------------- benchmark

struct BenchmarkArgs {
  int k = 2;
  int n = 3;
  double zeta = 0.1;
  double pi_min = 0.05;
  std::uint64_t seed = 1;
  int trials = 10;
  std::string oracle_mode = "exact";
  std::vector<double> eps_grid;
  std::vector<std::uint64_t> sample_grid;
  std::string strategy = "doubling";
  std::string search = "all-separated";
  double threshold_exponent = 10.0;
  std::string out;
  std::string csv;
};

std::string csv_from_results(const std::vector<TrialResult>& results) {
  std::string csv =
      "k,n,zeta,pi_min,mode,eps_or_N,seed,model_distance,"
      "ms_selection,ms_bootstrap,ms_power,ms_recover,failure_stage\n";
  for (const auto& r : results) {
    csv += std::to_string(r.cfg.k) + "," + std::to_string(r.cfg.n) + ",";
    csv += fmt_double(r.cfg.zeta) + "," + fmt_double(r.cfg.pi_min) + ",";
    csv += r.cfg.mode + "," + r.cfg.eps_or_n + "," + std::to_string(r.cfg.seed) + ",";
    if (r.success) {
      const auto& d = r.rec->diagnostics;
      csv += std::isnan(r.distance) ? "" : fmt_double(r.distance);
      csv += "," + fmt_double(d.ms_selection) + "," + fmt_double(d.ms_bootstrap);
      csv += "," + fmt_double(d.ms_power) + "," + fmt_double(d.ms_recover) + ",";
    } else {
      csv += ",,,,," + r.failure_stage;
    }
    csv += "\n";
  }
  return csv;
}

int cmd_benchmark(const BenchmarkArgs& a) {
  struct Cell {
    std::string eps_or_n;
    double eps = 0.0;
    std::uint64_t samples = 0;
  };
  std::vector<Cell> cells;
  if (a.oracle_mode == "perturbed") {
    if (a.eps_grid.empty()) throw std::runtime_error("--oracle perturbed needs --eps values");
    for (double e : a.eps_grid) cells.push_back({fmt_double(e), e, 0});
  } else if (a.oracle_mode == "empirical") {
    if (a.sample_grid.empty()) throw std::runtime_error("--oracle empirical needs --samples values");
    for (std::uint64_t s : a.sample_grid) cells.push_back({std::to_string(s), 0.0, s});
  } else {
    cells.push_back({"0", 0.0, 0});
  }

  const int total = static_cast<int>(cells.size()) * a.trials;
  std::vector<TrialResult> results(static_cast<std::size_t>(total));
  static std::counting_semaphore<1024> slots(
      std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> tasks;
  tasks.reserve(static_cast<std::size_t>(total));

  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int t = 0; t < a.trials; ++t) {
      const std::size_t slot = c * static_cast<std::size_t>(a.trials) + static_cast<std::size_t>(t);
      tasks.push_back(std::async(std::launch::async, [&, c, t, slot] {
        slots.acquire();
        TrialConfig cfg;
        cfg.k = a.k;
        cfg.n = a.n;
        cfg.zeta = a.zeta;
        cfg.pi_min = a.pi_min;
        cfg.seed = a.seed + static_cast<std::uint64_t>(t);
        cfg.mode = a.oracle_mode;
        cfg.eps_or_n = cells[c].eps_or_n;
        cfg.options.strategy = parse_strategy(a.strategy);
        cfg.options.search = parse_search(a.search);
        cfg.options.threshold_exponent = a.threshold_exponent;
        TrialResult r;
        try {
          const MixtureModel model = random_model(a.k, a.n, a.zeta, a.pi_min, -1, cfg.seed);
          MomentOracle oracle = a.oracle_mode == "perturbed"
              ? MomentOracle::perturbed(model, cells[c].eps, cfg.seed)
              : a.oracle_mode == "empirical"
                  ? MomentOracle::empirical(draw_samples(model, cells[c].samples, cfg.seed))
                  : MomentOracle::exact(model);
          r = run_trial(cfg, oracle, &model);
        } catch (const std::exception& e) {
          // A bad cell must not sink the sweep; record it and move on.
          r.cfg = cfg;
          r.failure_stage = "error";
          r.failure_detail = e.what();
        }
        results[slot] = std::move(r);
        slots.release();
      }));
    }
  }
  for (auto& task : tasks) task.get();

  std::string report;
  for (int i = 0; i < total; ++i)
    report += trial_to_json(results[static_cast<std::size_t>(i)], i, false);

  // Per-cell medians, plus the error-vs-eps slope when the grid supports it.
  std::string cells_json = "\"cells\":[";
  std::vector<std::pair<double, double>> fit;  // (log10 eps, log10 median distance)
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> dists;
    int successes = 0;
    for (int t = 0; t < a.trials; ++t) {
      const auto& r = results[c * static_cast<std::size_t>(a.trials) + static_cast<std::size_t>(t)];
      if (!r.success) continue;
      ++successes;
      if (!std::isnan(r.distance)) dists.push_back(r.distance);
    }
    const double med = quantile(dists, 0.5);
    if (c) cells_json += ",";
    cells_json += "{\"eps_or_N\":" + cells[c].eps_or_n;
    cells_json += ",\"trials\":" + std::to_string(a.trials);
    cells_json += ",\"successes\":" + std::to_string(successes);
    cells_json += ",\"median_distance\":" + fmt_or_null(med) + "}";
    if (a.oracle_mode == "perturbed" && !std::isnan(med) && med > 0)
      fit.emplace_back(std::log10(cells[c].eps), std::log10(med));
  }
  cells_json += "]";
  std::string slope_json = ",\"eps_slope\":null";
  if (fit.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : fit) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = static_cast<double>(fit.size());
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) > 1e-12)
      slope_json = ",\"eps_slope\":" + fmt_double((m * sxy - sx * sy) / denom);
  }
  report += aggregate_to_json(results, cells_json + slope_json);
  write_text(a.out, report);
  if (!a.csv.empty()) write_text(a.csv, csv_from_results(results));
  return 0;
}

// ------------------------------------------------------------------ kspike

struct KspikeArgs {
  std::string moments_path;
  double zeta = 0.0;
  double pi_min = 0.0;
  std::string out;
};

int cmd_kspike(const KspikeArgs& a) {
  const auto doc = nlohmann::json::parse(read_text(a.moments_path));
  if (!doc.is_array() || doc.size() < 3 || doc.size() % 2 == 0)
    throw std::runtime_error("kspike expects a JSON array of 2k+1 moments");
  const int k = (static_cast<int>(doc.size()) - 1) / 2;
  Eigen::MatrixXd hankel(k + 1, k + 1);
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) hankel(i, j) = doc.at(static_cast<std::size_t>(i + j)).get<double>();

  std::string gate_json;
  if (a.zeta > 0 && a.pi_min > 0) {
    const GateResult gate = hankel_gate(hankel, a.pi_min, a.zeta);
    gate_json = ",\"hankel_lambda2\":" + fmt_double(gate.lambda2) +
                ",\"hankel_threshold\":" + fmt_double(gate.threshold);
    if (!gate.pass) {
      write_text(a.out, "{\"success\":false,\"failure_stage\":\"hankel\"" + gate_json + "}\n");
      return kExitFailureStage;
    }
  }
  try {
    const SpikeDistribution spikes = recover_spike_distribution(hankel, k, a.zeta, a.pi_min);
    std::string out = "{\"success\":true,\"k\":" + std::to_string(k);
    out += ",\"support\":" + fmt_vector(spikes.support);
    out += ",\"weights\":" + fmt_vector(spikes.weights);
    out += ",\"moment_residual\":" + fmt_double(moment_residual(spikes, hankel));
    write_text(a.out, out + gate_json + "}\n");
    return 0;
  } catch (const DegenerateHankelError& e) {
    write_text(a.out, "{\"success\":false,\"failure_stage\":\"power\",\"detail\":\"" +
                          json_escape(e.what()) + "\"" + gate_json + "}\n");
  } catch (const ComplexEigenvalueError& e) {
    write_text(a.out, "{\"success\":false,\"failure_stage\":\"power\",\"detail\":\"" +
                          json_escape(e.what()) + "\"" + gate_json + "}\n");
  } catch (const ZeroWeightError& e) {
    write_text(a.out, "{\"success\":false,\"failure_stage\":\"power\",\"detail\":\"" +
                          json_escape(e.what()) + "\"" + gate_json + "}\n");
  }
  return kExitFailureStage;
}

// -------------------------------------------------------- verify-stability

struct VerifyArgs {
  int trials = 1000;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_verify_stability(const VerifyArgs& a) {
  const auto sweeps = run_stability_sweeps(a.trials, a.seed);
  write_text(a.out, sweeps_to_json(sweeps) + "\n");
  for (const auto& s : sweeps)
    if (s.violations > 0) return kExitFailureStage;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-mixture of product distributions: moment-based source identification"};
  app.require_subcommand(1);

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate", "draw a random separated model and write it as JSON");
  gen->add_option("--k", gen_args.k, "components")->required();
  gen->add_option("--n", gen_args.n, "bits")->required();
  gen->add_option("--zeta", gen_args.zeta, "row separation");
  gen->add_option("--pi-min", gen_args.pi_min, "mixing weight floor");
  gen->add_option("--separated-rows", gen_args.separated_rows, "rows forced separated (-1 = all)");
  gen->add_option("--seed", gen_args.seed, "RNG seed");
  gen->add_option("--out", gen_args.out, "output path (default stdout)");

  SampleArgs sample_args;
  auto* smp = app.add_subcommand("sample", "draw records from a model into a dataset file");
  smp->add_option("--model", sample_args.model_path)->required();
  smp->add_option("--samples", sample_args.samples, "record count")->required();
  smp->add_option("--seed", sample_args.seed, "RNG seed");
  smp->add_flag("--binary", sample_args.binary, "write the packed binary format");
  smp->add_option("--out", sample_args.out, "output path")->required();

  IdentifyArgs id_args;
  auto* idc = app.add_subcommand("identify", "recover mixture parameters from moments");
  idc->add_option("--k", id_args.k, "components")->required();
  idc->add_option("--n", id_args.n, "bits to use (default: all of the input)");
  idc->add_option("--zeta", id_args.zeta, "assumed row separation")->required();
  idc->add_option("--pi-min", id_args.pi_min, "assumed mixing weight floor")->required();
  idc->add_option("--seed", id_args.seed, "RNG seed for perturbed/empirical oracles");
  idc->add_option("--oracle", id_args.oracle_mode, "moment source")
      ->check(CLI::IsMember({"exact", "perturbed", "empirical"}));
  idc->add_option("--eps", id_args.eps, "perturbation magnitude");
  idc->add_option("--samples", id_args.samples, "sample count for --oracle empirical");
  idc->add_option("--strategy", id_args.strategy)
      ->check(CLI::IsMember({"sequential", "doubling"}));
  idc->add_option("--search", id_args.search)
      ->check(CLI::IsMember({"exhaustive", "all-separated"}));
  idc->add_option("--threshold-exponent", id_args.threshold_exponent,
                  "c in the family gate pi_min * zeta^(c k^2)");
  idc->add_option("--model", id_args.model_path, "model file (truth and/or oracle source)");
  idc->add_option("--dataset", id_args.dataset_path, "dataset file for an empirical oracle");
  idc->add_option("--out", id_args.out, "report path (default stdout)");
  idc->add_option("--dump-bootstrap", id_args.dump_bootstrap, "write bootstrap state JSON here");

  BenchmarkArgs bench_args;
  auto* ben = app.add_subcommand("benchmark", "sweep identify over a grid of eps or sample sizes");
  ben->add_option("--k", bench_args.k)->required();
  ben->add_option("--n", bench_args.n)->required();
  ben->add_option("--zeta", bench_args.zeta)->required();
  ben->add_option("--pi-min", bench_args.pi_min)->required();
  ben->add_option("--seed", bench_args.seed, "base seed; trial t uses seed + t");
  ben->add_option("--trials", bench_args.trials, "trials per grid cell");
  ben->add_option("--oracle", bench_args.oracle_mode)
      ->check(CLI::IsMember({"exact", "perturbed", "empirical"}));
  ben->add_option("--eps", bench_args.eps_grid, "perturbation grid")->delimiter(',');
  ben->add_option("--samples", bench_args.sample_grid, "sample count grid")->delimiter(',');
  ben->add_option("--strategy", bench_args.strategy)
      ->check(CLI::IsMember({"sequential", "doubling"}));
  ben->add_option("--search", bench_args.search)
      ->check(CLI::IsMember({"exhaustive", "all-separated"}));
  ben->add_option("--threshold-exponent", bench_args.threshold_exponent);
  ben->add_option("--out", bench_args.out, "JSON-lines report path (default stdout)");
  ben->add_option("--csv", bench_args.csv, "also write the flat CSV table here");

  KspikeArgs kspike_args;
  auto* ksp = app.add_subcommand("kspike", "recover a spike distribution from 2k+1 raw moments");
  ksp->add_option("--moments", kspike_args.moments_path, "JSON array of moments; - for stdin")
      ->required();
  ksp->add_option("--zeta", kspike_args.zeta, "run the spectral gate with this separation");
  ksp->add_option("--pi-min", kspike_args.pi_min, "weight floor for the spectral gate");
  ksp->add_option("--out", kspike_args.out, "output path (default stdout)");

  VerifyArgs verify_args;
  auto* ver = app.add_subcommand("verify-stability", "run the Monte-Carlo bound sweeps");
  ver->add_option("--trials", verify_args.trials, "instances per sweep");
  ver->add_option("--seed", verify_args.seed, "RNG seed");
  ver->add_option("--out", verify_args.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_args);
    if (smp->parsed()) return cmd_sample(sample_args);
    if (idc->parsed()) return cmd_identify(id_args);
    if (ben->parsed()) return cmd_benchmark(bench_args);
    if (ksp->parsed()) return cmd_kspike(kspike_args);
    if (ver->parsed()) return cmd_verify_stability(verify_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
