// Batch front end for the toolkit: reconstruct thermodynamic operators from
// device runs, extremize them, run descent and ascent over the state set,
// solve the quadratic model, and emit time-resolved band data. Outputs are
// plain JSON and CSV in natural units (energies k_BT, entropies k_B, times
// beta*hbar); CSV files carry a units header line. Exit codes: 0 success,
// 2 holdout validation above threshold, 3 device or integration failure.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thermops/basis.hpp"
#include "thermops/devices.hpp"
#include "thermops/doublewell.hpp"
#include "thermops/extremal.hpp"
#include "thermops/linalg.hpp"
#include "thermops/perturbative.hpp"
#include "thermops/serialize.hpp"
#include "thermops/tomography.hpp"
#include "thermops/type2.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace thermops;

namespace {

struct CliOptions {
  std::string config_path;
  unsigned long long seed = 1;
  std::string out_dir = ".";
  std::string device;  // overrides the config's device entry
  std::string label;
  double tol = -1.0;   // command-specific default when negative
  long max_iter = -1;
};

json units_json() {
  return json{{"work", "k_BT"},          {"heat", "k_BT"},
              {"energy_change", "k_BT"}, {"entropy_flow", "k_B"},
              {"entropy", "k_B"},        {"time", "beta*hbar"},
              {"length", "lambda_th"}};
}

std::string sanitize(const std::string& id) {
  std::string s = id;
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return s;
}

json load_config(const CliOptions& cli) {
  json cfg = json::object();
  if (!cli.config_path.empty()) cfg = read_json(cli.config_path);
  if (!cli.device.empty()) cfg["device"] = cli.device;
  if (!cfg.contains("device")) cfg["device"] = "qubit_reset";
  return cfg;
}

// Work distribution across a thread pool; the first exception wins and is
// rethrown on the calling thread. Results are written by index, so the
// schedule cannot change any output value.
void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::clamp<int>(
      static_cast<int>(std::thread::hardware_concurrency()), 1, std::max(n, 1));
  if (n <= 1 || workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mutex;
  std::exception_ptr first;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(mutex);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------------------
// Device construction from config
// ---------------------------------------------------------------------------

QubitResetOptions qubit_options(const json& cfg) {
  QubitResetOptions o;
  if (cfg.contains("qubit_reset")) {
    const json& q = cfg.at("qubit_reset");
    o.tau = q.value("tau", o.tau);
    o.steps = q.value("steps", o.steps);
    o.coupling = q.value("coupling", o.coupling);
    o.frozen_time = q.value("frozen_time", o.frozen_time);
    o.state_stride = q.value("state_stride", o.state_stride);
  }
  return o;
}

DoubleWellConfig doublewell_config(const json& cfg) {
  DoubleWellConfig c;
  if (cfg.contains("doublewell")) {
    const json& d = cfg.at("doublewell");
    c.barrier = d.value("barrier", c.barrier);
    c.separation = d.value("separation", c.separation);
    c.max_tilt = d.value("max_tilt", c.max_tilt);
    c.duration = d.value("duration", c.duration);
    c.dt = d.value("dt", c.dt);
    c.n_keep = d.value("n_keep", c.n_keep);
    c.x_min = d.value("x_min", c.x_min);
    c.x_max = d.value("x_max", c.x_max);
    c.n_points = d.value("n_points", c.n_points);
    c.gamma = d.value("gamma", c.gamma);
    c.subspace_dim = d.value("subspace_dim", c.subspace_dim);
    c.use_projection = d.value("use_projection", c.use_projection);
    c.naive_work = d.value("naive_work", c.naive_work);
    if (d.contains("snapshot_times"))
      c.snapshot_times = d.at("snapshot_times").get<std::vector<double>>();
  }
  return c;
}

std::unique_ptr<Device> make_device(const json& cfg,
                                    unsigned long long seed) {
  const std::string name = cfg.value("device", "qubit_reset");
  if (name == "qubit_reset")
    return std::make_unique<QubitResetDevice>(qubit_options(cfg));
  if (name == "random_channel") {
    const json sub = cfg.value("random_channel", json::object());
    return std::make_unique<RandomChannelDevice>(
        sub.value("dim", 2), sub.value("env_dim", 2), seed);
  }
  if (name == "exact_overwrite") {
    const json sub = cfg.value("exact_overwrite", json::object());
    const int d = sub.value("dim", 2);
    std::mt19937_64 rng(seed);
    Eigen::MatrixXcd x = sub.contains("x")
                             ? matrix_from_json(sub.at("x"), d, d)
                             : sub.value("x_scale", 1.5) * random_hermitian(d, rng);
    DensityMatrix target = sub.contains("target")
                               ? density_from_json(sub.at("target"))
                               : random_density(d, rng);
    return std::make_unique<ExactOverwriteDevice>(std::move(target),
                                                  std::move(x));
  }
  if (name == "doublewell")
    throw Error(
        "the double-well engine runs in batch form; use the tomography or "
        "simulate command with --device doublewell");
  throw Error("unknown device: " + name);
}

std::vector<Label> requested_labels(const json& cfg, const Device& device) {
  if (cfg.contains("labels")) {
    std::vector<Label> labels;
    for (const auto& id : cfg.at("labels")) labels.push_back(Label{id});
    return labels;
  }
  return device.labels();
}

// ---------------------------------------------------------------------------
// Shared file plumbing
// ---------------------------------------------------------------------------

std::string out_path(const CliOptions& cli, const std::string& name) {
  return (fs::path(cli.out_dir) / name).string();
}

std::string operator_file(const Label& label) {
  return "operator_" + sanitize(label.id) + ".json";
}

ThermoOperator load_operator(const CliOptions& cli, const Label& label) {
  return operator_from_json(read_json(out_path(cli, operator_file(label))));
}

struct EnsembleBundle {
  OperatorBasis basis;
  TestEnsemble ensemble;
};

EnsembleBundle load_ensemble(const CliOptions& cli) {
  OperatorBasis basis = basis_from_json(read_json(out_path(cli, "basis.json")));
  TestEnsemble ens =
      ensemble_from_json(read_json(out_path(cli, "ensemble.json")), basis);
  return {std::move(basis), std::move(ens)};
}

Label single_measurement_label(const TestEnsemble& ens) {
  if (ens.measurements.size() != 1)
    throw Error(
        "no --label given and the ensemble does not determine one; pass "
        "--label explicitly");
  return ens.measurements.begin()->first;
}

FrankWolfeOptions descent_options(const json& cfg, const CliOptions& cli) {
  FrankWolfeOptions fw;
  if (cli.max_iter > 0) fw.max_iter = cli.max_iter;
  if (cli.tol >= 0.0) fw.tol = cli.tol;
  fw.line_search = cfg.value("line_search", fw.line_search);
  return fw;
}

// ---------------------------------------------------------------------------
// tomography: ensemble, operator files, holdout validation report
// ---------------------------------------------------------------------------

int cmd_tomography(const json& cfg, const CliOptions& cli) {
  fs::create_directories(cli.out_dir);

  if (cfg.value("device", "") == "doublewell") {
    const DoubleWellConfig dw = doublewell_config(cfg);
    const DoubleWellStudy study = run_default_study(dw);
    write_json(out_path(cli, "basis.json"), basis_to_json(study.basis));
    write_json(out_path(cli, "ensemble.json"),
               ensemble_to_json(study.ensemble, "basis.json"));
    write_json(out_path(cli, operator_file(study.work_op.label)),
               operator_to_json(study.work_op));

    // The re-simulated probes are the holdout set at this scale.
    double worst = 0.0;
    json probes = json::array();
    for (size_t n = 0; n < study.probe_predicted.size(); ++n) {
      worst = std::max(worst, std::abs(study.probe_predicted[n] -
                                       study.probe_simulated[n]));
      probes.push_back(json{{"predicted", study.probe_predicted[n]},
                            {"simulated", study.probe_simulated[n]}});
    }
    const double threshold = cli.tol >= 0.0 ? cli.tol : 1e-6;
    const bool pass = worst <= threshold;
    write_json(out_path(cli, "holdout_report.json"),
               json{{"units", units_json()},
                    {"holdout_count", probes.size()},
                    {"max_abs_error", worst},
                    {"threshold", threshold},
                    {"pass", pass},
                    {"probes", probes}});
    std::printf("doublewell study: %zu probes, max holdout error %.3e (%s)\n",
                probes.size(), worst, pass ? "pass" : "FAIL");
    return pass ? 0 : 2;
  }

  const std::unique_ptr<Device> device = make_device(cfg, cli.seed);
  const OperatorBasis basis = gellmann_basis(device->dim());
  TestEnsemble ens = make_ensemble(basis, default_inputs(basis));
  const std::vector<Label> labels = requested_labels(cfg, *device);
  measure_ensemble(*device, ens, labels);

  write_json(out_path(cli, "basis.json"), basis_to_json(basis));
  write_json(out_path(cli, "ensemble.json"),
             ensemble_to_json(ens, "basis.json"));
  std::vector<ThermoOperator> ops;
  for (const Label& label : labels) {
    ops.push_back(reconstruct_operator(ens, label));
    write_json(out_path(cli, operator_file(label)),
               operator_to_json(ops.back()));
  }

  // Holdout validation: fresh random inputs, device truth vs prediction.
  // Inputs are drawn serially so the report is schedule-independent.
  const int count = cfg.value("holdout_count", 100);
  std::mt19937_64 rng(cli.seed ^ 0xda3e39cb94b95bdbULL);
  std::vector<DensityMatrix> probes;
  probes.reserve(count);
  for (int i = 0; i < count; ++i)
    probes.push_back(random_density(device->dim(), rng));
  std::vector<std::map<Label, double>> measured(count);
  parallel_for(count, [&](int i) {
    const Trajectory traj = device->run(probes[i]);
    for (const Label& label : labels)
      measured[i][label] = traj.scalar(label);
  });

  const double threshold = cli.tol >= 0.0 ? cli.tol : 1e-8;
  double worst = 0.0;
  json per_label = json::object();
  for (size_t l = 0; l < labels.size(); ++l) {
    double label_worst = 0.0;
    for (int i = 0; i < count; ++i)
      label_worst = std::max(label_worst,
                             std::abs(predict(ops[l], probes[i]) -
                                      measured[i].at(labels[l])));
    per_label[labels[l].id] = label_worst;
    worst = std::max(worst, label_worst);
  }
  const bool pass = worst <= threshold;
  write_json(out_path(cli, "holdout_report.json"),
             json{{"units", units_json()},
                  {"holdout_count", count},
                  {"max_abs_error", worst},
                  {"max_abs_error_per_label", per_label},
                  {"threshold", threshold},
                  {"pass", pass}});
  std::printf("%zu operator(s), %d holdouts, max error %.3e (%s)\n",
              ops.size(), count, worst, pass ? "pass" : "FAIL");
  return pass ? 0 : 2;
}

// ---------------------------------------------------------------------------
// extremize: spectral data and extremal input states of an operator file
// ---------------------------------------------------------------------------

int cmd_extremize(const json&, const CliOptions& cli) {
  const Label label = cli.label.empty() ? Label::work() : Label{cli.label};
  const ThermoOperator op = load_operator(cli, label);
  const SpectralResult spec = spectral(op);
  const ExtremalResult lo = extremize(op, Direction::min);
  const ExtremalResult hi = extremize(op, Direction::max);
  write_json(out_path(cli, "extremal_" + sanitize(label.id) + ".json"),
             json{{"units", units_json()},
                  {"label", label.id},
                  {"spectrum", spectral_to_json(spec)},
                  {"min",
                   json{{"value", lo.value},
                        {"degenerate", lo.degenerate},
                        {"state", density_to_json(lo.state)}}},
                  {"max",
                   json{{"value", hi.value},
                        {"degenerate", hi.degenerate},
                        {"state", density_to_json(hi.state)}}}});
  std::printf("%s range: [%.6f, %.6f]\n", label.id.c_str(), lo.value,
              hi.value);
  return 0;
}

// ---------------------------------------------------------------------------
// descend / ascend: conditional-gradient optimization of type-II objectives
// ---------------------------------------------------------------------------

json descent_entry(const std::string& quantity, const std::string& direction,
                   const std::string& method, double value,
                   const DensityMatrix& state) {
  return json{{"quantity", quantity},
              {"direction", direction},
              {"method", method},
              {"value", value},
              {"state", density_to_json(state)}};
}

int cmd_descend_single(const json& cfg, const CliOptions& cli, bool maximize) {
  const EnsembleBundle bundle = load_ensemble(cli);
  const Label label =
      cli.label.empty() ? single_measurement_label(bundle.ensemble)
                        : Label{cli.label};
  const ThermoOperator op = load_operator(cli, label);
  const Type2Objective obj =
      make_objective(bundle.ensemble, op, cfg.value("scale", 1.0));
  const FrankWolfeOptions fw = descent_options(cfg, cli);
  const DensityMatrix start(bundle.basis.identity_element());
  const DescentTrace trace = maximize ? frank_wolfe_max(obj, fw)
                                      : frank_wolfe_min(obj, start, fw);
  const std::string stem =
      (maximize ? "ascent_" : "descent_") + sanitize(label.id);
  write_trace_csv(out_path(cli, stem + "_trace.csv"), trace);
  write_json(out_path(cli, stem + "_state.json"),
             json{{"units", units_json()},
                  {"label", label.id},
                  {"value", trace.iterates.back().f},
                  {"converged", trace.converged},
                  {"iterations", trace.iterates.size()},
                  {"state", density_to_json(trace.final_state)}});
  std::printf("%s %s: f = %.9f after %zu iterations (%s)\n",
              maximize ? "ascent" : "descent", label.id.c_str(),
              trace.iterates.back().f, trace.iterates.size(),
              trace.converged ? "converged" : "iteration cap");
  return 0;
}

// With the four standard labels present, emit the full ideal-input suite:
// spectral extremes of the linear quantities plus descent/ascent optima of
// entropy production, free-energy gain, and entropy change.
int cmd_descend_suite(const json& cfg, const CliOptions& cli) {
  const EnsembleBundle bundle = load_ensemble(cli);
  const TestEnsemble& ens = bundle.ensemble;
  const OperatorBasis& basis = bundle.basis;
  const double scale = cfg.value("scale", 1.0);
  const FrankWolfeOptions fw = descent_options(cfg, cli);
  const DensityMatrix mixed(basis.identity_element());

  json entries = json::array();
  const ThermoOperator op_w = reconstruct_operator(ens, Label::work());
  const ThermoOperator op_q = reconstruct_operator(ens, Label::heat());
  const ThermoOperator op_e = reconstruct_operator(ens, Label::energy_change());
  const ThermoOperator op_phi =
      reconstruct_operator(ens, Label::entropy_flow());

  for (const ThermoOperator* op : {&op_w, &op_q, &op_e}) {
    const ExtremalResult lo = extremize(*op, Direction::min);
    const ExtremalResult hi = extremize(*op, Direction::max);
    entries.push_back(
        descent_entry(op->label.id, "min", "spectral", lo.value, lo.state));
    entries.push_back(
        descent_entry(op->label.id, "max", "spectral", hi.value, hi.state));
  }

  const auto run_min = [&](const Type2Objective& obj, const std::string& name) {
    const DescentTrace tr = frank_wolfe_min(obj, mixed, fw);
    write_trace_csv(out_path(cli, "trace_" + name + ".csv"), tr);
    return tr;
  };
  const auto run_max = [&](const Type2Objective& obj, const std::string& name) {
    const DescentTrace tr = frank_wolfe_max(obj, fw);
    write_trace_csv(out_path(cli, "trace_" + name + ".csv"), tr);
    return tr;
  };

  // Entropy production: f with the entropy-flow operator.
  const Type2Objective obj_ep = make_objective(ens, op_phi, scale);
  const DescentTrace ep_min = run_min(obj_ep, "min_entropy_production");
  const DescentTrace ep_max = run_max(obj_ep, "max_entropy_production");
  entries.push_back(descent_entry("entropy_production", "min", "descent",
                                  ep_min.iterates.back().f,
                                  ep_min.final_state));
  entries.push_back(descent_entry("entropy_production", "max", "ascent",
                                  ep_max.iterates.back().f,
                                  ep_max.final_state));

  // Free-energy gain dF = dE - dS equals minus the objective built on the
  // negated energy-change operator, so min and max swap roles.
  const ThermoOperator op_neg_e = make_operator(
      Label::custom("minus_energy_change"), -op_e.mat, basis);
  const Type2Objective obj_neg_e = make_objective(ens, op_neg_e, scale);
  const DescentTrace df_max = run_min(obj_neg_e, "max_free_energy_gain");
  const DescentTrace df_min = run_max(obj_neg_e, "min_free_energy_gain");
  entries.push_back(descent_entry("free_energy_gain", "max", "descent",
                                  -df_max.iterates.back().f,
                                  df_max.final_state));
  entries.push_back(descent_entry("free_energy_gain", "min", "ascent",
                                  -df_min.iterates.back().f,
                                  df_min.final_state));

  // Entropy change dS: the objective with a zero operator.
  const ThermoOperator op_zero = make_operator(
      Label::custom("zero"),
      Eigen::MatrixXcd::Zero(basis.ambient_dim(), basis.ambient_dim()), basis);
  const Type2Objective obj_ds = make_objective(ens, op_zero, scale);
  const DescentTrace ds_min = run_min(obj_ds, "min_entropy_change");
  entries.push_back(descent_entry("entropy_change", "min", "descent",
                                  ds_min.iterates.back().f,
                                  ds_min.final_state));

  const DensityMatrix& s_min_ep = ep_min.final_state;
  const DensityMatrix& s_max_df = df_max.final_state;
  const DensityMatrix s_max_extract = extremize(op_w, Direction::min).state;
  const json distances =
      json{{"min_ep_vs_max_free_energy_gain",
            trace_distance(s_min_ep, s_max_df)},
           {"min_ep_vs_max_work_extraction",
            trace_distance(s_min_ep, s_max_extract)},
           {"max_free_energy_gain_vs_max_work_extraction",
            trace_distance(s_max_df, s_max_extract)}};

  write_json(out_path(cli, "ideal_states.json"),
             json{{"units", units_json()},
                  {"entries", entries},
                  {"pairwise_trace_distances", distances}});
  std::printf("ideal-state suite: %zu entries written\n", entries.size());
  return 0;
}

int cmd_descend(const json& cfg, const CliOptions& cli) {
  if (!cli.label.empty()) return cmd_descend_single(cfg, cli, false);
  const EnsembleBundle bundle = load_ensemble(cli);
  const auto& m = bundle.ensemble.measurements;
  const bool full_suite =
      m.count(Label::work()) && m.count(Label::heat()) &&
      m.count(Label::energy_change()) && m.count(Label::entropy_flow());
  if (full_suite) return cmd_descend_suite(cfg, cli);
  return cmd_descend_single(cfg, cli, false);
}

// ---------------------------------------------------------------------------
// perturb: quadratic model around a reference state
// ---------------------------------------------------------------------------

int cmd_perturb(const json& cfg, const CliOptions& cli) {
  const EnsembleBundle bundle = load_ensemble(cli);
  const Label label =
      cli.label.empty() ? single_measurement_label(bundle.ensemble)
                        : Label{cli.label};
  const ThermoOperator op = load_operator(cli, label);
  const Type2Objective obj =
      make_objective(bundle.ensemble, op, cfg.value("scale", 1.0));
  const DensityMatrix reference =
      cfg.contains("reference")
          ? density_from_json(cfg.at("reference"))
          : DensityMatrix(bundle.basis.identity_element());
  const QuadraticModel model = build_model(obj, reference);
  const PerturbativeResult res = solve_optimal(model);
  write_json(out_path(cli, "perturb_" + sanitize(label.id) + ".json"),
             json{{"units", units_json()},
                  {"label", label.id},
                  {"model", model_to_json(model)},
                  {"value", res.value},
                  {"regime_exceeded", res.regime_exceeded},
                  {"out_of_model_range", res.out_of_model_range},
                  {"state", density_to_json(res.state)}});
  std::printf("quadratic optimum for %s: value %.9f%s%s\n", label.id.c_str(),
              res.value, res.regime_exceeded ? " (regime exceeded)" : "",
              res.out_of_model_range ? " (component outside model range)" : "");
  return 0;
}

// ---------------------------------------------------------------------------
// simulate: raw trajectories for one or many inputs
// ---------------------------------------------------------------------------

int cmd_simulate(const json& cfg, const CliOptions& cli) {
  fs::create_directories(cli.out_dir);

  if (cfg.value("device", "") == "doublewell") {
    const DoubleWellConfig dw = doublewell_config(cfg);
    DensityMatrix input;
    if (cfg.contains("input")) {
      input = density_from_json(cfg.at("input"));
    } else {
      const int level = cfg.value("input_level", 0);
      if (level < 0 || level >= dw.subspace_dim)
        throw Error("input_level outside the retained subspace");
      Eigen::MatrixXcd m =
          Eigen::MatrixXcd::Zero(dw.subspace_dim, dw.subspace_dim);
      m(level, level) = 1.0;
      input = DensityMatrix(std::move(m));
    }
    const DoubleWellRun run = run_protocol(input, dw);
    write_trajectory_csv(out_path(cli, "trajectory.csv"), run.trajectory);
    if (!run.densities.empty())
      write_density_csv(out_path(cli, "density.csv"), grid_points(dw),
                        run.densities);
    json scalars = json::object();
    for (const auto& [label, value] : run.trajectory.scalars)
      scalars[label.id] = value;
    write_json(out_path(cli, "summary.json"),
               json{{"units", units_json()},
                    {"scalars", scalars},
                    {"truncation_leak", run.leak_total},
                    {"final_reduced", matrix_to_json(run.final_reduced)}});
    std::printf("double-well run: W = %.6f, leak %.3e\n",
                run.trajectory.scalar(Label::work()), run.leak_total);
    return 0;
  }

  const std::unique_ptr<Device> device = make_device(cfg, cli.seed);
  std::vector<DensityMatrix> inputs;
  const int n_random = cfg.value("inputs", 0);
  if (n_random > 0) {
    std::mt19937_64 rng(cli.seed ^ 0x9e3779b97f4a7c15ULL);
    for (int i = 0; i < n_random; ++i)
      inputs.push_back(random_density(device->dim(), rng));
  } else {
    inputs = default_inputs(gellmann_basis(device->dim()));
  }

  std::vector<Trajectory> runs(inputs.size());
  parallel_for(static_cast<int>(inputs.size()),
               [&](int i) { runs[i] = device->run(inputs[i]); });

  json summary = json::array();
  for (size_t i = 0; i < runs.size(); ++i) {
    const std::string name = "trajectory_" + std::to_string(i) + ".csv";
    write_trajectory_csv(out_path(cli, name), runs[i]);
    json scalars = json::object();
    for (const auto& [label, value] : runs[i].scalars)
      scalars[label.id] = value;
    summary.push_back(json{{"index", i},
                           {"file", name},
                           {"input", density_to_json(inputs[i])},
                           {"scalars", scalars},
                           {"final_state",
                            density_to_json(runs[i].final_state())}});
  }
  write_json(out_path(cli, "summary.json"),
             json{{"units", units_json()}, {"runs", summary}});
  std::printf("%zu trajectories written\n", runs.size());
  return 0;
}

// ---------------------------------------------------------------------------
// sweep: time-resolved operator bands and entropy-production band
// ---------------------------------------------------------------------------

void write_band_csv(const std::string& path, const std::string& value_units,
                    const std::vector<std::array<double, 3>>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open for writing: " + path);
  std::fprintf(f, "# units: time beta*hbar, bounds %s\n", value_units.c_str());
  std::fprintf(f, "time,lower,upper\n");
  for (const auto& row : rows)
    std::fprintf(f, "%.12g,%.12g,%.12g\n", row[0], row[1], row[2]);
  std::fclose(f);
}

int cmd_sweep(const json& cfg, const CliOptions& cli) {
  if (cfg.value("device", "qubit_reset") != "qubit_reset")
    throw Error("sweep requires a device with intermediate-time accounting "
                "(qubit_reset)");
  fs::create_directories(cli.out_dir);

  QubitResetOptions opts = qubit_options(cfg);
  // Stored states set the entropy-production sampling grid.
  if (opts.state_stride <= 1)
    opts.state_stride = std::max(1, opts.steps / cfg.value("sweep_points", 200));
  const QubitResetDevice device(opts);
  const OperatorBasis basis = gellmann_basis(2);
  TestEnsemble ens = make_ensemble(basis, default_inputs(basis));

  std::vector<Trajectory> runs(ens.inputs.size());
  parallel_for(static_cast<int>(ens.inputs.size()),
               [&](int i) { runs[i] = device.run(ens.inputs[i]); });
  for (const auto& traj : runs) ens.outputs.push_back(traj.final_state());
  for (const Label& label : device.labels()) {
    auto& column = ens.measurements[label];
    for (const auto& traj : runs) column.push_back(traj.scalar(label));
  }
  write_json(out_path(cli, "basis.json"), basis_to_json(basis));
  write_json(out_path(cli, "ensemble.json"),
             ensemble_to_json(ens, "basis.json"));

  // Work and heat bands at every grid time from the truncated accumulants.
  const int grid = static_cast<int>(runs[0].times.size());
  std::vector<std::array<double, 3>> work_rows(grid), heat_rows(grid);
  parallel_for(grid, [&](int t) {
    TestEnsemble scratch;
    scratch.basis = ens.basis;
    scratch.inputs = ens.inputs;
    scratch.bloch_matrix = ens.bloch_matrix;
    for (const bool is_work : {true, false}) {
      std::vector<double> column;
      for (const auto& traj : runs)
        column.push_back(is_work ? traj.work[t] : traj.heat[t]);
      const Label label = is_work ? Label::work() : Label::heat();
      scratch.measurements[label] = std::move(column);
      const auto [lo, hi] = range(reconstruct_operator(scratch, label));
      (is_work ? work_rows : heat_rows)[t] = {runs[0].times[t], lo, hi};
    }
  });
  write_band_csv(out_path(cli, "sweep_work.csv"), "k_BT", work_rows);
  write_band_csv(out_path(cli, "sweep_heat.csv"), "k_BT", heat_rows);

  // Entropy-production band at the stored-state times: reconstruct the
  // truncated channel and entropy-flow operator, then descend and ascend.
  const FrankWolfeOptions fw = descent_options(cfg, cli);
  const DensityMatrix mixed(basis.identity_element());
  const int stored = static_cast<int>(runs[0].state_indices.size());
  std::vector<std::array<double, 3>> ep_rows(stored);
  parallel_for(stored, [&](int j) {
    const int idx = runs[0].state_indices[j];
    TestEnsemble trunc;
    trunc.basis = ens.basis;
    trunc.inputs = ens.inputs;
    trunc.bloch_matrix = ens.bloch_matrix;
    std::vector<double> column;
    for (const auto& traj : runs) {
      trunc.outputs.push_back(traj.states[j]);
      column.push_back(traj.entropy_flow[idx]);
    }
    trunc.measurements[Label::entropy_flow()] = std::move(column);
    const Type2Objective obj = make_objective(
        trunc, reconstruct_operator(trunc, Label::entropy_flow()));
    const double lo = frank_wolfe_min(obj, mixed, fw).iterates.back().f;
    const double hi = frank_wolfe_max(obj, fw).iterates.back().f;
    ep_rows[j] = {runs[0].times[idx], lo, hi};
  });
  write_band_csv(out_path(cli, "sweep_ep.csv"), "k_B", ep_rows);

  std::printf("bands written: %d grid times, %d entropy-production times\n",
              grid, stored);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "thermodynamic operator toolkit: tomography, extremal inputs, "
      "state-set descent, quadratic models, and band sweeps"};
  app.require_subcommand(1);

  CliOptions cli;
  std::string command;
  const auto add_common = [&](CLI::App* a) {
    a->add_option("--config", cli.config_path, "JSON config file");
    a->add_option("--seed", cli.seed, "random seed (default 1)");
    a->add_option("--out", cli.out_dir,
                  "output directory, also where prerequisite files are read "
                  "(default .)");
    a->add_option("--device", cli.device,
                  "qubit_reset | doublewell | exact_overwrite | "
                  "random_channel (overrides config)");
    a->add_option("--label", cli.label, "operator / objective label");
    a->add_option("--tol", cli.tol,
                  "holdout threshold or descent gap tolerance");
    a->add_option("--max-iter", cli.max_iter, "descent iteration cap");
  };
  for (const char* name :
       {"tomography", "extremize", "descend", "ascend", "perturb", "simulate",
        "sweep"}) {
    CLI::App* sub = app.add_subcommand(
        name, std::string("run the ") + name + " command");
    add_common(sub);
    sub->callback([&command, name] { command = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const json cfg = load_config(cli);
    if (command == "tomography") return cmd_tomography(cfg, cli);
    if (command == "extremize") return cmd_extremize(cfg, cli);
    if (command == "descend") return cmd_descend(cfg, cli);
    if (command == "ascend") return cmd_descend_single(cfg, cli, true);
    if (command == "perturb") return cmd_perturb(cfg, cli);
    if (command == "simulate") return cmd_simulate(cfg, cli);
    if (command == "sweep") return cmd_sweep(cfg, cli);
    std::fprintf(stderr, "error: no command selected\n");
    return 1;
  } catch (const IntegrationFailureError& e) {
    std::fprintf(stderr, "integration failure: %s\n", e.what());
    return 3;
  } catch (const StepperFailureError& e) {
    std::fprintf(stderr, "stepper failure: %s\n", e.what());
    return 3;
  } catch (const BoundaryLeakageError& e) {
    std::fprintf(stderr, "boundary leakage: %s\n", e.what());
    return 3;
  } catch (const NonPhysicalStateError& e) {
    std::fprintf(stderr, "device produced a nonphysical state: %s\n",
                 e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
