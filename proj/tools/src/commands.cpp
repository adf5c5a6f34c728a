#include "kdpc/cli/commands.hpp"

#include "kdpc/controller.hpp"
#include "kdpc/errors.hpp"
#include "kdpc/hankel.hpp"
#include "kdpc/plants.hpp"
#include "kdpc/predictor.hpp"
#include "kdpc/trajectory.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>

namespace kdpc::cli {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

const std::string& need(const std::string& path, const char* what) {
  if (path.empty()) throw ArgumentError(std::string("missing ") + what + " path (--" + what + " or io." + what + ")");
  return path;
}

Scaling scaling_for(const ExperimentConfig& config, const TrajectoryData& data) {
  Scaling s = Scaling::identity(data.n_u(), data.n_y());
  if (config.problem.normalize == Normalization::ZScore) s.y = ChannelScaling::zscore(data.y());
  return s;
}

TrajectoryData load_data(const ExperimentConfig& config, const RunPaths& paths) {
  TrajectoryData data = read_trajectory_csv(need(paths.data, "data"), config.plant.model.dt);
  if (data.n_u() != config.plant.model.input_dim() || data.n_y() != config.plant.model.output_dim()) {
    throw ArgumentError("data channels do not match the configured plant");
  }
  return data;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void print_kv(std::ostream& out, const char* key, double value) {
  out << key << ": " << format_double(value) << '\n';
}

}  // namespace

int cmd_gen_data(const ExperimentConfig& config, const RunPaths& paths, std::ostream& out) {
  const std::string& path = need(paths.out, "out");
  const TrajectoryData data = generate(config.plant.model, config.plant.initial_state(),
                                       config.plant.excitation, config.plant.output_noise,
                                       config.io.seed);
  write_trajectory_csv(path, data);
  out << "wrote " << path << ": T=" << data.length() << " n_u=" << data.n_u()
      << " n_y=" << data.n_y() << " dt=" << format_double(data.dt()) << '\n';
  return kOk;
}

int cmd_predict(const ExperimentConfig& config, const RunPaths& paths, std::ostream& out) {
  const auto t0 = Clock::now();
  const TrajectoryData raw = load_data(config, paths);
  const Scaling sc = scaling_for(config, raw);
  const CsvTable query = read_csv_table(need(paths.query, "query"));
  const Eigen::Index t_m = config.problem.t_m, t_p = config.problem.t_p;
  if (query.n_u != raw.n_u() || query.n_y != raw.n_y()) {
    throw ArgumentError("query channels do not match the data");
  }
  if (query.u.cols() != t_m + t_p) {
    throw ArgumentError("query needs T_m + T_p = " + std::to_string(t_m + t_p) + " rows, got " +
                        std::to_string(query.u.cols()));
  }
  if (!query.u.allFinite() || !query.y.leftCols(t_m).allFinite()) {
    throw ArgumentError("query needs all inputs and the first T_m outputs");
  }
  const Mat y_truth = query.y.rightCols(t_p);
  const bool has_truth = y_truth.allFinite();

  auto gram = std::make_shared<const GramProblem>(build_gram(
      sc.normalize(raw), t_m + t_p, config.kernel.k_u, config.kernel.k_y, config.noise));
  const PredictionProblem problem(gram, sc.u.normalize(Mat(query.u.leftCols(t_m))),
                                  sc.y.normalize(Mat(query.y.leftCols(t_m))),
                                  sc.u.normalize(Mat(query.u.rightCols(t_p))));
  const PredictionResult result = predict(problem, config.solver_settings());
  const Mat y_pred = sc.y.denormalize(result.y_pred);

  {
    std::ofstream csv = open_out(need(paths.out, "out"));
    csv << 't';
    for (Eigen::Index i = 1; i <= raw.n_y(); ++i) csv << ",y_pred" << i;
    if (has_truth) {
      for (Eigen::Index i = 1; i <= raw.n_y(); ++i) csv << ",y_true" << i;
    }
    csv << '\n';
    for (Eigen::Index k = 0; k < t_p; ++k) {
      csv << format_double(query.t(t_m + k));
      for (Eigen::Index i = 0; i < raw.n_y(); ++i) csv << ',' << format_double(y_pred(i, k));
      if (has_truth) {
        for (Eigen::Index i = 0; i < raw.n_y(); ++i) csv << ',' << format_double(y_truth(i, k));
      }
      csv << '\n';
    }
    if (!csv) throw IoError("write to '" + paths.out + "' failed");
  }

  print_kv(out, "residual", result.residual);
  print_kv(out, "relative_residual", result.self_kernel > 0.0 ? result.residual / result.self_kernel : 0.0);
  if (has_truth) {
    print_kv(out, "rmse", std::sqrt((y_pred - y_truth).squaredNorm() / static_cast<double>(y_truth.size())));
  }
  out << "iterations: " << result.report.iterations << '\n'
      << "restarts_used: " << result.report.restarts_used << '\n'
      << "converged: " << (result.report.converged ? "yes" : "no") << '\n';
  print_kv(out, "wall_ms", ms_since(t0));
  return kOk;
}

int cmd_control(const ExperimentConfig& config, const RunPaths& paths, std::ostream& out) {
  const auto t0 = Clock::now();
  const TrajectoryData raw = load_data(config, paths);
  const Scaling sc = scaling_for(config, raw);
  const std::string& out_path = need(paths.out, "out");
  const Eigen::Index n_u = raw.n_u(), n_y = raw.n_y();
  const long steps = config.problem.steps;

  auto gram = std::make_shared<const GramProblem>(
      build_gram(sc.normalize(raw), config.problem.t_m + config.problem.t_p, config.kernel.k_u,
                 config.kernel.k_y, config.noise));
  const MpcProblem problem(gram, config.problem.t_m, config.problem.t_p,
                           config.problem.Q.value_or(Mat::Identity(n_y, n_y)),
                           config.problem.R.value_or(Mat::Zero(n_u, n_u)), config.reference(steps),
                           config.problem.u_box, config.problem.y_box, config.mpc_settings());
  const ClosedLoopLog log =
      run_closed_loop(problem, config.plant.model, config.plant.initial_state(), steps, sc);
  write_closed_loop_csv(out_path, log);

  const TrackingSummary s = summarize(log);
  out << "steps: " << log.entries.size() << '\n';
  print_kv(out, "final_quarter_error", s.final_quarter_error);
  print_kv(out, "max_overshoot", s.max_overshoot);
  print_kv(out, "mean_solve_ms", s.mean_solve_ms);
  const auto errs = setpoint_errors(log);
  for (std::size_t i = 0; i < errs.size(); ++i) {
    out << "setpoint_" << i + 1 << "_error: " << format_double(errs[i]) << '\n';
  }
  const long certified = std::count_if(log.entries.begin(), log.entries.end(),
                                       [](const ClosedLoopEntry& e) { return e.certified; });
  out << "certified_steps: " << certified << '\n';
  print_kv(out, "wall_ms", ms_since(t0));
  return kOk;
}

int cmd_check_pe(const ExperimentConfig& config, const RunPaths& paths, std::ostream& out) {
  const TrajectoryData data = load_data(config, paths);
  const Eigen::Index depth = config.problem.t_m + config.problem.t_p;
  const Eigen::Index required = depth * data.n_u();
  const PeRank lin = pe_rank(data, depth, KernelSpec::linear());

  out << "depth: " << depth << '\n'
      << "columns: " << hankel_columns(data, depth) << '\n'
      << "required_rank: " << required << '\n'
      << "linear_rank: " << lin.rank << '\n';
  print_kv(out, "rank_tolerance", lin.tolerance);
  // Singular-value tail around the numerical rank.
  const std::size_t n = lin.singular_values.size();
  const std::size_t lo = static_cast<std::size_t>(std::max<Eigen::Index>(0, lin.rank - 3));
  const std::size_t hi = std::min(n, static_cast<std::size_t>(lin.rank + 3));
  out << "singular_value_tail:";
  for (std::size_t i = lo; i < hi; ++i) {
    out << ' ' << (i + 1) << '=' << format_double(lin.singular_values[i]);
  }
  out << '\n';
  if (!config.kernel.k_u.is_linear()) {
    out << "k_u_rank: " << pe_rank(data, depth, config.kernel.k_u).rank << '\n';
  }
  print_kv(out, "trace_score", pe_trace_score(data, depth, config.kernel.k_u));
  if (lin.rank < required) {
    out << "persistently_exciting: no\n";
    return kPeFailure;
  }
  out << "persistently_exciting: yes\n";
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernelized data-driven prediction and predictive control", "kdpc"};
  app.require_subcommand(1);
  std::string config_path;
  RunPaths flags;
  std::uint64_t seed = 0;

  const auto add_common = [&](CLI::App* sub, bool data, bool query) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    if (data) sub->add_option("--data", flags.data, "Training trajectory CSV");
    if (query) sub->add_option("--query", flags.query, "Query CSV");
    sub->add_option("--out", flags.out, "Output CSV");
    sub->add_option("--seed", seed, "Override io.seed");
  };
  auto* gen = app.add_subcommand("gen-data", "Simulate the configured plant and write a trajectory CSV");
  add_common(gen, false, false);
  auto* pred = app.add_subcommand("predict", "Open-loop output prediction for a query window");
  add_common(pred, true, true);
  auto* ctrl = app.add_subcommand("control", "Closed-loop predictive control run");
  add_common(ctrl, true, false);
  auto* pe = app.add_subcommand("check-pe", "Persistent-excitation diagnostics");
  add_common(pe, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kArgError;
  }

  try {
    ExperimentConfig config = load_config(config_path);
    if (!app.get_subcommands().front()->get_option("--seed")->empty()) config.set_seed(seed);
    RunPaths paths{flags.data.empty() ? config.io.data : flags.data,
                   flags.query.empty() ? config.io.query : flags.query,
                   flags.out.empty() ? config.io.out : flags.out};
    if (gen->parsed()) return cmd_gen_data(config, paths, out);
    if (pred->parsed()) return cmd_predict(config, paths, out);
    if (ctrl->parsed()) return cmd_control(config, paths, out);
    return cmd_check_pe(config, paths, out);
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const ArgumentError& e) {
    err << "argument error: " << e.what() << '\n';
    return kArgError;
  } catch (const InsufficientDataError& e) {
    err << "argument error: " << e.what() << '\n';
    return kArgError;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolverError;
  }
}

}  // namespace kdpc::cli
