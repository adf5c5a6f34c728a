#include "kdpc/cli/config.hpp"

#include "kdpc/errors.hpp"
#include "kdpc/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

namespace kdpc::cli {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ArgumentError("config " + where + ": " + what);
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const auto key : keys) ok = ok || key == k;
    if (!ok) fail(where, "unknown key '" + k + "'");
  }
}

double get_double(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

long get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<long>();
}

double opt_double(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? get_double(j.at(key), where + "." + key) : fallback;
}

Vec get_vec(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = get_double(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

Mat get_mat(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = get_vec(j[r], where + "[" + std::to_string(r) + "]");
    if (static_cast<std::size_t>(row.size()) != cols) fail(where, "ragged matrix rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json put_vec(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json put_mat(const Mat& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(put_vec(m.row(r).transpose()));
  return a;
}

// ---- plant ----

PlantSection parse_plant(const json& j) {
  allow_keys(j, "plant", {"kind", "params", "dt", "substeps", "x0", "T", "excitation", "output_noise"});
  PlantSection p;
  const std::string kind = j.value("kind", "pendulum");
  const json params = j.value("params", json::object());
  if (kind == "pendulum") {
    allow_keys(params, "plant.params", {"g", "l", "mu"});
    plant::Pendulum m;
    m.g = opt_double(params, "g", m.g, "plant.params");
    m.l = opt_double(params, "l", m.l, "plant.params");
    m.mu = opt_double(params, "mu", m.mu, "plant.params");
    p.model = {m, 0.04, 10};
  } else if (kind == "motor") {
    allow_keys(params, "plant.params", {"La", "Ra", "km", "J", "B", "tau", "ua"});
    plant::BilinearMotor m;
    m.La = opt_double(params, "La", m.La, "plant.params");
    m.Ra = opt_double(params, "Ra", m.Ra, "plant.params");
    m.km = opt_double(params, "km", m.km, "plant.params");
    m.J = opt_double(params, "J", m.J, "plant.params");
    m.B = opt_double(params, "B", m.B, "plant.params");
    m.tau = opt_double(params, "tau", m.tau, "plant.params");
    m.ua = opt_double(params, "ua", m.ua, "plant.params");
    p.model = {m, 0.01, 10};
  } else if (kind == "lti") {
    allow_keys(params, "plant.params", {"A", "B", "C", "D"});
    for (const char* key : {"A", "B", "C"}) {
      if (!params.contains(key)) fail("plant.params", std::string("lti needs '") + key + "'");
    }
    plant::Lti s{get_mat(params.at("A"), "plant.params.A"), get_mat(params.at("B"), "plant.params.B"),
                 get_mat(params.at("C"), "plant.params.C"), Mat()};
    s.D = params.contains("D") ? get_mat(params.at("D"), "plant.params.D")
                               : Mat::Zero(s.C.rows(), s.B.cols());
    p.model = {std::move(s), 1.0, 1};
  } else {
    fail("plant.kind", "unknown plant '" + kind + "'");
  }
  p.model.dt = opt_double(j, "dt", p.model.dt, "plant");
  if (j.contains("substeps")) p.model.substeps = static_cast<int>(get_int(j.at("substeps"), "plant.substeps"));
  if (j.contains("x0")) p.x0 = get_vec(j.at("x0"), "plant.x0");
  if (j.contains("T")) p.excitation.length = get_int(j.at("T"), "plant.T");
  p.output_noise = opt_double(j, "output_noise", 0.0, "plant");

  const json ex = j.value("excitation", json{{"kind", "uniform"}});
  const std::string ek = ex.value("kind", "uniform");
  if (ek == "uniform") {
    allow_keys(ex, "plant.excitation", {"kind", "lo", "hi"});
    excitation::UniformRandom e;
    e.lo = opt_double(ex, "lo", e.lo, "plant.excitation");
    e.hi = opt_double(ex, "hi", e.hi, "plant.excitation");
    p.excitation.kind = e;
  } else if (ek == "drifting_gaussian") {
    allow_keys(ex, "plant.excitation", {"kind", "mu_start", "mu_end", "sigma"});
    excitation::DriftingGaussian e;
    e.mu_start = opt_double(ex, "mu_start", e.mu_start, "plant.excitation");
    e.mu_end = opt_double(ex, "mu_end", e.mu_end, "plant.excitation");
    e.sigma = opt_double(ex, "sigma", e.sigma, "plant.excitation");
    p.excitation.kind = e;
  } else if (ek == "prbs") {
    allow_keys(ex, "plant.excitation", {"kind", "levels"});
    excitation::Prbs e;
    if (ex.contains("levels")) {
      const Vec l = get_vec(ex.at("levels"), "plant.excitation.levels");
      e.levels.assign(l.data(), l.data() + l.size());
    }
    p.excitation.kind = e;
  } else if (ek == "gaussian") {
    allow_keys(ex, "plant.excitation", {"kind", "sigma"});
    excitation::WhiteGaussian e;
    e.sigma = opt_double(ex, "sigma", e.sigma, "plant.excitation");
    p.excitation.kind = e;
  } else {
    fail("plant.excitation.kind", "unknown excitation '" + ek + "'");
  }
  return p;
}

json dump_plant(const PlantSection& p) {
  json j;
  std::visit(overloaded{
                 [&](const plant::Pendulum& m) {
                   j["kind"] = "pendulum";
                   j["params"] = {{"g", m.g}, {"l", m.l}, {"mu", m.mu}};
                 },
                 [&](const plant::BilinearMotor& m) {
                   j["kind"] = "motor";
                   j["params"] = {{"La", m.La}, {"Ra", m.Ra}, {"km", m.km}, {"J", m.J},
                                  {"B", m.B},   {"tau", m.tau}, {"ua", m.ua}};
                 },
                 [&](const plant::Lti& s) {
                   j["kind"] = "lti";
                   j["params"] = {{"A", put_mat(s.A)}, {"B", put_mat(s.B)}, {"C", put_mat(s.C)},
                                  {"D", put_mat(s.D)}};
                 },
             },
             p.model.kind);
  j["dt"] = p.model.dt;
  j["substeps"] = p.model.substeps;
  if (p.x0) j["x0"] = put_vec(*p.x0);
  j["T"] = p.excitation.length;
  j["output_noise"] = p.output_noise;
  std::visit(overloaded{
                 [&](const excitation::UniformRandom& e) {
                   j["excitation"] = {{"kind", "uniform"}, {"lo", e.lo}, {"hi", e.hi}};
                 },
                 [&](const excitation::DriftingGaussian& e) {
                   j["excitation"] = {{"kind", "drifting_gaussian"},
                                      {"mu_start", e.mu_start},
                                      {"mu_end", e.mu_end},
                                      {"sigma", e.sigma}};
                 },
                 [&](const excitation::Prbs& e) {
                   j["excitation"] = {{"kind", "prbs"}, {"levels", e.levels}};
                 },
                 [&](const excitation::WhiteGaussian& e) {
                   j["excitation"] = {{"kind", "gaussian"}, {"sigma", e.sigma}};
                 },
             },
             p.excitation.kind);
  return j;
}

// ---- kernels ----

KernelSpec parse_kernel(const json& j, const std::string& where) {
  if (j.is_string()) return kernel_preset(j.get<std::string>());
  if (!j.is_array() || j.empty()) fail(where, "expected a preset name or a list of terms");
  std::vector<KernelTerm> terms;
  for (std::size_t t = 0; t < j.size(); ++t) {
    const std::string tw = where + "[" + std::to_string(t) + "]";
    allow_keys(j[t], tw, {"weight", "factors"});
    KernelTerm term;
    term.weight = opt_double(j[t], "weight", 1.0, tw);
    if (!j[t].contains("factors") || !j[t]["factors"].is_array()) fail(tw, "needs a 'factors' list");
    for (const auto& f : j[t]["factors"]) {
      const std::string type = f.value("type", "");
      if (type == "linear") {
        allow_keys(f, tw, {"type"});
        term.factors.emplace_back(factor::Linear{});
      } else if (type == "polynomial") {
        allow_keys(f, tw, {"type", "degree", "offset"});
        factor::Polynomial p;
        if (f.contains("degree")) p.degree = static_cast<int>(get_int(f.at("degree"), tw + ".degree"));
        p.offset = opt_double(f, "offset", p.offset, tw);
        term.factors.emplace_back(p);
      } else if (type == "rbf") {
        allow_keys(f, tw, {"type", "denominator"});
        term.factors.emplace_back(factor::Rbf{opt_double(f, "denominator", 1.0, tw)});
      } else if (type == "exponential") {
        allow_keys(f, tw, {"type"});
        term.factors.emplace_back(factor::Exponential{});
      } else {
        fail(tw, "unknown factor type '" + type + "'");
      }
    }
    terms.push_back(std::move(term));
  }
  return KernelSpec(std::move(terms));
}

json dump_kernel(const KernelSpec& spec) {
  json terms = json::array();
  for (const auto& term : spec.terms()) {
    json factors = json::array();
    for (const auto& f : term.factors) {
      std::visit(overloaded{
                     [&](const factor::Linear&) { factors.push_back({{"type", "linear"}}); },
                     [&](const factor::Polynomial& p) {
                       factors.push_back({{"type", "polynomial"}, {"degree", p.degree}, {"offset", p.offset}});
                     },
                     [&](const factor::Rbf& r) {
                       factors.push_back({{"type", "rbf"}, {"denominator", r.denominator}});
                     },
                     [&](const factor::Exponential&) { factors.push_back({{"type", "exponential"}}); },
                 },
                 f);
    }
    terms.push_back({{"weight", term.weight}, {"factors", factors}});
  }
  return terms;
}

// ---- problem ----

ProblemSection parse_problem(const json& j) {
  allow_keys(j, "problem", {"T_m", "T_p", "T_ini", "N_h", "Q", "R", "y_ref", "y_ref_path", "u_box",
                            "y_box", "steps", "normalize"});
  ProblemSection p;
  if (j.contains("T_m") && j.contains("T_ini")) fail("problem", "give T_m or T_ini, not both");
  if (j.contains("T_p") && j.contains("N_h")) fail("problem", "give T_p or N_h, not both");
  for (const char* key : {"T_m", "T_ini"}) {
    if (j.contains(key)) p.t_m = get_int(j.at(key), std::string("problem.") + key);
  }
  for (const char* key : {"T_p", "N_h"}) {
    if (j.contains(key)) p.t_p = get_int(j.at(key), std::string("problem.") + key);
  }
  if (j.contains("Q")) p.Q = get_mat(j.at("Q"), "problem.Q");
  if (j.contains("R")) p.R = get_mat(j.at("R"), "problem.R");
  if (j.contains("y_ref")) {
    const json& r = j.at("y_ref");
    if (!r.is_array()) fail("problem.y_ref", "expected a list of {value, hold}");
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::string w = "problem.y_ref[" + std::to_string(i) + "]";
      allow_keys(r[i], w, {"value", "hold"});
      Setpoint s;
      if (!r[i].contains("value")) fail(w, "needs 'value'");
      s.value = r[i]["value"].is_number() ? Vec::Constant(1, get_double(r[i]["value"], w))
                                          : get_vec(r[i]["value"], w + ".value");
      if (r[i].contains("hold")) s.hold = get_int(r[i]["hold"], w + ".hold");
      p.y_ref.push_back(std::move(s));
    }
  }
  if (j.contains("y_ref_path")) {
    if (!j["y_ref_path"].is_string()) fail("problem.y_ref_path", "expected a string");
    p.y_ref_path = j["y_ref_path"].get<std::string>();
  }
  const auto box = [&](const char* key) {
    const json& b = j.at(key);
    allow_keys(b, std::string("problem.") + key, {"lower", "upper"});
    if (!b.contains("lower") || !b.contains("upper")) {
      fail(std::string("problem.") + key, "needs 'lower' and 'upper'");
    }
    return std::pair{get_vec(b["lower"], std::string("problem.") + key + ".lower"),
                     get_vec(b["upper"], std::string("problem.") + key + ".upper")};
  };
  if (j.contains("u_box")) {
    auto [lo, hi] = box("u_box");
    p.u_box = InputBox{lo, hi};
  }
  if (j.contains("y_box")) {
    auto [lo, hi] = box("y_box");
    p.y_box = OutputBox{lo, hi};
  }
  if (j.contains("steps")) p.steps = get_int(j.at("steps"), "problem.steps");
  const std::string norm = j.value("normalize", "none");
  if (norm == "none") {
    p.normalize = Normalization::None;
  } else if (norm == "zscore") {
    p.normalize = Normalization::ZScore;
  } else {
    fail("problem.normalize", "expected 'none' or 'zscore'");
  }
  return p;
}

json dump_problem(const ProblemSection& p) {
  json j;
  j["T_m"] = p.t_m;
  j["T_p"] = p.t_p;
  if (p.Q) j["Q"] = put_mat(*p.Q);
  if (p.R) j["R"] = put_mat(*p.R);
  if (!p.y_ref.empty()) {
    json r = json::array();
    for (const auto& s : p.y_ref) r.push_back({{"value", put_vec(s.value)}, {"hold", s.hold}});
    j["y_ref"] = r;
  }
  if (!p.y_ref_path.empty()) j["y_ref_path"] = p.y_ref_path;
  if (p.u_box) j["u_box"] = {{"lower", put_vec(p.u_box->lower)}, {"upper", put_vec(p.u_box->upper)}};
  if (p.y_box) j["y_box"] = {{"lower", put_vec(p.y_box->lower)}, {"upper", put_vec(p.y_box->upper)}};
  j["steps"] = p.steps;
  j["normalize"] = p.normalize == Normalization::ZScore ? "zscore" : "none";
  return j;
}

// ---- solver, noise, io ----

SolverSection parse_solver(const json& j) {
  allow_keys(j, "solver", {"restarts", "max_iters", "grad_tol", "ridge", "window_scan", "penalties",
                           "bilevel_tol", "output_penalty", "lower_level_stage", "lower_level_iters"});
  SolverSection s;
  if (j.contains("restarts")) s.settings.restarts = static_cast<int>(get_int(j["restarts"], "solver.restarts"));
  if (j.contains("max_iters")) s.settings.max_iters = static_cast<int>(get_int(j["max_iters"], "solver.max_iters"));
  s.settings.grad_tol = opt_double(j, "grad_tol", s.settings.grad_tol, "solver");
  s.settings.ridge = opt_double(j, "ridge", s.settings.ridge, "solver");
  if (j.contains("window_scan")) {
    if (!j["window_scan"].is_boolean()) fail("solver.window_scan", "expected a boolean");
    s.settings.window_scan = j["window_scan"].get<bool>();
  }
  if (j.contains("penalties")) {
    const Vec p = get_vec(j["penalties"], "solver.penalties");
    s.penalties.assign(p.data(), p.data() + p.size());
  }
  s.bilevel_tol = opt_double(j, "bilevel_tol", s.bilevel_tol, "solver");
  s.output_penalty = opt_double(j, "output_penalty", s.output_penalty, "solver");
  if (j.contains("lower_level_stage")) {
    if (!j["lower_level_stage"].is_boolean()) fail("solver.lower_level_stage", "expected a boolean");
    s.lower_level_stage = j["lower_level_stage"].get<bool>();
  }
  if (j.contains("lower_level_iters")) {
    s.lower_level_iters = static_cast<int>(get_int(j["lower_level_iters"], "solver.lower_level_iters"));
  }
  return s;
}

json dump_solver(const SolverSection& s) {
  return {{"restarts", s.settings.restarts},
          {"max_iters", s.settings.max_iters},
          {"grad_tol", s.settings.grad_tol},
          {"ridge", s.settings.ridge},
          {"window_scan", s.settings.window_scan},
          {"penalties", s.penalties},
          {"bilevel_tol", s.bilevel_tol},
          {"output_penalty", s.output_penalty},
          {"lower_level_stage", s.lower_level_stage},
          {"lower_level_iters", s.lower_level_iters}};
}

NoiseModel parse_noise(const json& j) {
  const std::string kind = j.value("kind", "none");
  if (kind == "none") {
    allow_keys(j, "noise", {"kind"});
    return NoiseModel::none();
  }
  if (kind == "gaussian") {
    allow_keys(j, "noise", {"kind", "sigma"});
    return NoiseModel::gaussian(opt_double(j, "sigma", 0.0, "noise"));
  }
  if (kind == "empirical") {
    allow_keys(j, "noise", {"kind", "samples"});
    if (!j.contains("samples") || !j["samples"].is_array()) fail("noise", "empirical needs 'samples'");
    std::vector<std::vector<double>> samples;
    for (std::size_t i = 0; i < j["samples"].size(); ++i) {
      const Vec s = get_vec(j["samples"][i], "noise.samples[" + std::to_string(i) + "]");
      samples.emplace_back(s.data(), s.data() + s.size());
    }
    return NoiseModel::empirical(std::move(samples));
  }
  fail("noise.kind", "unknown noise model '" + kind + "'");
}

json dump_noise(const NoiseModel& n) {
  return std::visit(overloaded{
                        [](const noise::None&) { return json{{"kind", "none"}}; },
                        [](const noise::Gaussian& g) { return json{{"kind", "gaussian"}, {"sigma", g.sigma}}; },
                        [](const noise::Empirical& e) { return json{{"kind", "empirical"}, {"samples", e.samples}}; },
                    },
                    n.kind());
}

IoSection parse_io(const json& j) {
  allow_keys(j, "io", {"data", "query", "out", "seed"});
  IoSection io;
  for (const auto& [key, field] : {std::pair{"data", &io.data}, std::pair{"query", &io.query},
                                   std::pair{"out", &io.out}}) {
    if (j.contains(key)) {
      if (!j[key].is_string()) fail(std::string("io.") + key, "expected a string");
      *field = j[key].get<std::string>();
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long>() >= 0)) {
      fail("io.seed", "expected a non-negative integer");
    }
    io.seed = j["seed"].get<std::uint64_t>();
  }
  return io;
}

}  // namespace

KernelSpec kernel_preset(const std::string& name) {
  if (name == "linear") return KernelSpec::linear();
  if (name == "pendulum_input") return experiment::pendulum_input_kernel();
  if (name == "pendulum_output") return experiment::pendulum_output_kernel();
  if (name == "motor") return experiment::motor_kernel();
  throw ArgumentError("config kernel: unknown preset '" + name + "'");
}

void ExperimentConfig::set_seed(std::uint64_t seed) {
  io.seed = seed;
  plant.excitation.seed = seed;
  solver.settings.seed = seed;
}

SolverSettings ExperimentConfig::solver_settings() const {
  SolverSettings s = solver.settings;
  s.seed = io.seed;
  return s;
}

MpcSettings ExperimentConfig::mpc_settings() const {
  MpcSettings s;
  s.penalties = solver.penalties;
  s.inner = solver_settings();
  s.bilevel_tol = solver.bilevel_tol;
  s.output_penalty = solver.output_penalty;
  s.lower_level_stage = solver.lower_level_stage;
  s.lower_level_iters = solver.lower_level_iters;
  return s;
}

void ExperimentConfig::validate() const {
  plant.model.validate();
  plant.excitation.validate();
  const Eigen::Index n_u = plant.model.input_dim(), n_y = plant.model.output_dim();
  if (plant.x0 && plant.x0->size() != plant.model.state_dim()) {
    throw ArgumentError("config plant.x0: expected " + std::to_string(plant.model.state_dim()) + " entries");
  }
  if (plant.output_noise < 0.0) throw ArgumentError("config plant.output_noise must be >= 0");
  if (problem.t_m < 1 || problem.t_p < 1) throw ArgumentError("config problem: T_m and T_p must be >= 1");
  if (problem.Q && (problem.Q->rows() != n_y || problem.Q->cols() != n_y)) {
    throw ArgumentError("config problem.Q must be n_y x n_y");
  }
  if (problem.R && (problem.R->rows() != n_u || problem.R->cols() != n_u)) {
    throw ArgumentError("config problem.R must be n_u x n_u");
  }
  for (const auto& s : problem.y_ref) {
    if (s.value.size() != n_y || s.hold < 1) {
      throw ArgumentError("config problem.y_ref: values must have n_y entries and hold >= 1");
    }
  }
  if (problem.u_box && (problem.u_box->lower.size() != n_u || problem.u_box->upper.size() != n_u)) {
    throw ArgumentError("config problem.u_box must have n_u entries");
  }
  if (problem.y_box && (problem.y_box->lower.size() != n_y || problem.y_box->upper.size() != n_y)) {
    throw ArgumentError("config problem.y_box must have n_y entries");
  }
  if (problem.steps < 0) throw ArgumentError("config problem.steps must be >= 0");
  if (solver.settings.restarts < 1 || solver.settings.max_iters < 1 ||
      !(solver.settings.grad_tol > 0.0) || solver.settings.ridge < 0.0) {
    throw ArgumentError("config solver: restarts, max_iters, grad_tol must be positive, ridge >= 0");
  }
  if (solver.lower_level_iters < 0) throw ArgumentError("config solver: lower_level_iters must be >= 0");
  if (const auto* e = std::get_if<noise::Empirical>(&noise.kind())) {
    for (const auto& s : e->samples) {
      if (static_cast<Eigen::Index>(s.size()) != n_u || n_u != n_y) {
        throw ArgumentError("config noise: empirical samples need n_u == n_y entries");
      }
    }
  }
}

Mat ExperimentConfig::reference(long steps) const {
  const Eigen::Index n_y = plant.model.output_dim();
  if (!problem.y_ref.empty()) {
    long total = 0;
    for (const auto& s : problem.y_ref) total += s.hold;
    const long cols = std::max<long>({steps, total, 1});
    Mat r(n_y, cols);
    long k = 0;
    for (const auto& s : problem.y_ref) {
      for (long h = 0; h < s.hold; ++h) r.col(k++) = s.value;
    }
    for (; k < cols; ++k) r.col(k) = problem.y_ref.back().value;
    return r;
  }
  if (!problem.y_ref_path.empty()) {
    std::ifstream in(problem.y_ref_path);
    if (!in) throw IoError("cannot open '" + problem.y_ref_path + "' for reading");
    std::string line;
    std::getline(in, line);
    std::vector<Vec> rows;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      std::istringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');  // t
      Vec row(n_y);
      for (Eigen::Index i = 0; i < n_y; ++i) {
        if (!std::getline(ss, cell, ',')) throw IoError("reference csv: expected t plus n_y columns");
        try {
          row(i) = std::stod(cell);
        } catch (const std::exception&) {
          throw IoError("reference csv: cannot parse '" + cell + "'");
        }
      }
      rows.push_back(row);
    }
    if (rows.empty()) throw IoError("reference csv '" + problem.y_ref_path + "' has no rows");
    Mat r(n_y, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) r.col(static_cast<Eigen::Index>(k)) = rows[k];
    return r;
  }
  throw ArgumentError("config problem: control needs y_ref or y_ref_path");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("config is not valid JSON: ") + e.what());
  }
  allow_keys(j, "root", {"plant", "kernel", "problem", "solver", "noise", "io"});
  ExperimentConfig c;
  try {
    if (j.contains("plant")) c.plant = parse_plant(j["plant"]);
    if (j.contains("kernel")) {
      allow_keys(j["kernel"], "kernel", {"k_u", "k_y"});
      if (j["kernel"].contains("k_u")) c.kernel.k_u = parse_kernel(j["kernel"]["k_u"], "kernel.k_u");
      if (j["kernel"].contains("k_y")) c.kernel.k_y = parse_kernel(j["kernel"]["k_y"], "kernel.k_y");
    }
    if (j.contains("problem")) c.problem = parse_problem(j["problem"]);
    if (j.contains("solver")) c.solver = parse_solver(j["solver"]);
    if (j.contains("noise")) c.noise = parse_noise(j["noise"]);
    if (j.contains("io")) c.io = parse_io(j["io"]);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  c.set_seed(c.io.seed);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["plant"] = dump_plant(c.plant);
  j["kernel"] = {{"k_u", dump_kernel(c.kernel.k_u)}, {"k_y", dump_kernel(c.kernel.k_y)}};
  j["problem"] = dump_problem(c.problem);
  j["solver"] = dump_solver(c.solver);
  j["noise"] = dump_noise(c.noise);
  json io{{"seed", c.io.seed}};
  if (!c.io.data.empty()) io["data"] = c.io.data;
  if (!c.io.query.empty()) io["query"] = c.io.query;
  if (!c.io.out.empty()) io["out"] = c.io.out;
  j["io"] = io;
  return j.dump(2) + "\n";
}

}  // namespace kdpc::cli
