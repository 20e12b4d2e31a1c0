#include "wfopt/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wfopt/format.hpp"

namespace wfopt {

namespace fs = std::filesystem;

DesignSpace WfloCase::design_space() const {
  DesignSpace space;
  const double x_lo = grid.origin_x, x_hi = grid.origin_x + grid.nx * grid.cell;
  const double y_lo = grid.origin_y, y_hi = grid.origin_y + grid.ny * grid.cell;
  for (std::size_t i = 0; i < n_turbines; ++i) {
    space.bounds.push_back({x_lo, x_hi});
    space.bounds.push_back({y_lo, y_hi});
  }
  const Boundary b = boundary;
  space.feasible = [b](const VectorXd& x) {
    for (Eigen::Index i = 0; i + 1 < x.size(); i += 2)
      if (!b.contains(x[i], x[i + 1])) return false;
    return true;
  };
  space.violation = [b](const VectorXd& x) {
    double v = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); i += 2) v += b.outside_distance(x[i], x[i + 1]);
    return v;
  };
  return space;
}

FarmLayout WfloCase::layout_of(const VectorXd& flat_xy) const {
  if (static_cast<std::size_t>(flat_xy.size()) != 2 * n_turbines)
    throw DimensionMismatch("wflo case: layout vector length must be 2 * n_turbines");
  return snap_to_grid(flat_xy, grid);
}

VectorXd WfloCase::canonical(const VectorXd& flat_xy) const {
  const FarmLayout layout = layout_of(flat_xy);
  VectorXd out(flat_xy.size());
  for (std::size_t i = 0; i < layout.positions.size(); ++i) {
    out[static_cast<Eigen::Index>(2 * i)] = layout.positions[i].first;
    out[static_cast<Eigen::Index>(2 * i + 1)] = layout.positions[i].second;
  }
  return out;
}

BoProblem WfloCase::problem() const {
  BoProblem p;
  p.space = design_space();
  const WfloCase self = *this;
  p.objective = [self](const VectorXd& x) {
    return aep(self.layout_of(x), self.rose, self.spec, self.params) / kWhPerGWh;
  };
  p.canonicalize = [self](const VectorXd& x) { return self.canonical(x); };
  return p;
}

BoProblem WfloCase::problem(std::shared_ptr<ExternalEvaluator> evaluator) const {
  BoProblem p;
  p.space = design_space();
  const WfloCase self = *this;
  p.objective = [self, evaluator](const VectorXd& x) {
    return evaluator->evaluate_aep(self.layout_of(x)) / kWhPerGWh;
  };
  p.canonicalize = [self](const VectorXd& x) { return self.canonical(x); };
  return p;
}

namespace {

DeConfig de_from_config(const KeyValueConfig& cfg, const std::string& prefix, DeStrategy strategy,
                        double tolerance) {
  DeConfig de;
  de.population_size = cfg.get_size(prefix + ".population", 70);
  de.mutation_low = cfg.get_double(prefix + ".mutation_low", 0.5);
  de.mutation_high = cfg.get_double(prefix + ".mutation_high", 1.2);
  de.recombination = cfg.get_double(prefix + ".recombination", 0.7);
  const std::string strat = cfg.get_string(prefix + ".strategy", strategy == DeStrategy::Best1Bin
                                                                     ? "best1bin"
                                                                     : "best2bin");
  if (strat == "best1bin") {
    de.strategy = DeStrategy::Best1Bin;
  } else if (strat == "best2bin") {
    de.strategy = DeStrategy::Best2Bin;
  } else {
    throw ConfigError("config key '" + prefix + ".strategy': unknown strategy '" + strat + "'");
  }
  de.tolerance = cfg.get_double(prefix + ".tolerance", tolerance);
  de.max_generations = cfg.get_size(prefix + ".max_generations", 300);
  de.oversample_factor = cfg.get_size(prefix + ".oversample_factor", 20);
  return de;
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

}  // namespace

LoadedCase load_case(const fs::path& config_path) {
  LoadedCase c;
  c.raw = KeyValueConfig::parse_file(config_path);
  const fs::path base_dir = config_path.parent_path();

  c.kind = c.raw.get_string("problem");
  if (c.kind != "benchmark" && c.kind != "wflo")
    throw ConfigError("config key 'problem' must be 'benchmark' or 'wflo'");
  c.method = method_from_string(c.raw.get_string("method", "switch-af"));
  c.seed = static_cast<std::uint64_t>(c.raw.get_int("seed", 0));
  c.output_dir = resolve(base_dir, c.raw.get_string("output_dir", "out"));

  if (c.kind == "benchmark") {
    const std::string fn = c.raw.get_string("benchmark.function", "ackley");
    if (fn != "ackley") throw ConfigError("config key 'benchmark.function': only 'ackley' is available");
    c.ackley.dimension = c.raw.get_size("benchmark.dimension", 4);
    c.ackley.a = c.raw.get_double("benchmark.a", 20.0);
    c.ackley.b = c.raw.get_double("benchmark.b", 0.2);
    c.ackley.c = c.raw.get_double("benchmark.c", c.ackley.c);
    c.ackley.bound = c.raw.get_double("benchmark.bound", 32.768);
    c.ackley.validate();
    c.problem = ackley_problem(c.ackley);
    c.bo.penalty.mode = PenaltyMode::Subtractive;
    c.bo.penalty.violation_scale = c.raw.get_double("penalty.scale", 1.0);
  } else {
    WfloCase w;
    w.n_turbines = c.raw.get_size("wflo.n_turbines", 16);
    if (w.n_turbines == 0) throw ConfigError("config key 'wflo.n_turbines' must be >= 1");
    w.spec.rotor_diameter = c.raw.get_double("wflo.rotor_diameter", 126.0);
    w.spec.hub_height = c.raw.get_double("wflo.hub_height", 90.0);
    w.spec.cut_in = c.raw.get_double("wflo.cut_in", 3.0);
    w.spec.cut_out = c.raw.get_double("wflo.cut_out", 25.0);
    w.spec.rated_power = c.raw.get_double("wflo.rated_power", 5.0e6);
    load_curve_file(resolve(base_dir, c.raw.get_string("wflo.curve_file")), w.spec.ct_curve, w.spec.cp_curve);
    w.spec.validate();

    w.params.k_y = c.raw.get_double("wflo.k_y", 0.03);
    w.params.k_z = c.raw.get_double("wflo.k_z", 0.03);
    w.params.air_density = c.raw.get_double("wflo.air_density", 1.225);
    const std::string mode = c.raw.get_string("wflo.sigma0_mode", "beta");
    if (mode == "beta") {
      w.params.sigma0_mode = Sigma0Mode::BetaFormula;
    } else if (mode == "paper") {
      w.params.sigma0_mode = Sigma0Mode::PaperFormula;
    } else {
      throw ConfigError("config key 'wflo.sigma0_mode' must be 'beta' or 'paper'");
    }

    w.rose = load_rose_file(resolve(base_dir, c.raw.get_string("wflo.rose_file")));
    w.boundary = load_boundary_file(resolve(base_dir, c.raw.get_string("wflo.boundary_file")));
    const double cell = c.raw.get_double("wflo.cell_size_d", 1.0) * w.spec.rotor_diameter;
    w.grid = GridSpec::over(w.boundary, cell);
    if (w.grid.feasible_count() < w.n_turbines)
      throw ConfigError("wflo case: fewer feasible grid cells than turbines");
    c.wflo = std::move(w);

    c.evaluator_mode = c.raw.get_string("evaluator.mode", "in-process");
    if (c.evaluator_mode == "in-process") {
      c.problem = c.wflo->problem();
    } else if (c.evaluator_mode == "external-exchange") {
      EvaluatorBinding binding;
      binding.exchange_dir = resolve(base_dir, c.raw.get_string("evaluator.exchange_dir"));
      binding.poll_interval_s = c.raw.get_double("evaluator.poll_interval_s", 0.5);
      binding.timeout_s = c.raw.get_double("evaluator.timeout_s", 1800.0);
      binding.validate();
      c.binding = binding;
      c.external = std::make_shared<ExternalEvaluator>(binding, c.wflo->rose);
      c.problem = c.wflo->problem(c.external);
    } else {
      throw ConfigError("config key 'evaluator.mode' must be 'in-process' or 'external-exchange'");
    }
    c.bo.penalty.mode = PenaltyMode::Multiplicative;
    c.bo.penalty.violation_scale = c.raw.get_double("penalty.scale", c.wflo->spec.rotor_diameter);
  }
  c.bo.penalty.range_estimate = c.raw.get_double("penalty.range_estimate", 0.0);

  c.budget = c.raw.get_size("bo.budget", c.kind == "wflo" ? 1000 : 200);
  c.bo.budget = c.budget;
  c.bo.n_initial = c.raw.get_size("bo.n_initial", c.kind == "wflo" ? 160 : 10);
  c.bo.elite_size = c.raw.get_size("bo.elite_size", 20);
  c.bo.epsilon1 = c.raw.get_double("bo.epsilon1", 0.1);
  c.bo.epsilon2 = c.raw.get_double("bo.epsilon2", 1e-4);
  c.bo.switch_epsilon = c.raw.get_double("bo.switch_epsilon", 0.0);
  c.bo.ystar_count = c.raw.get_size("bo.ystar_count", 10);
  c.bo.oversample_factor = c.raw.get_size("bo.oversample_factor", 20);
  c.bo.seed = c.seed;
  c.bo.optimize_p = c.raw.get_bool("bo.optimize_p", false);
  c.bo.train.initial_starts = static_cast<int>(c.raw.get_int("bo.initial_starts", 5));
  c.bo.train.hyperopt_interval = c.raw.get_size("bo.hyperopt_interval", 10);
  c.bo.train.refit_starts = static_cast<int>(c.raw.get_int("bo.refit_starts", 1));
  c.bo.train.refit_evals = static_cast<int>(c.raw.get_int("bo.refit_evals", 60));
  c.bo.seed_plan.mutate_prob = c.raw.get_double("bo.seed_mutate_prob", 0.3);
  c.bo.seed_plan.mutate_radius = c.raw.get_double("bo.seed_mutate_radius", 0.1);

  c.bo.de_surrogate = de_from_config(c.raw, "de.surrogate", DeStrategy::Best1Bin, 1e-3);
  c.bo.de_mes = de_from_config(c.raw, "de.mes", DeStrategy::Best2Bin, 1e-15);
  if (c.external) {
    c.bo.de_surrogate.parallel_eval = false;
    c.bo.de_mes.parallel_eval = false;
  }

  c.direct_de = de_from_config(c.raw, "de.direct", DeStrategy::Best1Bin, 1e-12);
  c.ga.population = c.raw.get_size("ga.population", 70);
  c.ga.tournament = c.raw.get_size("ga.tournament", 3);
  c.ga.crossover = c.raw.get_double("ga.crossover", 0.9);
  c.ga.mutation_rate = c.raw.get_double("ga.mutation_rate", 0.0);
  c.ga.mutation_scale = c.raw.get_double("ga.mutation_scale", 0.1);
  c.sa.cooling = c.raw.get_double("sa.cooling", 0.995);
  c.sa.step_scale = c.raw.get_double("sa.step_scale", 0.1);
  c.sa.init_probes = c.raw.get_size("sa.init_probes", 10);
  if (c.raw.has("sa.initial_temperature")) {
    c.sa.auto_temperature = false;
    c.sa.initial_temperature = c.raw.get_double("sa.initial_temperature");
  }

  const auto unused = c.raw.unused_keys();
  if (!unused.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unused) msg += " '" + k + "'";
    throw ConfigError(msg);
  }
  return c;
}

namespace {

void write_trace_row(std::ofstream& out, const TraceRow& row) {
  out << row.eval_index << " " << row.phase;
  for (Eigen::Index i = 0; i < row.point.size(); ++i) out << " " << full_precision(row.point[i]);
  out << " " << full_precision(row.raw) << " " << full_precision(row.penalized) << " "
      << full_precision(row.best_so_far) << "\n";
  out.flush();  // interrupted runs stay inspectable
}

void write_layout_file(const fs::path& path, const WfloCase& w, const VectorXd& best_point) {
  const FarmLayout layout = w.layout_of(best_point);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write layout file: " + path.string());
  out << "# turbine_id x_m y_m cell_ix cell_iy\n";
  for (std::size_t i = 0; i < layout.positions.size(); ++i) {
    out << i << " " << full_precision(layout.positions[i].first) << " "
        << full_precision(layout.positions[i].second) << " " << layout.cells[i].first << " "
        << layout.cells[i].second << "\n";
  }
}

}  // namespace

int run_case(const fs::path& config_path) {
  const auto t0 = std::chrono::steady_clock::now();
  LoadedCase c = load_case(config_path);
  fs::create_directories(c.output_dir);

  std::ofstream trace(c.output_dir / "trace.txt");
  if (!trace) throw IoError("cannot write trace file in " + c.output_dir.string());
  trace << "# eval_index phase x... raw_value penalized_value best_so_far\n";

  VectorXd best_point;
  double best_value = 0.0;
  std::size_t evals = 0;
  std::string terminated_by;

  if (c.method == Method::SwitchAf || c.method == Method::MspOnly || c.method == Method::MesOnly) {
    BoConfig bo = c.bo;
    bo.af_mode = c.method == Method::SwitchAf  ? AfMode::Switch
                 : c.method == Method::MspOnly ? AfMode::MspOnly
                                               : AfMode::MesOnly;
    const auto result = run_bo(c.problem, bo, [&](const TraceRow& row) { write_trace_row(trace, row); });
    best_point = result.best_point;
    best_value = result.best_value;
    evals = result.state.evals;
    terminated_by = to_string(result.state.terminated_by);
  } else {
    // direct heuristics drive the penalized objective; every call is traced
    double best_pen = -std::numeric_limits<double>::infinity();
    double best_raw = 0.0;
    std::size_t count = 0;
    const auto traced = [&](const VectorXd& x) {
      const double lam = penalty_lambda(c.problem.space.violation_of(x), c.bo.penalty.violation_scale);
      const VectorXd canon = c.problem.canonical(x);
      const double raw = c.problem.objective(canon);
      const double range = c.bo.penalty.range_estimate > 0.0 ? c.bo.penalty.range_estimate : std::abs(raw) + 1.0;
      const double pen = apply_penalty(raw, lam, c.bo.penalty.mode, range);
      ++count;
      if (pen > best_pen) {
        best_pen = pen;
        best_raw = raw;
        best_point = canon;
      }
      write_trace_row(trace, TraceRow{count, "direct", canon, raw, pen, best_pen});
      return pen;
    };

    if (c.method == Method::DirectDe) {
      DeConfig de = c.direct_de;
      de.seed = c.seed;
      de.max_evals = c.budget;
      de.max_generations = std::max(de.max_generations, c.budget);
      de.parallel_eval = false;
      SeededInitPlan plain;
      de_optimize(traced, c.problem.space, de, plain);
    } else if (c.method == Method::DirectGa) {
      GaConfig ga = c.ga;
      ga.seed = c.seed;
      ga.max_evals = c.budget;
      ga_baseline(traced, c.problem.space, ga);
    } else {
      SaConfig sa = c.sa;
      sa.seed = c.seed;
      sa.max_evals = c.budget;
      sa_baseline(traced, c.problem.space, sa);
    }
    best_value = best_raw;
    evals = count;
    terminated_by = "budget";
  }

  if (c.wflo) write_layout_file(c.output_dir / "layout.txt", *c.wflo, best_point);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    std::ofstream summary(c.output_dir / "summary.txt");
    if (!summary) throw IoError("cannot write summary file in " + c.output_dir.string());
    summary << "method = " << to_string(c.method) << "\n";
    summary << "terminated_by = " << terminated_by << "\n";
    summary << "evals = " << evals << "\n";
    summary << "best_value = " << full_precision(best_value) << "\n";
    summary << "best_point =";
    for (Eigen::Index i = 0; i < best_point.size(); ++i) summary << " " << full_precision(best_point[i]);
    summary << "\n";
    summary << "wall_time_s = " << full_precision(wall) << "\n";
  }

  std::cout << to_string(c.method) << ": best " << full_precision(best_value) << " after " << evals
            << " evaluations (" << terminated_by << ")\n";
  return 0;
}

int validate_case(const fs::path& config_path) {
  const LoadedCase c = load_case(config_path);
  // round-trip check: parse -> serialize -> parse must be lossless
  const KeyValueConfig again = KeyValueConfig::parse_text(c.raw.serialize(), "<round-trip>");
  if (!(again == c.raw)) throw ConfigError("config round-trip mismatch (internal error)");
  std::cout << "ok: " << config_path.string() << " (" << c.kind << ", " << to_string(c.method) << ", budget "
            << c.budget << ")\n";
  return 0;
}

int replay_trace(const fs::path& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw IoError("cannot open trace file: " + trace_path.string());
  std::string line;
  std::size_t expected_index = 0;
  double best = -std::numeric_limits<double>::infinity();
  double final_best = 0.0;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() < 6) throw ProtocolError("trace row too short: '" + line + "'");
    const std::size_t idx = std::stoull(tokens[0]);
    if (idx != ++expected_index)
      throw ProtocolError("trace corrupt: expected eval_index " + std::to_string(expected_index) + ", got " +
                          std::to_string(idx));
    const double pen = std::stod(tokens[tokens.size() - 2]);
    const double recorded_best = std::stod(tokens[tokens.size() - 1]);
    best = std::max(best, pen);
    if (best != recorded_best)
      throw ProtocolError("trace corrupt at eval " + std::to_string(idx) + ": recomputed best " +
                          full_precision(best) + " != recorded " + full_precision(recorded_best));
    final_best = best;
  }
  if (expected_index == 0) throw ProtocolError("trace holds no evaluations: " + trace_path.string());
  std::cout << "replay ok: " << expected_index << " evaluations, best " << full_precision(final_best) << "\n";
  return 0;
}

}  // namespace wfopt
