#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "wfopt/benchmarks.hpp"
#include "wfopt/bo.hpp"
#include "wfopt/config.hpp"
#include "wfopt/external_eval.hpp"
#include "wfopt/wake.hpp"

namespace wfopt {

// One wind-farm optimization case: turbine, wake physics, rose, boundary,
// candidate grid, and the layout design space over 2N coordinates
// (x1, y1, ..., xN, yN).
struct WfloCase {
  TurbineSpec spec;
  WakeParams params;
  WindRose rose;
  Boundary boundary;
  GridSpec grid;
  std::size_t n_turbines = 16;

  DesignSpace design_space() const;
  FarmLayout layout_of(const VectorXd& flat_xy) const;
  VectorXd canonical(const VectorXd& flat_xy) const;  // snapped cell centers

  // objective = AEP of the snapped layout, in GWh (keeps epsilon1 on the
  // Table-1 scale)
  BoProblem problem() const;
  BoProblem problem(std::shared_ptr<ExternalEvaluator> evaluator) const;
};

inline constexpr double kWhPerGWh = 1e9;

struct LoadedCase {
  KeyValueConfig raw;
  std::string kind;  // benchmark | wflo
  Method method = Method::SwitchAf;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::filesystem::path output_dir;

  BoProblem problem;
  BoConfig bo;
  DeConfig direct_de;
  GaConfig ga;
  SaConfig sa;

  AckleyConfig ackley;
  std::optional<WfloCase> wflo;

  std::string evaluator_mode;  // in-process | external-exchange
  std::optional<EvaluatorBinding> binding;
  std::shared_ptr<ExternalEvaluator> external;
};

LoadedCase load_case(const std::filesystem::path& config_path);

int run_case(const std::filesystem::path& config_path);
int validate_case(const std::filesystem::path& config_path);

// recompute best-so-far from a trace file and verify its integrity
int replay_trace(const std::filesystem::path& trace_path);

}  // namespace wfopt
