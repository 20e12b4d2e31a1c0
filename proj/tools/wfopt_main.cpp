#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <set>
#include <thread>

#include "wfopt/external_eval.hpp"
#include "wfopt/runner.hpp"

namespace fs = std::filesystem;

namespace {

// Poll an exchange directory and answer requests with the in-process wake
// model; stands in for a simulator wrapper.
int respond_loop(const fs::path& dir, const fs::path& curve_file, double rotor_diameter, double hub_height,
                 double cut_in, double cut_out, double rated_power, double k_y, double k_z,
                 double air_density, const std::string& sigma0_mode, double poll_s, double idle_timeout_s,
                 std::size_t max_requests) {
  wfopt::TurbineSpec spec;
  spec.rotor_diameter = rotor_diameter;
  spec.hub_height = hub_height;
  spec.cut_in = cut_in;
  spec.cut_out = cut_out;
  spec.rated_power = rated_power;
  wfopt::load_curve_file(curve_file, spec.ct_curve, spec.cp_curve);
  spec.validate();

  wfopt::WakeParams params;
  params.k_y = k_y;
  params.k_z = k_z;
  params.air_density = air_density;
  params.sigma0_mode = sigma0_mode == "paper" ? wfopt::Sigma0Mode::PaperFormula : wfopt::Sigma0Mode::BetaFormula;

  fs::create_directories(dir);
  std::set<fs::path> answered;
  std::size_t handled = 0;
  auto last_activity = std::chrono::steady_clock::now();
  while (true) {
    bool any = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("req_", 0) != 0 || name.find(".tmp") != std::string::npos) continue;
      if (answered.count(entry.path())) continue;
      const fs::path resp = dir / ("resp_" + name.substr(4));
      if (fs::exists(resp)) {
        answered.insert(entry.path());
        continue;
      }
      wfopt::answer_request(entry.path(), spec, params);
      answered.insert(entry.path());
      ++handled;
      any = true;
      std::cout << "answered " << name << "\n";
      if (max_requests > 0 && handled >= max_requests) return 0;
    }
    const auto now = std::chrono::steady_clock::now();
    if (any) {
      last_activity = now;
    } else if (idle_timeout_s > 0.0 &&
               std::chrono::duration<double>(now - last_activity).count() > idle_timeout_s) {
      return 0;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(poll_s));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wind-farm layout optimization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string trace_path;

  auto* run = app.add_subcommand("run", "run a case config and write trace/layout/summary artifacts");
  run->add_option("config", config_path, "case config file")->required();

  auto* validate = app.add_subcommand("validate", "parse and validate a case config");
  validate->add_option("config", config_path, "case config file")->required();

  auto* replay = app.add_subcommand("replay", "recompute best-so-far from a trace file and verify it");
  replay->add_option("trace", trace_path, "trace file")->required();

  std::string exchange_dir, curve_file, sigma0_mode = "beta";
  double rotor_diameter = 126.0, hub_height = 90.0, cut_in = 3.0, cut_out = 25.0, rated_power = 5.0e6;
  double k_y = 0.03, k_z = 0.03, air_density = 1.225, poll_s = 0.2, idle_timeout_s = 0.0;
  std::size_t max_requests = 0;
  auto* respond = app.add_subcommand("respond", "answer exchange-directory requests with the built-in wake model");
  respond->add_option("exchange_dir", exchange_dir)->required();
  respond->add_option("--curve-file", curve_file, "turbine ct/cp table")->required();
  respond->add_option("--rotor-diameter", rotor_diameter);
  respond->add_option("--hub-height", hub_height);
  respond->add_option("--cut-in", cut_in);
  respond->add_option("--cut-out", cut_out);
  respond->add_option("--rated-power", rated_power);
  respond->add_option("--k-y", k_y);
  respond->add_option("--k-z", k_z);
  respond->add_option("--air-density", air_density);
  respond->add_option("--sigma0-mode", sigma0_mode)->check(CLI::IsMember({"beta", "paper"}));
  respond->add_option("--poll", poll_s, "poll interval (s)");
  respond->add_option("--idle-timeout", idle_timeout_s, "exit after this long without requests (s); 0 = never");
  respond->add_option("--max-requests", max_requests, "exit after answering this many; 0 = unlimited");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return wfopt::run_case(config_path);
    if (validate->parsed()) return wfopt::validate_case(config_path);
    if (replay->parsed()) return wfopt::replay_trace(trace_path);
    if (respond->parsed())
      return respond_loop(exchange_dir, curve_file, rotor_diameter, hub_height, cut_in, cut_out, rated_power,
                          k_y, k_z, air_density, sigma0_mode, poll_s, idle_timeout_s, max_requests);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
