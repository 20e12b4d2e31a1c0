#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>

#include "wfopt/wake.hpp"

namespace wfopt {

struct EvaluatorBinding {
  std::filesystem::path exchange_dir;
  double poll_interval_s = 0.5;
  double timeout_s = 1800.0;

  void validate() const;  // timeout must exceed the poll interval
};

// Filesystem exchange standing in for an external simulator: the evaluator
// writes req_<id>.txt (atomic rename) with the layout and rose states, polls
// for resp_<id>.txt holding one total power (W) per state, and computes the
// AEP locally. Ids are monotone; calls are serialized.
class ExternalEvaluator {
 public:
  ExternalEvaluator(EvaluatorBinding binding, WindRose rose);

  double evaluate_aep(const FarmLayout& layout);

  std::uint64_t last_id() const { return next_id_ - 1; }

 private:
  EvaluatorBinding binding_;
  WindRose rose_;
  std::uint64_t next_id_ = 1;
  std::mutex mutex_;
};

struct ExchangeRequest {
  std::uint64_t id = 0;
  FarmLayout layout;
  WindRose rose;
};

ExchangeRequest parse_request_file(const std::filesystem::path& path);

// Serve one request with the in-process wake model (atomic response write).
// Backs the `respond` CLI verb and the round-trip tests.
void answer_request(const std::filesystem::path& request_path, const TurbineSpec& spec,
                    const WakeParams& params);

}  // namespace wfopt
