#include "wfopt/external_eval.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "wfopt/format.hpp"

namespace wfopt {

namespace fs = std::filesystem;

void EvaluatorBinding::validate() const {
  if (exchange_dir.empty()) throw InvalidArgument("evaluator binding: exchange directory required");
  if (!(poll_interval_s > 0.0)) throw InvalidArgument("evaluator binding: poll interval must be positive");
  if (!(timeout_s > poll_interval_s))
    throw InvalidArgument("evaluator binding: timeout must exceed the poll interval");
}

ExternalEvaluator::ExternalEvaluator(EvaluatorBinding binding, WindRose rose)
    : binding_(std::move(binding)), rose_(std::move(rose)) {
  binding_.validate();
  rose_.validate();
  fs::create_directories(binding_.exchange_dir);
}

double ExternalEvaluator::evaluate_aep(const FarmLayout& layout) {
  std::lock_guard<std::mutex> lock(mutex_);
  const std::uint64_t id = next_id_++;
  const fs::path req = binding_.exchange_dir / ("req_" + std::to_string(id) + ".txt");
  const fs::path tmp = binding_.exchange_dir / ("req_" + std::to_string(id) + ".txt.tmp");
  const fs::path resp = binding_.exchange_dir / ("resp_" + std::to_string(id) + ".txt");

  {
    std::ofstream out(tmp);
    if (!out) throw IoError("external evaluator: cannot write " + tmp.string());
    out << "request " << id << "\n";
    out << "turbines " << layout.positions.size() << "\n";
    for (const auto& [x, y] : layout.positions)
      out << full_precision(x) << " " << full_precision(y) << "\n";
    out << "states " << rose_.states.size() << "\n";
    for (const auto& s : rose_.states)
      out << full_precision(s.direction_deg) << " " << full_precision(s.speed) << " "
          << full_precision(s.frequency) << "\n";
    out << "end\n";
    if (!out) throw IoError("external evaluator: write failed for " + tmp.string());
  }
  fs::rename(tmp, req);  // atomic commit

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(binding_.timeout_s));
  while (!fs::exists(resp)) {
    if (std::chrono::steady_clock::now() >= deadline)
      throw TimeoutError("external evaluator: no response for request " + std::to_string(id) + " within " +
                         full_precision(binding_.timeout_s) + " s");
    std::this_thread::sleep_for(std::chrono::duration<double>(binding_.poll_interval_s));
  }

  std::ifstream in(resp);
  if (!in) throw ProtocolError("external evaluator: cannot open response " + resp.string());
  std::vector<double> powers;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find('#');
    if (pos != std::string::npos) line.erase(pos);
    std::istringstream ss(line);
    double v;
    while (ss >> v) powers.push_back(v);
  }
  if (powers.size() != rose_.states.size())
    throw ProtocolError("external evaluator: response " + resp.string() + " holds " +
                        std::to_string(powers.size()) + " powers, expected " +
                        std::to_string(rose_.states.size()) + " (file retained)");
  for (double p : powers)
    if (!std::isfinite(p))
      throw ProtocolError("external evaluator: non-finite power in " + resp.string() + " (file retained)");
  return aep_from_state_powers(powers, rose_);
}

ExchangeRequest parse_request_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open request file: " + path.string());
  ExchangeRequest req;
  std::string tag;
  if (!(in >> tag >> req.id) || tag != "request")
    throw ProtocolError("request file: missing 'request <id>' header in " + path.string());
  std::size_t n = 0;
  if (!(in >> tag >> n) || tag != "turbines")
    throw ProtocolError("request file: missing 'turbines <n>' in " + path.string());
  for (std::size_t i = 0; i < n; ++i) {
    double x, y;
    if (!(in >> x >> y)) throw ProtocolError("request file: truncated turbine rows in " + path.string());
    req.layout.positions.emplace_back(x, y);
  }
  std::size_t m = 0;
  if (!(in >> tag >> m) || tag != "states")
    throw ProtocolError("request file: missing 'states <m>' in " + path.string());
  for (std::size_t j = 0; j < m; ++j) {
    WindRoseState s;
    if (!(in >> s.direction_deg >> s.speed >> s.frequency))
      throw ProtocolError("request file: truncated state rows in " + path.string());
    req.rose.states.push_back(s);
  }
  if (!(in >> tag) || tag != "end")
    throw ProtocolError("request file: missing 'end' marker in " + path.string());
  return req;
}

void answer_request(const fs::path& request_path, const TurbineSpec& spec, const WakeParams& params) {
  const ExchangeRequest req = parse_request_file(request_path);
  std::vector<double> totals(req.rose.states.size());
  for (std::size_t j = 0; j < req.rose.states.size(); ++j)
    totals[j] =
        farm_power(req.layout, req.rose.states[j].direction_deg, req.rose.states[j].speed, spec, params).total;

  const fs::path dir = request_path.parent_path();
  const fs::path resp = dir / ("resp_" + std::to_string(req.id) + ".txt");
  const fs::path tmp = dir / ("resp_" + std::to_string(req.id) + ".txt.tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("responder: cannot write " + tmp.string());
    for (double p : totals) out << full_precision(p) << "\n";
    if (!out) throw IoError("responder: write failed for " + tmp.string());
  }
  fs::rename(tmp, resp);
}

}  // namespace wfopt
