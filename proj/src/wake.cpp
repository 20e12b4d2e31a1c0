#include "wfopt/wake.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace wfopt {

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<std::string> read_data_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find('#');
    if (pos != std::string::npos) line.erase(pos);
    bool blank = true;
    for (char c : line) blank &= std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!blank) lines.push_back(line);
  }
  return lines;
}
}  // namespace

SpeedCurve::SpeedCurve(std::vector<double> speeds, std::vector<double> values)
    : speeds_(std::move(speeds)), values_(std::move(values)) {
  if (speeds_.size() < 2 || speeds_.size() != values_.size())
    throw InvalidArgument("speed curve needs at least two (speed, value) rows");
  for (std::size_t i = 1; i < speeds_.size(); ++i)
    if (!(speeds_[i] > speeds_[i - 1])) throw InvalidArgument("speed curve speeds must be strictly increasing");
}

double SpeedCurve::operator()(double speed) const {
  if (speeds_.empty()) throw InvalidArgument("speed curve is empty");
  if (speed < speeds_.front() || speed > speeds_.back())
    throw InvalidArgument("speed curve query outside table coverage");
  const auto it = std::upper_bound(speeds_.begin(), speeds_.end(), speed);
  if (it == speeds_.end()) return values_.back();
  const std::size_t hi = static_cast<std::size_t>(it - speeds_.begin());
  if (hi == 0) return values_.front();
  const std::size_t lo = hi - 1;
  const double t = (speed - speeds_[lo]) / (speeds_[hi] - speeds_[lo]);
  return values_[lo] + t * (values_[hi] - values_[lo]);
}

double TurbineSpec::thrust_coeff(double speed) const {
  if (speed < cut_in || speed > cut_out) return 0.0;  // parked rotor
  return ct_curve(speed);
}

void TurbineSpec::validate() const {
  if (!(rotor_diameter > 0.0 && hub_height > 0.0 && rated_power > 0.0))
    throw InvalidArgument("turbine spec: diameter, hub height, rated power must be positive");
  if (!(cut_in >= 0.0 && cut_in < cut_out)) throw InvalidArgument("turbine spec: need 0 <= cut_in < cut_out");
  if (ct_curve.min_speed() > cut_in || ct_curve.max_speed() < cut_out)
    throw InvalidArgument("turbine spec: ct table must cover [cut_in, cut_out]");
  if (cp_curve.min_speed() > cut_in || cp_curve.max_speed() < cut_out)
    throw InvalidArgument("turbine spec: cp table must cover [cut_in, cut_out]");
}

double wake_sigma0(double rotor_diameter, double ct, Sigma0Mode mode) {
  if (mode == Sigma0Mode::PaperFormula) {
    // the momentum-theory substitution collapses to a thrust-independent width
    return 0.5 * std::sqrt(0.5) * rotor_diameter;
  }
  const double root = std::sqrt(std::max(1.0 - ct, 1e-12));
  const double beta = (1.0 + root) / (2.0 * root);
  return 0.2 * std::sqrt(beta) * rotor_diameter;
}

double wake_deficit(const WakeSource& source, double probe_x, double probe_y, const WakeParams& params) {
  const double dx = probe_x - source.x;
  if (!(dx > 0.0)) return 0.0;  // no upstream influence
  if (source.ct <= 0.0) return 0.0;

  // inside one diameter the far-wake expansion is not valid; clamp
  const double dx_eff = std::max(dx, source.rotor_diameter);
  const double sigma_y = source.sigma0 + params.k_y * dx_eff;
  const double sigma_z = source.sigma0 + params.k_z * dx_eff;

  const double radicand = 1.0 - source.ct * source.sigma0 * source.sigma0 / (sigma_y * sigma_z);
  const double c = 1.0 - std::sqrt(std::max(radicand, 0.0));

  const double dy = probe_y - source.y;
  // probe at hub height: the vertical Gaussian factor is exactly 1
  return c * std::exp(-dy * dy / (2.0 * sigma_y * sigma_y));
}

double combine_deficits(const std::vector<double>& deficits) {
  double ss = 0.0;
  for (double d : deficits) {
    if (d < 0.0 || d > 1.0) throw InvalidArgument("combine_deficits: deficits must lie in [0, 1]");
    ss += d * d;
  }
  return std::min(std::sqrt(ss), 1.0);
}

double turbine_power(double speed, const TurbineSpec& spec, double air_density) {
  if (speed < 0.0) throw InvalidArgument("turbine_power: negative speed");
  if (speed < spec.cut_in || speed > spec.cut_out) return 0.0;
  const double area = kPi * spec.rotor_diameter * spec.rotor_diameter / 4.0;
  const double p = 0.5 * air_density * area * speed * speed * speed * spec.cp_curve(speed);
  return std::min(p, spec.rated_power);
}

void WindRose::validate() const {
  if (states.empty()) throw InvalidArgument("wind rose has no states");
  double sum = 0.0;
  for (const auto& s : states) {
    if (s.frequency < 0.0) throw InvalidArgument("wind rose frequencies must be >= 0");
    if (s.speed < 0.0) throw InvalidArgument("wind rose speeds must be >= 0");
    sum += s.frequency;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("wind rose frequencies must sum to 1");
}

Boundary Boundary::polygon(std::vector<std::pair<double, double>> vertices) {
  if (vertices.size() < 3) throw InvalidArgument("boundary polygon needs at least 3 vertices");
  Boundary b;
  b.verts_ = std::move(vertices);
  return b;
}

Boundary Boundary::circle(double cx, double cy, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("boundary circle needs positive radius");
  Boundary b;
  b.is_circle_ = true;
  b.cx_ = cx;
  b.cy_ = cy;
  b.radius_ = radius;
  return b;
}

bool Boundary::contains(double x, double y) const {
  if (is_circle_) {
    const double dx = x - cx_, dy = y - cy_;
    return dx * dx + dy * dy <= radius_ * radius_;
  }
  if (!mask_.empty()) {
    const int ix = static_cast<int>(std::floor((x - mask_origin_x_) / mask_cell_));
    const int iy = static_cast<int>(std::floor((y - mask_origin_y_) / mask_cell_));
    if (ix < 0 || iy < 0 || ix >= mask_nx_ || iy >= mask_ny_) return false;
    return mask_[static_cast<std::size_t>(iy) * mask_nx_ + ix] != 0;
  }
  // even-odd rule, winding irrelevant
  bool inside = false;
  const std::size_t n = verts_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto [xi, yi] = verts_[i];
    const auto [xj, yj] = verts_[j];
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

double Boundary::outside_distance(double x, double y) const {
  if (contains(x, y)) return 0.0;
  if (is_circle_) {
    return std::hypot(x - cx_, y - cy_) - radius_;
  }
  if (!mask_.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < mask_ny_; ++iy)
      for (int ix = 0; ix < mask_nx_; ++ix)
        if (mask_[static_cast<std::size_t>(iy) * mask_nx_ + ix]) {
          const double cx = mask_origin_x_ + (ix + 0.5) * mask_cell_;
          const double cy = mask_origin_y_ + (iy + 0.5) * mask_cell_;
          best = std::min(best, std::hypot(x - cx, y - cy));
        }
    return std::max(best - 0.5 * mask_cell_, 0.0);
  }
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = verts_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto [x1, y1] = verts_[j];
    const auto [x2, y2] = verts_[i];
    const double ex = x2 - x1, ey = y2 - y1;
    const double len2 = ex * ex + ey * ey;
    double t = len2 > 0.0 ? ((x - x1) * ex + (y - y1) * ey) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, std::hypot(x - (x1 + t * ex), y - (y1 + t * ey)));
  }
  return best;
}

Boundary Boundary::mask(double origin_x, double origin_y, double cell, int nx, int ny,
                        std::vector<std::uint8_t> cells) {
  if (!(cell > 0.0) || nx <= 0 || ny <= 0 || cells.size() != static_cast<std::size_t>(nx) * ny)
    throw InvalidArgument("boundary mask: inconsistent dimensions");
  if (std::find(cells.begin(), cells.end(), std::uint8_t{1}) == cells.end())
    throw InvalidArgument("boundary mask: no feasible cells");
  Boundary b;
  b.mask_ = std::move(cells);
  b.mask_origin_x_ = origin_x;
  b.mask_origin_y_ = origin_y;
  b.mask_cell_ = cell;
  b.mask_nx_ = nx;
  b.mask_ny_ = ny;
  return b;
}

void Boundary::bounding_box(double& lo_x, double& lo_y, double& hi_x, double& hi_y) const {
  if (is_circle_) {
    lo_x = cx_ - radius_;
    hi_x = cx_ + radius_;
    lo_y = cy_ - radius_;
    hi_y = cy_ + radius_;
    return;
  }
  if (!mask_.empty()) {
    lo_x = mask_origin_x_;
    lo_y = mask_origin_y_;
    hi_x = mask_origin_x_ + mask_nx_ * mask_cell_;
    hi_y = mask_origin_y_ + mask_ny_ * mask_cell_;
    return;
  }
  lo_x = lo_y = std::numeric_limits<double>::infinity();
  hi_x = hi_y = -std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : verts_) {
    lo_x = std::min(lo_x, x);
    hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y);
    hi_y = std::max(hi_y, y);
  }
}

GridSpec GridSpec::over(const Boundary& boundary, double cell) {
  if (!(cell > 0.0)) throw InvalidArgument("grid cell size must be positive");
  GridSpec g;
  double lo_x, lo_y, hi_x, hi_y;
  boundary.bounding_box(lo_x, lo_y, hi_x, hi_y);
  g.origin_x = lo_x;
  g.origin_y = lo_y;
  g.cell = cell;
  g.nx = std::max(1, static_cast<int>(std::lround((hi_x - lo_x) / cell)));
  g.ny = std::max(1, static_cast<int>(std::lround((hi_y - lo_y) / cell)));
  g.feasible.assign(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny), 0);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const auto [cx, cy] = g.center(ix, iy);
      g.feasible[static_cast<std::size_t>(iy) * g.nx + ix] = boundary.contains(cx, cy) ? 1 : 0;
    }
  return g;
}

bool GridSpec::cell_feasible(int ix, int iy) const {
  if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return false;
  return feasible[static_cast<std::size_t>(iy) * nx + ix] != 0;
}

std::pair<double, double> GridSpec::center(int ix, int iy) const {
  return {origin_x + (ix + 0.5) * cell, origin_y + (iy + 0.5) * cell};
}

std::size_t GridSpec::feasible_count() const {
  return static_cast<std::size_t>(std::count(feasible.begin(), feasible.end(), std::uint8_t{1}));
}

FarmLayout snap_to_grid(const VectorXd& flat_xy, const GridSpec& grid) {
  if (flat_xy.size() % 2 != 0) throw DimensionMismatch("snap_to_grid: layout vector length must be even");
  const std::size_t n = static_cast<std::size_t>(flat_xy.size()) / 2;
  if (n > grid.feasible_count())
    throw CapacityError("snap_to_grid: more turbines than feasible cells");

  std::vector<std::pair<int, int>> feasible_cells;
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix)
      if (grid.cell_feasible(ix, iy)) feasible_cells.emplace_back(ix, iy);

  FarmLayout layout;
  std::set<std::pair<int, int>> occupied;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = flat_xy[static_cast<Eigen::Index>(2 * i)];
    const double y = flat_xy[static_cast<Eigen::Index>(2 * i + 1)];
    double best_d2 = std::numeric_limits<double>::infinity();
    double best_angle = 0.0;
    std::pair<int, int> best{-1, -1};
    for (const auto& c : feasible_cells) {
      if (occupied.count(c)) continue;
      const auto [cx, cy] = grid.center(c.first, c.second);
      const double d2 = (cx - x) * (cx - x) + (cy - y) * (cy - y);
      double angle = std::atan2(cy - y, cx - x);
      if (angle < 0.0) angle += 2.0 * kPi;
      if (d2 < best_d2 - 1e-12 || (std::abs(d2 - best_d2) <= 1e-12 && angle < best_angle)) {
        best_d2 = d2;
        best_angle = angle;
        best = c;
      }
    }
    occupied.insert(best);
    layout.cells.push_back(best);
    layout.positions.push_back(grid.center(best.first, best.second));
  }
  return layout;
}

FarmPowerResult farm_power(const FarmLayout& layout, double direction_deg, double speed,
                           const TurbineSpec& spec, const WakeParams& params) {
  const std::size_t n = layout.positions.size();
  if (n == 0) throw LayoutError("farm_power: empty layout");
  if (!layout.cells.empty()) {
    std::set<std::pair<int, int>> seen(layout.cells.begin(), layout.cells.end());
    if (seen.size() != layout.cells.size()) throw LayoutError("farm_power: duplicate grid cells");
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (layout.positions[i] == layout.positions[j])
        throw LayoutError("farm_power: coincident turbine positions");

  // meteorological convention: wind FROM direction_deg, measured clockwise
  // from north; downwind unit = (-sin, -cos), crosswind unit = (-cos, sin)
  const double rad = direction_deg * kPi / 180.0;
  const double dwx = -std::sin(rad), dwy = -std::cos(rad);
  const double cwx = -std::cos(rad), cwy = std::sin(rad);

  std::vector<double> xi(n), eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [px, py] = layout.positions[i];
    xi[i] = px * dwx + py * dwy;
    eta[i] = px * cwx + py * cwy;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xi[a] < xi[b]; });

  FarmPowerResult result;
  result.per_turbine.assign(n, 0.0);
  std::vector<WakeSource> sources;
  sources.reserve(n);
  std::vector<double> deficits;
  for (const std::size_t i : order) {
    deficits.clear();
    for (const auto& s : sources) {
      const double d = wake_deficit(s, xi[i], eta[i], params);
      if (d > 0.0) deficits.push_back(d);
    }
    const double u_eff = speed * (1.0 - combine_deficits(deficits));
    result.per_turbine[i] = turbine_power(u_eff, spec, params.air_density);

    const double ct = spec.thrust_coeff(u_eff);
    sources.push_back(WakeSource{xi[i], eta[i], ct, wake_sigma0(spec.rotor_diameter, ct, params.sigma0_mode),
                                 spec.rotor_diameter});
  }
  for (double p : result.per_turbine) result.total += p;
  return result;
}

double aep_from_state_powers(const std::vector<double>& state_totals, const WindRose& rose) {
  if (state_totals.size() != rose.states.size())
    throw DimensionMismatch("aep: state power count does not match the rose");
  double weighted = 0.0;
  for (std::size_t j = 0; j < state_totals.size(); ++j) weighted += rose.states[j].frequency * state_totals[j];
  return kHoursPerYear * weighted;
}

double aep(const FarmLayout& layout, const WindRose& rose, const TurbineSpec& spec, const WakeParams& params) {
  rose.validate();
  std::vector<double> totals(rose.states.size());
  for (std::size_t j = 0; j < rose.states.size(); ++j)
    totals[j] = farm_power(layout, rose.states[j].direction_deg, rose.states[j].speed, spec, params).total;
  return aep_from_state_powers(totals, rose);
}

void load_curve_file(const std::filesystem::path& path, SpeedCurve& ct, SpeedCurve& cp) {
  const auto lines = read_data_lines(path);
  if (lines.size() < 3) throw IoError("curve file too short: " + path.string());
  std::vector<double> speeds, cts, cps;
  // first non-comment line is the header
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream ss(lines[i]);
    double s, c1, c2;
    if (!(ss >> s >> c1 >> c2)) throw IoError("curve file: malformed row '" + lines[i] + "'");
    if (!(c1 > 0.0 && c1 < 1.0)) throw InvalidArgument("curve file: C_T must lie in (0, 1)");
    if (!(c2 > 0.0 && c2 <= 16.0 / 27.0)) throw InvalidArgument("curve file: C_P must lie in (0, 16/27]");
    speeds.push_back(s);
    cts.push_back(c1);
    cps.push_back(c2);
  }
  ct = SpeedCurve(speeds, cts);
  cp = SpeedCurve(speeds, cps);
}

WindRose load_rose_file(const std::filesystem::path& path) {
  WindRose rose;
  for (const auto& line : read_data_lines(path)) {
    std::istringstream ss(line);
    WindRoseState st;
    if (!(ss >> st.direction_deg >> st.speed >> st.frequency))
      throw IoError("rose file: malformed row '" + line + "'");
    rose.states.push_back(st);
  }
  rose.validate();
  return rose;
}

Boundary load_boundary_file(const std::filesystem::path& path) {
  const auto lines = read_data_lines(path);
  if (lines.empty()) throw IoError("boundary file is empty: " + path.string());
  std::istringstream first(lines[0]);
  std::string tag;
  first >> tag;
  if (tag == "circle") {
    double cx, cy, r;
    if (!(first >> cx >> cy >> r)) throw IoError("boundary file: malformed circle line");
    return Boundary::circle(cx, cy, r);
  }
  if (tag == "mask") {
    double ox, oy, cell;
    int nx, ny;
    if (!(first >> ox >> oy >> cell >> nx >> ny)) throw IoError("boundary file: malformed mask header");
    if (lines.size() != static_cast<std::size_t>(ny) + 1)
      throw IoError("boundary file: mask row count does not match header");
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(nx) * ny, 0);
    // rows are listed top (iy = ny-1) to bottom so the file reads like a map
    for (int r = 0; r < ny; ++r) {
      const std::string& row = lines[static_cast<std::size_t>(r) + 1];
      std::istringstream ss(row);
      for (int ix = 0; ix < nx; ++ix) {
        int v;
        if (!(ss >> v)) throw IoError("boundary file: malformed mask row '" + row + "'");
        cells[static_cast<std::size_t>(ny - 1 - r) * nx + ix] = v ? 1 : 0;
      }
    }
    return Boundary::mask(ox, oy, cell, nx, ny, std::move(cells));
  }
  std::vector<std::pair<double, double>> verts;
  for (const auto& line : lines) {
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) throw IoError("boundary file: malformed vertex row '" + line + "'");
    verts.emplace_back(x, y);
  }
  return Boundary::polygon(std::move(verts));
}

}  // namespace wfopt
