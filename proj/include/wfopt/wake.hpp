#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wfopt/types.hpp"

namespace wfopt {

// Monotone-speed lookup table; strictly increasing speeds, linear interpolation.
class SpeedCurve {
 public:
  SpeedCurve() = default;
  SpeedCurve(std::vector<double> speeds, std::vector<double> values);
  double operator()(double speed) const;  // speed must lie within the table
  double min_speed() const { return speeds_.front(); }
  double max_speed() const { return speeds_.back(); }

 private:
  std::vector<double> speeds_, values_;
};

struct TurbineSpec {
  double rotor_diameter = 126.0;  // m
  double hub_height = 90.0;       // m
  double cut_in = 3.0;            // m/s
  double cut_out = 25.0;          // m/s
  double rated_power = 5.0e6;     // W
  SpeedCurve ct_curve;            // thrust coefficient vs speed
  SpeedCurve cp_curve;            // power coefficient vs speed

  // parked outside [cut_in, cut_out]
  double thrust_coeff(double speed) const;
  void validate() const;
};

enum class Sigma0Mode { BetaFormula, PaperFormula };

struct WakeParams {
  double k_y = 0.03;  // lateral expansion rate
  double k_z = 0.03;  // vertical expansion rate
  Sigma0Mode sigma0_mode = Sigma0Mode::BetaFormula;
  double air_density = 1.225;  // kg/m^3
};

// initial wake width at the rotor for a given thrust coefficient
double wake_sigma0(double rotor_diameter, double ct, Sigma0Mode mode);

// One upstream turbine as a wake source, in the rotated (downwind x) frame.
struct WakeSource {
  double x = 0.0;       // downwind coordinate (m)
  double y = 0.0;       // crosswind coordinate (m)
  double ct = 0.0;      // thrust coefficient at its effective speed
  double sigma0 = 0.0;  // initial wake width (m)
  double rotor_diameter = 0.0;
};

// Fractional velocity deficit at a downstream probe (hub height).
double wake_deficit(const WakeSource& source, double probe_x, double probe_y, const WakeParams& params);

// root-sum-square superposition, clipped to 1
double combine_deficits(const std::vector<double>& deficits);

// Mechanical power at an effective hub-height speed, rated-power capped.
double turbine_power(double speed, const TurbineSpec& spec, double air_density);

struct WindRoseState {
  double direction_deg = 0.0;  // meteorological: wind FROM, clockwise from north
  double speed = 8.0;          // m/s
  double frequency = 1.0;
};

struct WindRose {
  std::vector<WindRoseState> states;
  void validate() const;  // frequencies >= 0, sum 1 within 1e-9
};

// Boundary region: polygon (even-odd rule) with point-membership and an
// outside-distance measure for penalties.
class Boundary {
 public:
  static Boundary polygon(std::vector<std::pair<double, double>> vertices);
  static Boundary circle(double cx, double cy, double radius);
  static Boundary mask(double origin_x, double origin_y, double cell, int nx, int ny,
                       std::vector<std::uint8_t> cells);

  bool contains(double x, double y) const;
  double outside_distance(double x, double y) const;  // 0 when inside
  void bounding_box(double& lo_x, double& lo_y, double& hi_x, double& hi_y) const;

 private:
  bool is_circle_ = false;
  double cx_ = 0.0, cy_ = 0.0, radius_ = 0.0;
  std::vector<std::pair<double, double>> verts_;
  std::vector<std::uint8_t> mask_;
  double mask_origin_x_ = 0.0, mask_origin_y_ = 0.0, mask_cell_ = 1.0;
  int mask_nx_ = 0, mask_ny_ = 0;
};

// Square-cell candidate grid over the boundary's bounding box; a cell is
// usable when its center lies inside the boundary.
struct GridSpec {
  double origin_x = 0.0, origin_y = 0.0;
  double cell = 126.0;  // cell edge length (1D by default)
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> feasible;  // nx*ny mask, row-major in ix

  static GridSpec over(const Boundary& boundary, double cell);
  bool cell_feasible(int ix, int iy) const;
  std::pair<double, double> center(int ix, int iy) const;
  std::size_t feasible_count() const;
};

struct FarmLayout {
  std::vector<std::pair<double, double>> positions;  // m
  std::vector<std::pair<int, int>> cells;            // grid indices, aligned with positions
};

// Snap a flat design vector (x1, y1, x2, y2, ..., xN, yN) to cell centers.
// Collisions move later turbines to the nearest free feasible cell, ties
// broken by increasing ring distance then angle.
FarmLayout snap_to_grid(const VectorXd& flat_xy, const GridSpec& grid);

struct FarmPowerResult {
  std::vector<double> per_turbine;  // W
  double total = 0.0;               // W
};

// Single wind state: rotate downwind, march upstream-to-downstream, superpose
// deficits, look up power at effective speeds.
FarmPowerResult farm_power(const FarmLayout& layout, double direction_deg, double speed,
                           const TurbineSpec& spec, const WakeParams& params);

inline constexpr double kHoursPerYear = 8766.0;  // (365*3+366)/4 * 24

// frequency-weighted sum of per-state totals times hours/year; shared by the
// in-process and external evaluation paths so both reduce identically
double aep_from_state_powers(const std::vector<double>& state_totals, const WindRose& rose);

double aep(const FarmLayout& layout, const WindRose& rose, const TurbineSpec& spec, const WakeParams& params);

// --- file formats -----------------------------------------------------------
// curve file: header line, rows "speed ct cp", speeds strictly increasing;
// must cover [cut_in, cut_out] once attached to a spec
void load_curve_file(const std::filesystem::path& path, SpeedCurve& ct, SpeedCurve& cp);
// rose file: rows "direction_deg speed_ms frequency"
WindRose load_rose_file(const std::filesystem::path& path);
// boundary file: lines "x y" polygon vertices, or "mask <origin_x> <origin_y>
// <cell> <nx> <ny>" header followed by ny mask rows of 0/1
Boundary load_boundary_file(const std::filesystem::path& path);

}  // namespace wfopt
