#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "magswim/config.hpp"

namespace magswim {

inline constexpr std::string_view kCodeVersion = "0.1.0";

struct RunSummary {
  double blpc = 0.0;  // NaN with fewer than two cycles
  Regime regime = Regime::OK;
  int cycles = 0;
  bool steady = false;
  double q_total = 0.0;  // last cycle's mean Qtotal, NaN if flow was not sampled
};

RunSummary summarize(const Trajectory& traj);

/// t, com_x, com_y, com_z, Qx, Qy, Qz, regime. Q columns are empty where the
/// flow was not sampled.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_summary_csv(std::ostream& out, const SimConfig& config, const RunSummary& summary);
/// Regime of the prefix of `traj` ending at cycle k (1-based); sticky contact
/// and coiling, NotConverged for a missing cycle, Floppy from cycle 5 on.
Regime cycle_regime(const Trajectory& traj, int k);

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { Mn, Fn, L0OverL, LOverW, TiltRoll, TiltPitch, TiltYaw, CycleIndex };

std::string_view to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(std::string_view name);
/// Config key the axis overrides; empty for CycleIndex.
std::string axis_key(SweepAxis axis);

struct AxisSpec {
  SweepAxis axis = SweepAxis::Mn;
  std::vector<double> values;
};

struct SweepSpec {
  KeyValueConfig base;  // applied to every grid point
  AxisSpec axis1, axis2;

  std::size_t size() const { return axis1.values.size() * axis2.values.size(); }
};

/// Reads sweep.axis1.* and sweep.axis2.* (name plus either values or
/// start/stop/step); everything else is the per-point base config.
SweepSpec sweep_spec_from(const KeyValueConfig& cfg);
/// stability.axis (roll|pitch|yaw), stability.angles, stability.cycles: a
/// tilt x cycle_index sweep.
SweepSpec stability_spec_from(const KeyValueConfig& cfg);

struct SweepRecord {
  double v1 = 0.0, v2 = 0.0;
  double blpc = 0.0;
  Regime regime = Regime::OK;
  int cycles_to_steady = -1;  // -1 when not steady
  double q_total = 0.0;
};

std::string sweep_csv_header(const SweepSpec& spec);
std::string format_sweep_row(const SweepRecord& record);
SweepRecord parse_sweep_row(const std::string& line);
/// Rows of an existing sweep CSV. Throws ConfigError when the header or the
/// grid values do not match `spec`.
std::vector<SweepRecord> read_sweep_csv(std::istream& in, const SweepSpec& spec);

/// Config of one grid point (cycle_index excluded).
SimConfig point_config(const SweepSpec& spec, double v1, double v2);

/// Runs the rows from `first_row` on in row-major order (axis1 outer) on
/// `workers` threads. `sink` sees each record once, in order, as soon as all
/// earlier rows are known.
std::vector<SweepRecord> run_sweep(const SweepSpec& spec, int workers, std::size_t first_row,
                                   const std::function<void(const SweepRecord&)>& sink);

void write_heatmap_svg(std::ostream& out, const SweepSpec& spec, const std::vector<SweepRecord>& records,
                       const std::string& title);

// ---------------------------------------------------------------------------
// Bi-directionality

struct BidirPhase {
  std::string name;
  std::vector<double> cycle_blpc;
  double blpc = 0.0;  // mean of the last two cycles
  Regime regime = Regime::OK;
};

struct BidirReport {
  DesignKind design = DesignKind::CarangiformLike;
  std::string scenario;  // "sense_flip" or "reorientation"
  BidirPhase forward, reorient, reversed;
  bool reverses = false;
  bool on_the_fly = false;
};

/// Forward program for `cycles` cycles, then either the rotation sense flipped
/// in place (rotating fields) or a field-guided half turn about z over
/// `reorient_cycles` cycles followed by the program pointed along -d.
BidirReport run_bidirectionality(const SimConfig& base, int cycles, int reorient_cycles);

void write_bidir_csv(std::ostream& out, const BidirReport& report);

// ---------------------------------------------------------------------------
// Flow field

enum class Plane { XY, XZ, YZ };
Plane plane_from_string(std::string_view name);
std::string_view to_string(Plane plane);

struct FlowFrame {
  double time = 0.0;
  std::vector<std::array<double, 3>> cells;  // in-plane (a, b) relative to the COM, |u|
};

struct FlowFieldResult {
  Regime regime = Regime::OK;
  double blpc = 0.0;
  std::vector<double> time;  // frames + 1 samples spanning exactly one cycle
  std::vector<FlowRates> q;
  std::vector<FlowFrame> frames;
};

/// Runs to steady state (or n_cycles_max), then samples one more cycle.
FlowFieldResult run_flowfield(const SimConfig& config, Plane plane, int frames, int resolution);

void write_flow_traces_csv(std::ostream& out, const FlowFieldResult& result);
void write_flow_frames_csv(std::ostream& out, const FlowFieldResult& result, Plane plane);

/// Index of the largest non-constant harmonic of a uniformly sampled periodic
/// trace (the last sample, equal to the first, is dropped).
int dominant_harmonic(const std::vector<double>& trace);

}  // namespace magswim
