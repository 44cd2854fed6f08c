#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "magswim/elastica.hpp"
#include "magswim/geometry.hpp"
#include "magswim/hydrodynamics.hpp"
#include "magswim/magnetics.hpp"

namespace magswim {

enum class Regime { OK, SelfContact, Coiling, Floppy, NotConverged };

std::string_view to_string(Regime regime);
Regime regime_from_string(std::string_view name);

inline constexpr double kFloppyBlpc = 0.005;
inline constexpr int kFloppyMinCycles = 5;
inline constexpr double kCoilingTwist = 2.0 * kPi;
inline constexpr int kMaxSubstepLevel = 10;
/// Triangle pairs closer than this many thicknesses in the reference sheet are
/// never reported as self-contact.
inline constexpr double kContactReferenceGap = 2.0;

/// Probe box for flowrate diagnostics: cube of side box_factor * Lbar centred on
/// the instantaneous centre of mass, `resolution`^3 points, points closer than
/// exclusion_factor * eps to a collocation point dropped.
struct ProbeSpec {
  double box_factor = 2.0;
  int resolution = 16;
  double exclusion_factor = 2.0;
};

struct SimConfig {
  SwimmerDesign design;
  MaterialParams material;
  FluidParams fluid;  // regularization <= 0 selects kDefaultBlobFactor * mean edge length
  FieldSchedule field;
  double dt = 1e-4;
  int n_cycles_max = 50;
  TiltSpec tilt;
  /// Extra rigid rotation applied to the tilted mesh and to the field.
  Mat3 frame = Mat3::Identity();
  bool stop_at_steady = true;
  double steady_tolerance = 0.01;
  int samples_per_cycle = 20;
  int contact_checks_per_cycle = 10;
  int flow_samples_per_cycle = 0;
  ProbeSpec probes;

  double period() const;
  double lbar() const { return characteristic_length(design); }
  Vec3 propulsion_axis() const { return frame.col(0); }
};

/// Throws ModelError naming the offending key on an invalid configuration.
void validate(const SimConfig& config);

struct SimState {
  Points nodes;
  double time = 0.0;
  long steps = 0;
  int substep_level = 0;  // deepest halving used so far
};

struct FlowRates {
  double qx = 0, qy = 0, qz = 0;
  double total() const { return qx + qy + qz; }
};

struct CycleDiagnostics {
  int cycle = 0;
  Vec3 displacement = Vec3::Zero();
  double blpc = 0.0;
  std::optional<FlowRates> mean_flow;
  double max_twist = 0.0;
  double min_self_distance = 0.0;
};

struct TrajectorySample {
  double time;
  Vec3 com;
  std::optional<FlowRates> flow;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<CycleDiagnostics> cycles;
  std::vector<Points> snapshots;  // nodes at the end of every cycle
  Regime regime = Regime::OK;
  bool steady = false;
  double lbar = 0.0;
  double period = 0.0;
  Vec3 propulsion_axis = Vec3::UnitX();
  double thickness = 0.0;
  bool integration_failed = false;
  int substep_level = 0;
};

/// Inertialess magneto-elastic sheet in unbounded Stokes flow:
///   dx/dt = M(x) (f_elastic(x) + f_magnetic(x, B(t)))
/// advanced with a first-order step whose elastic part uses the self-mobility
/// implicitly: (I + h c K) dx = h M f, c = 1 / (4 pi mu eps).
class Simulator {
 public:
  explicit Simulator(const SimConfig& config);
  Simulator(const SimConfig& config, SwimmerMesh mesh);

  const SimConfig& config() const { return config_; }
  const SwimmerMesh& mesh() const { return mesh_; }
  const SimState& state() const { return state_; }
  const FluidParams& fluid() const { return fluid_; }
  const ElasticModel& elastic() const { return elastic_; }
  double spacing() const { return spacing_; }
  int steps_per_cycle() const { return steps_per_cycle_; }

  /// Net non-hydrodynamic nodal force at the given configuration and time.
  Points total_forces(const Points& x, double t) const;

  /// One nominal time step, halving internally while any node would move more
  /// than 0.1 ds. Throws SubstepUnderflow beyond 2^-10 dt.
  void step();

  /// Integrates whole cycles until steady state or n_cycles_max.
  Trajectory run();

  /// Empty trajectory carrying this run's scales and the initial sample.
  Trajectory start_trajectory() const;

  /// Swaps the field program mid-run. Segment start times are absolute; the
  /// period must not change.
  void set_field(const FieldSchedule& field);

  /// One full cycle appended to `traj`; returns its diagnostics.
  const CycleDiagnostics& run_cycle(Trajectory& traj, bool sample_flow);

  FlowRates flowrates_now() const;

  class SubstepUnderflow : public ModelError {
   public:
    using ModelError::ModelError;
  };

 private:
  Eigen::VectorXd increment(const Points& x, double t, double h);

  SimConfig config_;
  SwimmerMesh mesh_;
  ElasticModel elastic_;
  FluidParams fluid_;
  std::vector<double> reference_areas_;
  double spacing_ = 0.0;
  double self_mobility_ = 0.0;
  int steps_per_cycle_ = 0;
  SimState state_;
  Eigen::SparseMatrix<double> stiffness_;
  Eigen::SparseMatrix<double> system_;
  int level_ = 0;
  int calm_steps_ = 0;
  struct Solver;
  std::shared_ptr<Solver> solver_;
};

Trajectory run(const SimConfig& config);

/// Area-free centre of mass (mean node position).
Vec3 center_of_mass(const Points& nodes);

/// Smallest distance between triangles that share no vertex and lie at least
/// kContactReferenceGap * h apart in the reference sheet. Pairs further apart
/// than `cutoff` are not resolved; the result is then min(cutoff, ...).
double min_self_distance(const SwimmerMesh& mesh, const Points& nodes, double cutoff);

/// Accumulated signed rotation of the width vector along the stations.
double centerline_twist(const SwimmerMesh& mesh, const Points& nodes);

/// Steady per-cycle displacement along the propulsion axis over Lbar, averaged
/// over the last two cycles. Throws ModelError with fewer than two cycles.
double compute_blpc(const Trajectory& traj);

/// Classification from a finished history (contact/coiling are sticky).
Regime detect_regime(const Trajectory& traj);

/// Normalized flowrates (T / Lbar) <|u_k|> over a probe box around `center`.
/// Throws ModelError when every probe is excluded.
FlowRates compute_flowrates(const Points& nodes, const Points& forces, const FluidParams& fluid,
                            const ProbeSpec& spec, const Vec3& center, double lbar, double period);

Points probe_box(const Points& nodes, const ProbeSpec& spec, const Vec3& center, double lbar, double eps);

}  // namespace magswim
