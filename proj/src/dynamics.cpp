#include "magswim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include <Eigen/SparseCholesky>

namespace magswim {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::OK: return "OK";
    case Regime::SelfContact: return "SelfContact";
    case Regime::Coiling: return "Coiling";
    case Regime::Floppy: return "Floppy";
    case Regime::NotConverged: return "NotConverged";
  }
  return "unknown";
}

Regime regime_from_string(std::string_view name) {
  for (Regime r : {Regime::OK, Regime::SelfContact, Regime::Coiling, Regime::Floppy, Regime::NotConverged})
    if (name == to_string(r)) return r;
  throw ModelError("unknown regime '" + std::string(name) + "'");
}

double SimConfig::period() const {
  if (field.segments.empty()) throw ModelError("field: schedule is empty");
  return field.segments.front().program.period();
}

void validate(const SimConfig& c) {
  validate(c.design);
  if (c.field.segments.empty()) throw ModelError("field: schedule is empty");
  for (const auto& s : c.field.segments) validate(s.program);
  if (!(c.fluid.viscosity > 0)) throw ModelError("viscosity: must be positive");
  if (!(c.dt > 0)) throw ModelError("dt: must be positive");
  if (c.dt > c.period() / 500.0 * (1 + 1e-9)) throw ModelError("dt: must not exceed T/500");
  if (c.n_cycles_max < 2) throw ModelError("n_cycles_max: must be at least 2");
  if (!(c.material.youngs_modulus > 0)) throw ModelError("youngs_modulus: must be positive");
  if (std::abs(c.material.thickness - c.design.thickness) > 1e-12 * c.design.thickness)
    throw ModelError("thickness: material and design disagree");
  if (!(c.steady_tolerance > 0)) throw ModelError("steady_tolerance: must be positive");
  if (c.samples_per_cycle < 1) throw ModelError("samples_per_cycle: must be at least 1");
  if (c.probes.resolution < 2) throw ModelError("probes.resolution: must be at least 2");
  if ((c.frame.transpose() * c.frame - Mat3::Identity()).norm() > 1e-9 || c.frame.determinant() < 0)
    throw ModelError("frame: must be a proper rotation");
}

Vec3 center_of_mass(const Points& nodes) { return centroid(nodes); }

// ---------------------------------------------------------------------------

struct Simulator::Solver {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;
  double factored_h = 0.0;
};

namespace {

SwimmerMesh initial_mesh(const SimConfig& c) {
  SwimmerMesh m = apply_tilt(build_swimmer(c.design), c.tilt);
  if (!c.frame.isIdentity(1e-14)) m = rotate_mesh(m, c.frame);
  return m;
}

}  // namespace

Simulator::Simulator(const SimConfig& config) : Simulator(config, initial_mesh(config)) {}

Simulator::Simulator(const SimConfig& config, SwimmerMesh mesh)
    : config_(config), mesh_(std::move(mesh)), elastic_(mesh_, config.material), fluid_(config.fluid) {
  validate(config_);
  spacing_ = mean_edge_length(mesh_);
  if (!(fluid_.regularization > 0)) fluid_.regularization = kDefaultBlobFactor * spacing_;
  validate(fluid_);
  if (mesh_.node_count() > kMobilityPointCap) throw ModelError("mesh: too many nodes for the dense mobility");
  reference_areas_ = element_areas(mesh_.reference_nodes, mesh_);
  self_mobility_ = 1.0 / (4.0 * kPi * fluid_.viscosity * fluid_.regularization);
  steps_per_cycle_ = static_cast<int>(std::lround(config_.period() / config_.dt));
  state_.nodes = mesh_.nodes;
  solver_ = std::make_shared<Solver>();
}

Points Simulator::total_forces(const Points& x, double t) const {
  Points f = elastic_.forces(x).forces;
  const Vec3 b = config_.frame * config_.field.at(t);
  accumulate_magnetic_forces(mesh_, x, b, reference_areas_, f);
  return f;
}

Eigen::VectorXd Simulator::increment(const Points& x, double t, double h) {
  const Points f = total_forces(x, t);
  const Eigen::VectorXd rhs = h * stack(apply_mobility(x, f, fluid_));
  if (rhs.lpNorm<Eigen::Infinity>() == 0.0) return rhs;
  if (h != solver_->factored_h) {
    system_ = stiffness_ * (h * self_mobility_);
    system_.diagonal().array() += 1.0;
    if (!solver_->analyzed) {
      solver_->ldlt.analyzePattern(system_);
      solver_->analyzed = true;
    }
    solver_->ldlt.factorize(system_);
    if (solver_->ldlt.info() != Eigen::Success) throw ModelError("step: implicit system factorization failed");
    solver_->factored_h = h;
  }
  return solver_->ldlt.solve(rhs);
}

void Simulator::step() {
  const double dt = config_.dt;
  const double limit = 0.1 * spacing_;
  // Stiffness is frozen over the step; the factorization is reused by every
  // substep of the same size.
  elastic_.stiffness_into(state_.nodes, stiffness_);
  solver_->factored_h = 0.0;
  // Start from the level the previous steps needed and probe one level coarser
  // after a run of steps without a rejection.
  int level = level_;
  if (calm_steps_ >= 16 && level > 0) {
    --level;
    calm_steps_ = 0;
  }
  bool rejected = false;
  double done = 0.0;
  while (done < 1.0 - 1e-12) {
    const double frac = std::ldexp(1.0, -level);
    const Eigen::VectorXd dx = increment(state_.nodes, state_.time + done * dt, frac * dt);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < dx.size(); i += 3) worst = std::max(worst, dx.segment<3>(i).norm());
    if (!(worst <= limit)) {
      if (level == kMaxSubstepLevel)
        throw SubstepUnderflow("step: node displacement exceeds 0.1 ds at dt/2^" + std::to_string(kMaxSubstepLevel));
      ++level;
      rejected = true;
      continue;
    }
    for (std::size_t i = 0; i < state_.nodes.size(); ++i) state_.nodes[i] += dx.segment<3>(3 * i);
    done += frac;
  }
  calm_steps_ = rejected ? 0 : calm_steps_ + 1;
  level_ = level;
  state_.substep_level = std::max(state_.substep_level, level);
  ++state_.steps;
  state_.time = static_cast<double>(state_.steps) * dt;
}

FlowRates Simulator::flowrates_now() const {
  const Points f = total_forces(state_.nodes, state_.time);
  return compute_flowrates(state_.nodes, f, fluid_, config_.probes, center_of_mass(state_.nodes), config_.lbar(),
                           config_.period());
}

const CycleDiagnostics& Simulator::run_cycle(Trajectory& traj, bool sample_flow) {
  const int n = steps_per_cycle_;
  const int sample_stride = std::max(1, n / config_.samples_per_cycle);
  const int check_stride = std::max(1, n / std::max(1, config_.contact_checks_per_cycle));
  const int flow_stride = std::max(1, n / std::max(1, config_.flow_samples_per_cycle));
  const double cutoff = 2.0 * mesh_.thickness;

  CycleDiagnostics d;
  d.cycle = static_cast<int>(traj.cycles.size()) + 1;
  d.min_self_distance = std::numeric_limits<double>::infinity();
  const Vec3 start = center_of_mass(state_.nodes);
  FlowRates sum;
  int n_flow = 0;
  for (int k = 1; k <= n; ++k) {
    step();
    std::optional<FlowRates> q;
    if (sample_flow && k % flow_stride == 0) {
      q = flowrates_now();
      sum.qx += q->qx;
      sum.qy += q->qy;
      sum.qz += q->qz;
      ++n_flow;
    }
    if (k % sample_stride == 0 || q) traj.samples.push_back({state_.time, center_of_mass(state_.nodes), q});
    if (k % check_stride == 0 || k == n) {
      d.min_self_distance = std::min(d.min_self_distance, min_self_distance(mesh_, state_.nodes, cutoff));
      const double tw = centerline_twist(mesh_, state_.nodes);
      if (std::abs(tw) > std::abs(d.max_twist)) d.max_twist = tw;
      // Stop at the first failure so the regime names what happened first.
      if (d.min_self_distance < mesh_.thickness || std::abs(d.max_twist) > kCoilingTwist) break;
    }
  }
  d.displacement = center_of_mass(state_.nodes) - start;
  d.blpc = d.displacement.dot(traj.propulsion_axis) / traj.lbar;
  if (n_flow > 0) d.mean_flow = FlowRates{sum.qx / n_flow, sum.qy / n_flow, sum.qz / n_flow};
  traj.cycles.push_back(d);
  traj.snapshots.push_back(state_.nodes);
  return traj.cycles.back();
}

namespace {

bool cycles_steady(const CycleDiagnostics& a, const CycleDiagnostics& b, double tol, double floor) {
  const double scale = std::max(a.displacement.norm(), b.displacement.norm());
  return (a.displacement - b.displacement).norm() < tol * scale + floor;
}

// Absolute floor of the steady-state test, in units of Lbar per cycle. Only
// matters for bodies that do not move at all.
constexpr double kSteadyFloor = 1e-9;

}  // namespace

Trajectory Simulator::start_trajectory() const {
  Trajectory traj;
  traj.lbar = config_.lbar();
  traj.period = config_.period();
  traj.propulsion_axis = config_.propulsion_axis();
  traj.thickness = mesh_.thickness;
  traj.samples.push_back({state_.time, center_of_mass(state_.nodes), std::nullopt});
  return traj;
}

void Simulator::set_field(const FieldSchedule& field) {
  SimConfig next = config_;
  next.field = field;
  validate(next);
  if (std::abs(next.period() - config_.period()) > 1e-12 * config_.period())
    throw ModelError("field: replacement program must keep the period");
  config_.field = field;
}

Trajectory Simulator::run() {
  Trajectory traj = start_trajectory();
  const bool flow = config_.flow_samples_per_cycle > 0;
  for (int c = 0; c < config_.n_cycles_max; ++c) {
    try {
      run_cycle(traj, flow);
    } catch (const DegenerateTriangleError&) {
      traj.integration_failed = true;
      break;
    } catch (const SubstepUnderflow&) {
      traj.integration_failed = true;
      break;
    }
    const auto& last = traj.cycles.back();
    if (last.min_self_distance < mesh_.thickness || std::abs(last.max_twist) > kCoilingTwist) break;
    const std::size_t nc = traj.cycles.size();
    if (nc >= 2) {
      traj.steady = cycles_steady(traj.cycles[nc - 1], traj.cycles[nc - 2], config_.steady_tolerance,
                                  kSteadyFloor * traj.lbar);
      if (traj.steady && config_.stop_at_steady &&
          (static_cast<int>(nc) >= kFloppyMinCycles || std::abs(compute_blpc(traj)) >= kFloppyBlpc))
        break;
    }
  }
  traj.regime = detect_regime(traj);
  traj.substep_level = state_.substep_level;
  return traj;
}

Trajectory run(const SimConfig& config) { return Simulator(config).run(); }

double compute_blpc(const Trajectory& traj) {
  const std::size_t n = traj.cycles.size();
  if (n < 2) throw ModelError("blpc: needs at least two completed cycles");
  return 0.5 * (traj.cycles[n - 1].blpc + traj.cycles[n - 2].blpc);
}

Regime detect_regime(const Trajectory& traj) {
  for (const auto& c : traj.cycles)
    if (c.min_self_distance < traj.thickness) return Regime::SelfContact;
  for (const auto& c : traj.cycles)
    if (std::abs(c.max_twist) > kCoilingTwist) return Regime::Coiling;
  if (traj.integration_failed || traj.cycles.size() < 2) return Regime::NotConverged;
  if (static_cast<int>(traj.cycles.size()) >= kFloppyMinCycles && std::abs(compute_blpc(traj)) < kFloppyBlpc)
    return Regime::Floppy;
  if (!traj.steady) return Regime::NotConverged;
  return Regime::OK;
}

// ---------------------------------------------------------------------------
// Geometric diagnostics

namespace {

Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + d1 / (d1 - d3) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + d2 / (d2 - d6) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0, t = 0;
  const double c = d1.dot(r), b = d1.dot(d2);
  const double denom = a * e - b * b;
  if (denom > 1e-30 * a * e) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
  t = (b * s + f) / e;
  if (t < 0) {
    t = 0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1) {
    t = 1;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  return ((p1 + s * d1) - (p2 + t * d2)).norm();
}

double triangle_distance(const std::array<Vec3, 3>& u, const std::array<Vec3, 3>& v) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    best = std::min(best, (u[i] - closest_on_triangle(u[i], v[0], v[1], v[2])).norm());
    best = std::min(best, (v[i] - closest_on_triangle(v[i], u[0], u[1], u[2])).norm());
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      best = std::min(best, segment_distance(u[i], u[(i + 1) % 3], v[j], v[(j + 1) % 3]));
  return best;
}

}  // namespace

double min_self_distance(const SwimmerMesh& mesh, const Points& x, double cutoff) {
  const std::size_t nt = mesh.triangles.size();
  std::vector<Vec3> center(nt);
  std::vector<double> radius(nt);
  double rmax = 0;
  for (std::size_t e = 0; e < nt; ++e) {
    const auto& t = mesh.triangles[e];
    center[e] = (x[t[0]] + x[t[1]] + x[t[2]]) / 3.0;
    radius[e] = 0;
    for (int k = 0; k < 3; ++k) radius[e] = std::max(radius[e], (x[t[k]] - center[e]).norm());
    rmax = std::max(rmax, radius[e]);
  }
  const double cell = 2.0 * rmax + cutoff;
  auto key = [&](const Vec3& p, int dx, int dy, int dz) {
    const auto ix = static_cast<std::int64_t>(std::floor(p.x() / cell)) + dx;
    const auto iy = static_cast<std::int64_t>(std::floor(p.y() / cell)) + dy;
    const auto iz = static_cast<std::int64_t>(std::floor(p.z() / cell)) + dz;
    return (ix * 73856093) ^ (iy * 19349663) ^ (iz * 83492791);
  };
  std::unordered_map<std::int64_t, std::vector<int>> grid;
  grid.reserve(nt);
  for (std::size_t e = 0; e < nt; ++e) grid[key(center[e], 0, 0, 0)].push_back(static_cast<int>(e));

  double best = cutoff;
  for (std::size_t e = 0; e < nt; ++e) {
    const auto& te = mesh.triangles[e];
    const std::array<Vec3, 3> ue{x[te[0]], x[te[1]], x[te[2]]};
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find(key(center[e], dx, dy, dz));
          if (it == grid.end()) continue;
          for (int f : it->second) {
            if (f <= static_cast<int>(e)) continue;
            const auto& tf = mesh.triangles[f];
            bool shared = false;
            for (int a : te)
              for (int b : tf) shared |= a == b;
            if (shared) continue;
            if ((center[e] - center[f]).norm() - radius[e] - radius[f] >= best) continue;
            const double d = triangle_distance(ue, {x[tf[0]], x[tf[1]], x[tf[2]]});
            if (d >= best) continue;
            // Neighbours on the sheet are close by construction; only pairs that
            // started well apart count as touching.
            const auto& r = mesh.reference_nodes;
            if (triangle_distance({r[te[0]], r[te[1]], r[te[2]]}, {r[tf[0]], r[tf[1]], r[tf[2]]}) < kContactReferenceGap * mesh.thickness)
              continue;
            best = d;
          }
        }
  }
  return best;
}

double centerline_twist(const SwimmerMesh& mesh, const Points& x) {
  const auto& st = mesh.stations;
  if (st.size() < 2) return 0.0;
  double twist = 0.0;
  for (std::size_t i = 0; i + 1 < st.size(); ++i) {
    const Vec3 m0 = 0.5 * (x[st[i][0]] + x[st[i][1]]);
    const Vec3 m1 = 0.5 * (x[st[i + 1][0]] + x[st[i + 1][1]]);
    const Vec3 t = (m1 - m0).normalized();
    Vec3 w0 = x[st[i][1]] - x[st[i][0]];
    Vec3 w1 = x[st[i + 1][1]] - x[st[i + 1][0]];
    w0 -= w0.dot(t) * t;
    w1 -= w1.dot(t) * t;
    twist += std::atan2(w0.cross(w1).dot(t), w0.dot(w1));
  }
  return twist;
}

// ---------------------------------------------------------------------------
// Flow diagnostics

Points probe_box(const Points& nodes, const ProbeSpec& spec, const Vec3& center, double lbar, double eps) {
  const int n = spec.resolution;
  const double side = spec.box_factor * lbar;
  const double excl2 = std::pow(spec.exclusion_factor * eps, 2);
  Points out;
  out.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vec3 p = center + side * (Vec3(i, j, k) / (n - 1) - Vec3::Constant(0.5));
        bool keep = true;
        for (const auto& q : nodes)
          if ((p - q).squaredNorm() < excl2) {
            keep = false;
            break;
          }
        if (keep) out.push_back(p);
      }
  return out;
}

FlowRates compute_flowrates(const Points& nodes, const Points& forces, const FluidParams& fluid,
                            const ProbeSpec& spec, const Vec3& center, double lbar, double period) {
  const Points probes = probe_box(nodes, spec, center, lbar, fluid.regularization);
  if (probes.empty()) throw ModelError("flowrates: every probe lies inside the exclusion zone");
  const Points u = flow_at_probes(nodes, forces, probes, fluid);
  Vec3 mean = Vec3::Zero();
  for (const auto& v : u) mean += v.cwiseAbs();
  mean *= period / (lbar * static_cast<double>(u.size()));
  return {mean.x(), mean.y(), mean.z()};
}

}  // namespace magswim
