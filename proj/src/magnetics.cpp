#include "magswim/magnetics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>

namespace magswim {

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::RotatingAboutX: return "rotating";
    case FieldKind::OscillatingDirectional: return "oscillating";
    case FieldKind::Static: return "static";
    case FieldKind::Turning: return "turning";
    case FieldKind::Alternating: return "alternating";
  }
  return "unknown";
}

FieldKind field_kind_from_string(std::string_view name) {
  if (name == "rotating" || name == "rotating_about_x") return FieldKind::RotatingAboutX;
  if (name == "oscillating" || name == "oscillating_directional") return FieldKind::OscillatingDirectional;
  if (name == "static") return FieldKind::Static;
  if (name == "turning") return FieldKind::Turning;
  if (name == "alternating") return FieldKind::Alternating;
  throw ModelError("unknown field kind '" + std::string(name) + "'");
}

Vec3 FieldProgram::resolved_sweep_axis() const {
  if (sweep_axis.squaredNorm() > 0) return sweep_axis.normalized();
  const Vec3 a = direction.cross(Vec3::UnitZ());
  return a.norm() > 1e-12 ? Vec3(a.normalized()) : Vec3(Vec3::UnitY());
}

void validate(const FieldProgram& p) {
  if (!(p.amplitude >= 0)) throw ModelError("field: amplitude must be non-negative");
  if (!(p.frequency > 0)) throw ModelError("field: frequency must be positive");
  if (p.sense != 1 && p.sense != -1) throw ModelError("field: sense must be +1 or -1");
  if (std::abs(p.direction.norm() - 1.0) > 1e-9) throw ModelError("field: direction must be a unit vector");
}

Vec3 field_at(const FieldProgram& p, double t) {
  const double w = 2.0 * kPi * p.frequency;
  switch (p.kind) {
    case FieldKind::RotatingAboutX: {
      const double phase = w * t * p.sense;
      return p.amplitude * Vec3(0.0, std::cos(phase), std::sin(phase));
    }
    case FieldKind::OscillatingDirectional: {
      const double alpha = p.half_angle_deg * kPi / 180.0 * std::sin(w * t);
      return p.amplitude * (Eigen::AngleAxisd(alpha, p.resolved_sweep_axis()) * p.direction);
    }
    case FieldKind::Static:
      return p.amplitude * p.direction;
    case FieldKind::Turning: {
      const double alpha = p.half_angle_deg * kPi / 180.0 * std::clamp(p.frequency * t, 0.0, 1.0);
      return p.amplitude * (Eigen::AngleAxisd(alpha, p.resolved_sweep_axis()) * p.direction);
    }
    case FieldKind::Alternating:
      return p.amplitude * std::sin(w * t) * p.direction;
  }
  return Vec3::Zero();
}

const FieldProgram& FieldSchedule::active(double t) const {
  if (segments.empty()) throw ModelError("field schedule is empty");
  std::size_t k = 0;
  while (k + 1 < segments.size() && t >= segments[k + 1].start_time) ++k;
  return segments[k].program;
}

Vec3 FieldSchedule::at(double t) const {
  if (segments.empty()) throw ModelError("field schedule is empty");
  std::size_t k = 0;
  while (k + 1 < segments.size() && t >= segments[k + 1].start_time) ++k;
  return field_at(segments[k].program, t - segments[k].start_time);
}

Mat3 element_rotation(const Vec3& a0, const Vec3& b0, const Vec3& c0, const Vec3& a, const Vec3& b, const Vec3& c) {
  auto frame = [](const Vec3& p, const Vec3& q, const Vec3& r) {
    const Vec3 t1 = (q - p).normalized();
    const Vec3 n = (q - p).cross(r - p).normalized();
    Mat3 f;
    f.col(0) = t1;
    f.col(1) = n.cross(t1);
    f.col(2) = n;
    return f;
  };
  return frame(a, b, c) * frame(a0, b0, c0).transpose();
}

std::array<Vec3, 3> couple_to_forces(const std::array<Vec3, 3>& v, const Vec3& couple) {
  const Vec3 c = (v[0] + v[1] + v[2]) / 3.0;
  Mat3 j = Mat3::Zero();
  std::array<Vec3, 3> r;
  for (int i = 0; i < 3; ++i) {
    r[i] = v[i] - c;
    j += r[i].squaredNorm() * Mat3::Identity() - r[i] * r[i].transpose();
  }
  const Vec3 lambda = j.ldlt().solve(couple);
  return {lambda.cross(r[0]), lambda.cross(r[1]), lambda.cross(r[2])};
}

namespace {

template <typename OnElement>
void for_each_couple(const SwimmerMesh& mesh, const Points& x, const Vec3& field,
                     const std::vector<double>& areas, OnElement&& on_element) {
  for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
    if (!mesh.active[e]) continue;
    const auto& t = mesh.triangles[e];
    const auto& x0 = mesh.reference_nodes;
    const Mat3 r = element_rotation(x0[t[0]], x0[t[1]], x0[t[2]], x[t[0]], x[t[1]], x[t[2]]);
    const Vec3 m = r * mesh.magnetization[e];
    const Vec3 couple = m.cross(field) * (areas[e] * mesh.thickness);
    on_element(e, couple, couple_to_forces({x[t[0]], x[t[1]], x[t[2]]}, couple));
  }
}

}  // namespace

MagneticLoad magnetic_load(const SwimmerMesh& mesh, const Points& current, const Vec3& field) {
  MagneticLoad out;
  out.forces.assign(current.size(), Vec3::Zero());
  out.couples.assign(mesh.triangles.size(), Vec3::Zero());
  const auto areas = element_areas(mesh.reference_nodes, mesh);
  for_each_couple(mesh, current, field, areas, [&](std::size_t e, const Vec3& c, const std::array<Vec3, 3>& f) {
    out.couples[e] = c;
    for (int k = 0; k < 3; ++k) out.forces[mesh.triangles[e][k]] += f[k];
  });
  return out;
}

void accumulate_magnetic_forces(const SwimmerMesh& mesh, const Points& current, const Vec3& field,
                                const std::vector<double>& areas, Points& forces) {
  if (field.squaredNorm() == 0.0) return;
  for_each_couple(mesh, current, field, areas, [&](std::size_t e, const Vec3&, const std::array<Vec3, 3>& f) {
    for (int k = 0; k < 3; ++k) forces[mesh.triangles[e][k]] += f[k];
  });
}

PhysicalLoading nondim_to_physical(double mn, double fn, const NondimAnchors& a) {
  if (!(a.youngs_modulus > 0) || !(a.thickness > 0) || !(a.lbar > 0) || !(a.magnetization > 0) ||
      !(a.frequency > 0))
    throw ModelError("nondim: anchors must be positive");
  if (mn < 0 || fn < 0) throw ModelError("nondim: Mn and Fn must be non-negative");
  PhysicalLoading out{};
  if (mn > 0) {
    if (!(a.magnetic_length > 0)) throw ModelError("nondim: field undefined for a zero magnetic length");
    out.field = mn * a.youngs_modulus * a.thickness * a.thickness / (12.0 * a.magnetization * a.lbar * a.magnetic_length);
  }
  out.viscosity = fn * a.youngs_modulus * a.thickness * a.thickness * a.thickness / (12.0 * a.lbar * a.lbar * a.lbar * a.frequency);
  return out;
}

double magnetoelastic_number(double field, const NondimAnchors& a) {
  return 12.0 * field * a.magnetization * a.lbar * a.magnetic_length / (a.youngs_modulus * a.thickness * a.thickness);
}

double fluid_number(double viscosity, const NondimAnchors& a) {
  return 12.0 * viscosity * a.lbar * a.lbar * a.lbar * a.frequency /
         (a.youngs_modulus * a.thickness * a.thickness * a.thickness);
}

}  // namespace magswim
