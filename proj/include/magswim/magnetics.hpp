#pragma once

#include <string_view>
#include <vector>

#include "magswim/geometry.hpp"

namespace magswim {

enum class FieldKind {
  RotatingAboutX,          // B (0, cos wt, sin wt), w = 2 pi f sense
  OscillatingDirectional,  // B R(alpha(t)) d, alpha = half_angle sin(2 pi f t)
  Static,                  // B d
  Turning,                 // d rotated about sweep_axis by half_angle * min(1, f t)
  Alternating,             // B sin(2 pi f t) d
};

std::string_view to_string(FieldKind kind);
FieldKind field_kind_from_string(std::string_view name);

/// Spatially uniform external field program.
struct FieldProgram {
  FieldKind kind = FieldKind::RotatingAboutX;
  double amplitude = 0.0;  // T
  double frequency = 5.0;  // Hz
  int sense = +1;          // rotating field only
  Vec3 direction = Vec3::UnitX();
  double half_angle_deg = 45.0;
  /// Axis the oscillating field direction swings about. Zero selects the default:
  /// direction x z when that is non-zero, otherwise +y.
  Vec3 sweep_axis = Vec3::Zero();

  double period() const { return 1.0 / frequency; }
  Vec3 resolved_sweep_axis() const;
};

void validate(const FieldProgram& program);

Vec3 field_at(const FieldProgram& program, double t);

/// Piecewise program: segment k is active from start_time[k] and sees a local clock.
struct FieldSchedule {
  struct Segment {
    double start_time = 0.0;
    FieldProgram program;
  };
  std::vector<Segment> segments;

  static FieldSchedule single(const FieldProgram& program) { return FieldSchedule{{{0.0, program}}}; }
  Vec3 at(double t) const;
  const FieldProgram& active(double t) const;
};

struct MagneticLoad {
  Points forces;   // N, per node
  Points couples;  // N m, per element
};

/// Rotation carrying the element's reference frame onto its current frame. The
/// frame is (first edge, normal x first edge, normal).
Mat3 element_rotation(const Vec3& a0, const Vec3& b0, const Vec3& c0, const Vec3& a, const Vec3& b, const Vec3& c);

/// Minimal-norm forces on three vertices with zero resultant and moment `couple`
/// about their centroid.
std::array<Vec3, 3> couple_to_forces(const std::array<Vec3, 3>& vertices, const Vec3& couple);

MagneticLoad magnetic_load(const SwimmerMesh& mesh, const Points& current, const Vec3& field);

/// Adds the magnetic nodal forces to `forces` without building couples.
void accumulate_magnetic_forces(const SwimmerMesh& mesh, const Points& current, const Vec3& field,
                                const std::vector<double>& reference_areas, Points& forces);

/// Parameters held fixed when mapping (Mn, Fn) to a field amplitude and viscosity.
struct NondimAnchors {
  double youngs_modulus;  // Pa
  double thickness;       // m
  double lbar;            // m
  double magnetic_length; // L0, m
  double magnetization;   // A/m
  double frequency;       // Hz
};

struct PhysicalLoading {
  double field;      // B, T
  double viscosity;  // mu, Pa s
};

/// B = Mn E h^2 / (12 M Lbar L0), mu = Fn E h^3 / (12 Lbar^3 f).
PhysicalLoading nondim_to_physical(double mn, double fn, const NondimAnchors& anchors);
/// Mn = 12 B M Lbar L0 / (E h^2).
double magnetoelastic_number(double field, const NondimAnchors& anchors);
/// Fn = 12 mu Lbar^3 f / (E h^3).
double fluid_number(double viscosity, const NondimAnchors& anchors);

}  // namespace magswim
