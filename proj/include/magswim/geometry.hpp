#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "magswim/types.hpp"

namespace magswim {

enum class DesignKind { FingerShaped, FieldInduced, DragInduced, CarangiformLike, AnguilliformLike };

std::string_view to_string(DesignKind kind);
/// Accepts the canonical names ("finger", "field_induced", ...) and a few aliases.
DesignKind design_kind_from_string(std::string_view name);

/// Planform of one swimmer. Lengths in metres.
struct SwimmerDesign {
  DesignKind kind = DesignKind::CarangiformLike;
  double length = 5e-3;
  double width = 5e-3;
  double thickness = 1e-4;
  double magnetic_fraction = 0.55;  // L0 / L
  double mesh_resolution = 0.23e-3;  // target edge length ds
  double magnetization = 1e4;        // remnant magnetization magnitude M [A/m]

  double aspect_ratio() const { return length / width; }
  double magnetic_length() const { return magnetic_fraction * length; }
};

/// sqrt(L * W).
double characteristic_length(const SwimmerDesign& design);

/// Throws ModelError when the design violates the thin-sheet invariants.
void validate(const SwimmerDesign& design);

/// Default mesh resolution: 0.23 mm per 5 mm of body length, refined
/// so that at least four elements span the width.
double default_mesh_resolution(double length, double width);

struct SwimmerMesh {
  Points nodes;
  Points reference_nodes;
  std::vector<std::array<int, 3>> triangles;
  Points magnetization;  // per triangle, reference configuration, A/m
  std::vector<char> active;  // per triangle
  /// Per triangle; false where the planform carries no filler at all (central
  /// finger flap). Defaults to all true.
  std::vector<char> magnetizable;
  double thickness = 0.0;
  /// Node pairs spanning the width, ordered along the body axis. Used to measure
  /// twist of the centerline frame. Empty for meshes without a body axis.
  std::vector<std::array<int, 2>> stations;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t element_count() const { return triangles.size(); }
};

/// Initial rigid tilt in degrees, applied roll (x), then pitch (y), then yaw (z)
/// about fixed global axes.
struct TiltSpec {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

Mat3 rotation_x(double radians);
Mat3 rotation_y(double radians);
Mat3 rotation_z(double radians);
Mat3 tilt_rotation(const TiltSpec& tilt);

SwimmerMesh build_swimmer(const SwimmerDesign& design);

/// Rigid rotation of current and reference nodes about the current centroid;
/// magnetization co-rotates.
SwimmerMesh rotate_mesh(const SwimmerMesh& mesh, const Mat3& rotation);
SwimmerMesh apply_tilt(const SwimmerMesh& mesh, const TiltSpec& tilt);

/// Subdivided icosahedron with at least n_points nodes (n_points >= 100).
SwimmerMesh build_sphere_shell(double radius, int n_points);

/// Flat rectangular strip [0, length] x [-width/2, width/2] with nx by ny cells.
SwimmerMesh build_plate(double length, double width, int nx, int ny, double thickness);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
std::vector<double> element_areas(const Points& nodes, const SwimmerMesh& mesh);
double total_area(const SwimmerMesh& mesh);
/// Active reference area, weighted by |m| / max |m|, over magnetizable reference
/// area. For the finger-shaped design the passive central flap is excluded from
/// the denominator.
double active_area_fraction(const SwimmerMesh& mesh);
double mean_edge_length(const SwimmerMesh& mesh);

/// Node pairs that share an edge, sorted and unique.
std::vector<std::array<int, 2>> mesh_edges(const SwimmerMesh& mesh);

// ASCII indexed-triangle export: header "V F", then "v x y z" and "f i j k".
void write_mesh(std::ostream& out, const SwimmerMesh& mesh, const Points& nodes);
void write_mesh(std::ostream& out, const SwimmerMesh& mesh);
/// Reads the ASCII format back into nodes/triangles (no magnetization).
SwimmerMesh read_mesh(std::istream& in);
void write_magnetization_csv(std::ostream& out, const SwimmerMesh& mesh);

}  // namespace magswim
