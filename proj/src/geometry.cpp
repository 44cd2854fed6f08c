#include "magswim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace magswim {

Eigen::VectorXd stack(const Points& p) {
  Eigen::VectorXd v(3 * p.size());
  for (std::size_t i = 0; i < p.size(); ++i) v.segment<3>(3 * i) = p[i];
  return v;
}

Points unstack(const Eigen::VectorXd& v) {
  Points p(v.size() / 3);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = v.segment<3>(3 * i);
  return p;
}

Vec3 centroid(const Points& p) {
  Vec3 c = Vec3::Zero();
  for (const auto& x : p) c += x;
  return p.empty() ? c : Vec3(c / static_cast<double>(p.size()));
}

std::string_view to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::FingerShaped: return "finger";
    case DesignKind::FieldInduced: return "field_induced";
    case DesignKind::DragInduced: return "drag_induced";
    case DesignKind::CarangiformLike: return "carangiform";
    case DesignKind::AnguilliformLike: return "anguilliform";
  }
  return "unknown";
}

DesignKind design_kind_from_string(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "finger" || s == "finger_shaped") return DesignKind::FingerShaped;
  if (s == "field_induced" || s == "field") return DesignKind::FieldInduced;
  if (s == "drag_induced" || s == "drag") return DesignKind::DragInduced;
  if (s == "carangiform" || s == "carangiform_like") return DesignKind::CarangiformLike;
  if (s == "anguilliform" || s == "anguilliform_like") return DesignKind::AnguilliformLike;
  throw ModelError("unknown design kind '" + std::string(name) + "'");
}

double characteristic_length(const SwimmerDesign& design) {
  return std::sqrt(design.length * design.width);
}

void validate(const SwimmerDesign& d) {
  if (!(d.length > 0) || !(d.width > 0) || !(d.thickness > 0))
    throw ModelError("design: length, width and thickness must be positive");
  if (d.thickness >= 0.2 * std::min(d.length, d.width))
    throw ModelError("design: thickness must be below 0.2 * min(length, width)");
  if (!(d.magnetic_fraction >= 0.0 && d.magnetic_fraction <= 1.0))
    throw ModelError("design: magnetic_fraction must lie in [0, 1]");
  if (!(d.magnetization >= 0.0)) throw ModelError("design: magnetization must be non-negative");
  if (!(d.mesh_resolution > 0.0)) throw ModelError("design: mesh_resolution must be positive");
}

double default_mesh_resolution(double length, double width) {
  return std::min(0.046 * length, width / 4.0);
}

Mat3 rotation_x(double a) {
  Mat3 r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}

Mat3 rotation_y(double a) {
  Mat3 r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}

Mat3 rotation_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

Mat3 tilt_rotation(const TiltSpec& t) {
  const double deg = kPi / 180.0;
  return rotation_z(t.yaw * deg) * rotation_y(t.pitch * deg) * rotation_x(t.roll * deg);
}

namespace {

// Cell grid over [-L/2, L/2] x [-W/2, W/2]; cells flagged out by `keep` are dropped
// together with nodes no kept cell references.
struct Grid {
  int nx = 0;
  int ny = 0;
  double length = 0;
  double width = 0;
  std::vector<char> keep;    // nx * ny
  std::vector<int> node_id;  // (nx+1) * (ny+1), -1 when unused

  double x(int i) const { return -0.5 * length + length * i / nx; }
  double y(int j) const { return -0.5 * width + width * j / ny; }
  bool kept(int i, int j) const { return keep[j * nx + i] != 0; }
};

SwimmerMesh mesh_from_grid(Grid& g, double thickness, std::vector<int>* cell_of_triangle) {
  SwimmerMesh mesh;
  mesh.thickness = thickness;
  g.node_id.assign((g.nx + 1) * (g.ny + 1), -1);
  auto nid = [&](int i, int j) -> int {
    int& id = g.node_id[j * (g.nx + 1) + i];
    if (id < 0) {
      id = static_cast<int>(mesh.nodes.size());
      mesh.nodes.emplace_back(g.x(i), g.y(j), 0.0);
    }
    return id;
  };
  // Node numbering follows row-major cell order so it is deterministic.
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (!g.kept(i, j)) continue;
      const int a = nid(i, j), b = nid(i + 1, j), c = nid(i + 1, j + 1), d = nid(i, j + 1);
      // Checkerboard diagonals: with even cell counts the centre lines are grid
      // lines and the mesh is mirror symmetric about both, so it has no chirality.
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
      if (cell_of_triangle) {
        cell_of_triangle->push_back(j * g.nx + i);
        cell_of_triangle->push_back(j * g.nx + i);
      }
    }
  }
  mesh.reference_nodes = mesh.nodes;
  mesh.magnetization.assign(mesh.triangles.size(), Vec3::Zero());
  mesh.active.assign(mesh.triangles.size(), 0);
  mesh.magnetizable.assign(mesh.triangles.size(), 1);
  return mesh;
}

// Smallest even cell count whose spacing does not exceed ds.
int cells_across(double extent, double ds) {
  const int n = static_cast<int>(std::ceil(extent / ds - 1e-9));
  return n % 2 == 0 ? n : n + 1;
}

}  // namespace

SwimmerMesh build_swimmer(const SwimmerDesign& d) {
  validate(d);
  const int nx = cells_across(d.length, d.mesh_resolution);
  int ny = cells_across(d.width, d.mesh_resolution);
  if (std::min(d.length, d.width) / d.mesh_resolution < 2.5 || std::min(nx, ny) < 3)
    throw ModelError("design: mesh_resolution leaves fewer than 3 elements across the body");

  const bool needs_active = d.kind != DesignKind::AnguilliformLike;
  if (needs_active && d.magnetic_fraction == 0.0 && d.kind != DesignKind::CarangiformLike)
    throw ModelError("design: this swimmer requires a magnetized region (magnetic_fraction > 0)");

  Grid g;
  g.nx = nx;
  g.length = d.length;
  g.width = d.width;

  // Finger planform: base strip of 0.4 L at the leading (+x) end, three flaps
  // trailing towards -x, separated by slits of at least one cell.
  int base_cols = 0, gap_rows = 0, flap_rows = 0;
  if (d.kind == DesignKind::FingerShaped) {
    gap_rows = std::max(1, static_cast<int>(std::lround(ny / 10.0)));
    // Even flap width keeps ny even.
    flap_rows = 2 * std::max(1, static_cast<int>(std::lround((ny - 2.0 * gap_rows) / 6.0)));
    ny = 3 * flap_rows + 2 * gap_rows;
    base_cols = std::max(1, static_cast<int>(std::lround(0.4 * nx)));
  }
  g.ny = ny;
  g.keep.assign(nx * ny, 1);

  auto flap_of_row = [&](int j) {  // 0, 1, 2 for flaps; -1 in a slit
    const int period = flap_rows + gap_rows;
    const int k = j / period, r = j % period;
    return r < flap_rows ? k : -1;
  };
  if (d.kind == DesignKind::FingerShaped) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx - base_cols; ++i)
        if (flap_of_row(j) < 0) g.keep[j * nx + i] = 0;
  }

  std::vector<int> cell_of;
  SwimmerMesh mesh = mesh_from_grid(g, d.thickness, &cell_of);

  const double m = d.magnetization;
  // Magnetized length in cells. The boundary column carries the covered
  // fraction of the moment so the total matches L0 on any grid.
  const double active_cells = d.magnetic_fraction * nx;
  auto head_cover = [&](int i, double cells) { return std::clamp(i + 1 - (nx - cells), 0.0, 1.0); };
  auto tail_cover = [&](int i, double cells) { return std::clamp(cells - i, 0.0, 1.0); };
  for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
    const int i = cell_of[e] % nx;
    const int j = cell_of[e] / nx;
    Vec3 mag = Vec3::Zero();
    switch (d.kind) {
      case DesignKind::AnguilliformLike: {
        // Half turn in the x-z plane: -x at the tail, +z mid-body, +x at the head.
        // A pattern with definite parity about mid-body would not swim.
        const double theta = kPi * (1.0 - (i + 0.5) / nx);
        mag = head_cover(i, active_cells) * m * Vec3(std::cos(theta), 0.0, std::sin(theta));
        break;
      }
      case DesignKind::CarangiformLike:
        mag = head_cover(i, active_cells) * Vec3(m, 0, 0);
        break;
      case DesignKind::DragInduced:
        mag = head_cover(i, active_cells) * Vec3(0, m, 0);
        break;
      case DesignKind::FieldInduced: {
        const double strip = 0.5 * active_cells;
        mag = (head_cover(i, strip) - tail_cover(i, strip)) * Vec3(0, m, 0);
        break;
      }
      case DesignKind::FingerShaped: {
        const bool central_flap = i < nx - base_cols && flap_of_row(j) == 1;
        if (central_flap) mesh.magnetizable[e] = 0;
        else mag = head_cover(i, active_cells) * Vec3(0, m, 0);
        break;
      }
    }
    mesh.magnetization[e] = mag;
    mesh.active[e] = mag.squaredNorm() > 0.0 ? 1 : 0;
  }

  // Stations: full-width columns. For the finger design only the base spans the width.
  const int first_station = d.kind == DesignKind::FingerShaped ? nx - base_cols : 0;
  for (int i = first_station; i <= nx; ++i) {
    const int a = g.node_id[i];
    const int b = g.node_id[ny * (nx + 1) + i];
    if (a >= 0 && b >= 0) mesh.stations.push_back({a, b});
  }
  return mesh;
}

SwimmerMesh rotate_mesh(const SwimmerMesh& mesh, const Mat3& r) {
  SwimmerMesh out = mesh;
  const Vec3 c = centroid(mesh.nodes);
  const Vec3 cr = centroid(mesh.reference_nodes);
  for (auto& x : out.nodes) x = c + r * (x - c);
  for (auto& x : out.reference_nodes) x = cr + r * (x - cr);
  for (auto& m : out.magnetization) m = r * m;
  return out;
}

SwimmerMesh apply_tilt(const SwimmerMesh& mesh, const TiltSpec& tilt) {
  for (double a : {tilt.roll, tilt.pitch, tilt.yaw})
    if (!(a >= 0.0 && a <= 90.0)) throw ModelError("tilt angles must lie in [0, 90] degrees");
  if (tilt.roll == 0.0 && tilt.pitch == 0.0 && tilt.yaw == 0.0) return mesh;
  return rotate_mesh(mesh, tilt_rotation(tilt));
}

SwimmerMesh build_sphere_shell(double radius, int n_points) {
  if (n_points < 100) throw ModelError("sphere shell needs n_points >= 100");
  if (!(radius > 0)) throw ModelError("sphere radius must be positive");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Points v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
              {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  while (static_cast<int>(v.size()) < n_points) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * f.size());
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  SwimmerMesh mesh;
  for (auto& p : v) mesh.nodes.push_back(radius * p);
  mesh.reference_nodes = mesh.nodes;
  mesh.triangles = std::move(f);
  mesh.magnetization.assign(mesh.triangles.size(), Vec3::Zero());
  mesh.active.assign(mesh.triangles.size(), 0);
  mesh.magnetizable.assign(mesh.triangles.size(), 1);
  mesh.thickness = 0.01 * radius;
  return mesh;
}

SwimmerMesh build_plate(double length, double width, int nx, int ny, double thickness) {
  if (nx < 1 || ny < 1) throw ModelError("plate needs at least one cell in each direction");
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.length = length;
  g.width = width;
  g.keep.assign(nx * ny, 1);
  SwimmerMesh mesh = mesh_from_grid(g, thickness, nullptr);
  for (auto* pts : {&mesh.nodes, &mesh.reference_nodes})
    for (auto& x : *pts) x.x() += 0.5 * length;
  for (int i = 0; i <= nx; ++i) mesh.stations.push_back({g.node_id[i], g.node_id[ny * (nx + 1) + i]});
  return mesh;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

std::vector<double> element_areas(const Points& nodes, const SwimmerMesh& mesh) {
  std::vector<double> out;
  out.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) out.push_back(triangle_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]));
  return out;
}

double total_area(const SwimmerMesh& mesh) {
  double a = 0;
  for (double x : element_areas(mesh.reference_nodes, mesh)) a += x;
  return a;
}

double active_area_fraction(const SwimmerMesh& mesh) {
  const auto areas = element_areas(mesh.reference_nodes, mesh);
  double mmax = 0;
  for (const Vec3& m : mesh.magnetization) mmax = std::max(mmax, m.norm());
  double active = 0, total = 0;
  for (std::size_t e = 0; e < areas.size(); ++e) {
    if (e < mesh.magnetizable.size() && !mesh.magnetizable[e]) continue;
    total += areas[e];
    if (mesh.active[e] && mmax > 0) active += areas[e] * mesh.magnetization[e].norm() / mmax;
  }
  return total > 0 ? active / total : 0.0;
}

double mean_edge_length(const SwimmerMesh& mesh) {
  const auto edges = mesh_edges(mesh);
  double s = 0;
  for (const auto& e : edges) s += (mesh.reference_nodes[e[0]] - mesh.reference_nodes[e[1]]).norm();
  return edges.empty() ? 0.0 : s / static_cast<double>(edges.size());
}

std::vector<std::array<int, 2>> mesh_edges(const SwimmerMesh& mesh) {
  std::vector<std::array<int, 2>> e;
  e.reserve(3 * mesh.triangles.size());
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      const auto [a, b] = std::minmax(t[k], t[(k + 1) % 3]);
      e.push_back({a, b});
    }
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

void write_mesh(std::ostream& out, const SwimmerMesh& mesh, const Points& nodes) {
  std::ostringstream s;
  s.precision(17);
  s << nodes.size() << ' ' << mesh.triangles.size() << '\n';
  for (const auto& x : nodes) s << "v " << x.x() << ' ' << x.y() << ' ' << x.z() << '\n';
  for (const auto& t : mesh.triangles) s << "f " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << s.str();
}

void write_mesh(std::ostream& out, const SwimmerMesh& mesh) { write_mesh(out, mesh, mesh.nodes); }

SwimmerMesh read_mesh(std::istream& in) {
  std::size_t nv = 0, nf = 0;
  if (!(in >> nv >> nf)) throw ModelError("mesh: missing 'V F' header");
  SwimmerMesh mesh;
  std::string tag;
  for (std::size_t i = 0; i < nv; ++i) {
    Vec3 x;
    if (!(in >> tag >> x.x() >> x.y() >> x.z()) || tag != "v") throw ModelError("mesh: bad vertex line");
    mesh.nodes.push_back(x);
  }
  for (std::size_t i = 0; i < nf; ++i) {
    std::array<int, 3> t{};
    if (!(in >> tag >> t[0] >> t[1] >> t[2]) || tag != "f") throw ModelError("mesh: bad face line");
    for (int k : t)
      if (k < 0 || static_cast<std::size_t>(k) >= nv) throw ModelError("mesh: face index out of range");
    mesh.triangles.push_back(t);
  }
  mesh.reference_nodes = mesh.nodes;
  mesh.magnetization.assign(nf, Vec3::Zero());
  mesh.active.assign(nf, 0);
  mesh.magnetizable.assign(nf, 1);
  return mesh;
}

void write_magnetization_csv(std::ostream& out, const SwimmerMesh& mesh) {
  std::ostringstream s;
  s.precision(17);
  s << "element_index,mx,my,mz,active\n";
  for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
    const Vec3& m = mesh.magnetization[e];
    s << e << ',' << m.x() << ',' << m.y() << ',' << m.z() << ',' << (mesh.active[e] ? 1 : 0) << '\n';
  }
  out << s.str();
}

}  // namespace magswim
