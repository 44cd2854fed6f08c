#include "magswim/elastica.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <Eigen/SparseCholesky>

namespace magswim {

namespace {

constexpr double kDegenerateAreaRatio = 1e-6;

void add_block(std::vector<Eigen::Triplet<double>>& t, int i, int j, const Mat3& m) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t.emplace_back(3 * i + r, 3 * j + c, m(r, c));
}

}  // namespace

double dihedral_angle(const Vec3& a, const Vec3& b, const Vec3& w1, const Vec3& w2) {
  const Vec3 e = b - a;
  const Vec3 n1 = (w1 - a).cross(w1 - b);
  const Vec3 n2 = (w2 - b).cross(w2 - a);
  const double sin_part = n1.cross(n2).dot(e) / e.norm();
  return std::atan2(sin_part, n1.dot(n2));
}

std::array<Vec3, 4> dihedral_gradient(const Vec3& a, const Vec3& b, const Vec3& w1, const Vec3& w2) {
  const Vec3 e = b - a;
  const double len = e.norm();
  const Vec3 n1 = (w1 - a).cross(w1 - b);
  const Vec3 n2 = (w2 - b).cross(w2 - a);
  const Vec3 g1 = n1 / n1.squaredNorm();
  const Vec3 g2 = n2 / n2.squaredNorm();
  const Vec3 dw1 = -len * g1;
  const Vec3 dw2 = -len * g2;
  const Vec3 da = -(((w1 - b).dot(e) / len) * g1 + ((w2 - b).dot(e) / len) * g2);
  const Vec3 db = ((w1 - a).dot(e) / len) * g1 + ((w2 - a).dot(e) / len) * g2;
  return {da, db, dw1, dw2};
}

ElasticModel::ElasticModel(const SwimmerMesh& mesh, const MaterialParams& mat)
    : n_nodes_(mesh.reference_nodes.size()), triangles_(mesh.triangles) {
  if (!(mat.youngs_modulus > 0) || !(mat.thickness > 0))
    throw ModelError("material: Young's modulus and thickness must be positive");
  const Points& x0 = mesh.reference_nodes;
  rest_areas_ = element_areas(x0, mesh);
  for (std::size_t e = 0; e < rest_areas_.size(); ++e)
    if (!(rest_areas_[e] > 0.0))
      throw DegenerateTriangleError(e, "reference element " + std::to_string(e) + " has zero area");

  // Directed edge (a, b) -> (triangle, opposite vertex). std::map keeps a fixed order.
  struct Side {
    int tri = -1, opposite = -1;
  };
  std::map<std::pair<int, int>, std::array<Side, 2>> edges;  // key (min, max)
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3], o = tri[(k + 2) % 3];
      auto& sides = edges[{std::min(a, b), std::max(a, b)}];
      // sides[0]: triangle traversing min -> max, sides[1]: max -> min
      sides[a < b ? 0 : 1] = Side{static_cast<int>(t), o};
    }
  }

  const double eh = mat.stretch_prefactor * mat.youngs_modulus * mat.thickness;
  const double kb = mat.bending_rigidity();
  for (const auto& [key, sides] : edges) {
    const auto [a, b] = key;
    const double rest = (x0[b] - x0[a]).norm();
    double area = 0;
    for (const auto& s : sides)
      if (s.tri >= 0) area += rest_areas_[s.tri];
    springs_.push_back({a, b, rest, eh * area / (rest * rest)});
    if (sides[0].tri >= 0 && sides[1].tri >= 0) {
      const int w1 = sides[0].opposite, w2 = sides[1].opposite;
      hinges_.push_back({a, b, w1, w2, dihedral_angle(x0[a], x0[b], x0[w1], x0[w2]), kb * rest * rest / area});
    }
  }
  build_pattern();
}

void ElasticModel::build_pattern() {
  std::vector<Eigen::Triplet<double>> t;
  auto touch = [&](int i, int j) { add_block(t, i, j, Mat3::Zero()); };
  for (const auto& s : springs_) {
    touch(s.a, s.a), touch(s.b, s.b), touch(s.a, s.b), touch(s.b, s.a);
  }
  for (const auto& h : hinges_) {
    const int id[4] = {h.a, h.b, h.w1, h.w2};
    for (int i : id)
      for (int j : id) touch(i, j);
  }
  pattern_.resize(3 * n_nodes_, 3 * n_nodes_);
  pattern_.setFromTriplets(t.begin(), t.end());
  pattern_.makeCompressed();
  // Offset of entry (3i, 3j + c) in the value array; rows 3i..3i+2 are contiguous.
  auto offsets = [&](int i, int j) {
    std::array<int, 3> o{};
    for (int c = 0; c < 3; ++c) {
      const int col = 3 * j + c;
      const int* begin = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[col];
      const int* end = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[col + 1];
      o[c] = static_cast<int>(std::lower_bound(begin, end, 3 * i) - pattern_.innerIndexPtr());
    }
    return o;
  };
  spring_slots_.clear();
  for (const auto& s : springs_)
    for (auto [i, j] : {std::pair{s.a, s.a}, {s.b, s.b}, {s.a, s.b}, {s.b, s.a}}) spring_slots_.push_back(offsets(i, j));
  hinge_slots_.clear();
  for (const auto& h : hinges_) {
    const int id[4] = {h.a, h.b, h.w1, h.w2};
    for (int i : id)
      for (int j : id) hinge_slots_.push_back(offsets(i, j));
  }
}

void ElasticModel::check_elements(const Points& x) const {
  if (x.size() != n_nodes_) throw ModelError("elastic: node count does not match the mesh");
  for (std::size_t e = 0; e < triangles_.size(); ++e) {
    const auto& t = triangles_[e];
    if (!(triangle_area(x[t[0]], x[t[1]], x[t[2]]) > kDegenerateAreaRatio * rest_areas_[e]))
      throw DegenerateTriangleError(e, "element " + std::to_string(e) + " degenerated");
  }
}

double ElasticModel::stretch_energy(const Points& x) const {
  double u = 0;
  for (const auto& s : springs_) {
    const double d = (x[s.b] - x[s.a]).norm() - s.rest;
    u += 0.5 * s.k * d * d;
  }
  return u;
}

double ElasticModel::bend_energy(const Points& x) const {
  double u = 0;
  for (const auto& h : hinges_) {
    const double d = dihedral_angle(x[h.a], x[h.b], x[h.w1], x[h.w2]) - h.rest_angle;
    u += h.k * d * d;
  }
  return u;
}

double ElasticModel::energy(const Points& x) const { return stretch_energy(x) + bend_energy(x); }

std::vector<double> ElasticModel::hinge_angles(const Points& x) const {
  std::vector<double> out;
  out.reserve(hinges_.size());
  for (const auto& h : hinges_) out.push_back(dihedral_angle(x[h.a], x[h.b], x[h.w1], x[h.w2]));
  return out;
}

ElasticForces ElasticModel::forces(const Points& x) const {
  check_elements(x);
  ElasticForces out;
  out.forces.assign(n_nodes_, Vec3::Zero());
  for (const auto& s : springs_) {
    const Vec3 e = x[s.b] - x[s.a];
    const double len = e.norm();
    const double d = len - s.rest;
    out.energy += 0.5 * s.k * d * d;
    const Vec3 f = (s.k * d / len) * e;
    out.forces[s.a] += f;
    out.forces[s.b] -= f;
  }
  for (const auto& h : hinges_) {
    const double d = dihedral_angle(x[h.a], x[h.b], x[h.w1], x[h.w2]) - h.rest_angle;
    out.energy += h.k * d * d;
    const auto g = dihedral_gradient(x[h.a], x[h.b], x[h.w1], x[h.w2]);
    const double c = -2.0 * h.k * d;
    out.forces[h.a] += c * g[0];
    out.forces[h.b] += c * g[1];
    out.forces[h.w1] += c * g[2];
    out.forces[h.w2] += c * g[3];
  }
  return out;
}

Eigen::SparseMatrix<double> ElasticModel::stiffness(const Points& x) const {
  Eigen::SparseMatrix<double> k = pattern_;
  stiffness_into(x, k);
  return k;
}

void ElasticModel::stiffness_into(const Points& x, Eigen::SparseMatrix<double>& k) const {
  if (k.rows() != pattern_.rows() || k.nonZeros() != pattern_.nonZeros() || !k.isCompressed()) k = pattern_;
  double* v = k.valuePtr();
  std::fill(v, v + k.nonZeros(), 0.0);
  auto add = [v](const std::array<int, 3>& slot, const Mat3& m, double sign) {
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 3; ++r) v[slot[c] + r] += sign * m(r, c);
  };
  std::size_t q = 0;
  for (const auto& s : springs_) {
    const Vec3 e = x[s.b] - x[s.a];
    const double len = e.norm();
    const Vec3 u = e / len;
    const Mat3 uu = u * u.transpose();
    const double transverse = std::max(0.0, 1.0 - s.rest / len);
    const Mat3 m = s.k * (uu + transverse * (Mat3::Identity() - uu));
    add(spring_slots_[q++], m, 1.0);
    add(spring_slots_[q++], m, 1.0);
    add(spring_slots_[q++], m, -1.0);
    add(spring_slots_[q++], m, -1.0);
  }
  q = 0;
  for (const auto& h : hinges_) {
    const auto g = dihedral_gradient(x[h.a], x[h.b], x[h.w1], x[h.w2]);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) add(hinge_slots_[q++], g[i] * g[j].transpose(), 2.0 * h.k);
  }
}

ElasticForces elastic_forces(const SwimmerMesh& mesh, const MaterialParams& material, const Points& current) {
  return ElasticModel(mesh, material).forces(current);
}

double euler_bernoulli_tip_deflection(double length, double width, double h, double e, double p) {
  const double inertia = width * h * h * h / 12.0;
  return p * length * length * length / (3.0 * e * inertia);
}

double cantilever_tip_deflection(double length, double width, double h, double e, double p, double prefactor) {
  if (!(length > 0) || !(width > 0) || !(h > 0) || !(e > 0)) throw ModelError("cantilever: invalid geometry");
  if (p == 0.0) return 0.0;
  // Square cells, four across the width. Columns 0 and 1 are clamped, so the
  // beam is measured from the second column.
  const int ny = 4;
  const double ds = width / ny;
  const int nx = static_cast<int>(std::lround(length / ds)) + 1;
  const SwimmerMesh mesh = build_plate(length + ds, width, nx, ny, h);
  MaterialParams mat;
  mat.youngs_modulus = e;
  mat.thickness = h;
  mat.bending_prefactor = prefactor;
  const ElasticModel model(mesh, mat);

  const std::size_t n = mesh.nodes.size();
  std::vector<int> free_dof(3 * n, -1);
  std::vector<int> tip;
  int n_free = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = mesh.nodes[i].x();
    if (xi > 1.0001 * ds)
      for (int c = 0; c < 3; ++c) free_dof[3 * i + c] = n_free++;
    if (xi > length + ds - 1e-9 * length) tip.push_back(static_cast<int>(i));
  }
  Points load(n, Vec3::Zero());
  for (int i : tip) load[i] = Vec3(0, 0, p / static_cast<double>(tip.size()));

  Points x = mesh.nodes;
  for (int iter = 0; iter < 50; ++iter) {
    const ElasticForces f = model.forces(x);
    const Eigen::SparseMatrix<double> k = model.stiffness(x);
    std::vector<Eigen::Triplet<double>> t;
    for (int col = 0; col < k.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
        const int r = free_dof[it.row()], c = free_dof[it.col()];
        if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
      }
    Eigen::SparseMatrix<double> kf(n_free, n_free);
    kf.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd rhs(n_free);
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c)
        if (free_dof[3 * i + c] >= 0) rhs[free_dof[3 * i + c]] = f.forces[i][c] + load[i][c];
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(kf);
    if (solver.info() != Eigen::Success) throw ModelError("cantilever: stiffness factorization failed");
    const Eigen::VectorXd dx = solver.solve(rhs);
    double step = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c)
        if (free_dof[3 * i + c] >= 0) {
          x[i][c] += dx[free_dof[3 * i + c]];
          step = std::max(step, std::abs(dx[free_dof[3 * i + c]]));
        }
    if (step < 1e-13 * length) {
      double z = 0;
      for (int i : tip) z += x[i].z();
      return z / static_cast<double>(tip.size());
    }
  }
  throw ModelError("cantilever: static solve did not converge");
}

double calibrate_bending_prefactor() {
  const double raw = cantilever_tip_deflection(10.0, 1.0, 0.1, 1.0, 1e-7, 1.0);
  return raw / euler_bernoulli_tip_deflection(10.0, 1.0, 0.1, 1.0, 1e-7);
}

}  // namespace magswim
