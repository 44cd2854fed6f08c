#include "magswim/hydrodynamics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace magswim {

void validate(const FluidParams& fluid) {
  if (!(fluid.viscosity > 0)) throw ModelError("fluid: viscosity must be positive");
  if (!(fluid.regularization > 0)) throw ModelError("fluid: regularization must be positive");
}

Vec3 stokeslet_regularized(const Vec3& r, const Vec3& f, double mu, double eps) {
  const double r2 = r.squaredNorm();
  const double e2 = eps * eps;
  const double d = r2 + e2;
  const double scale = 1.0 / (8.0 * kPi * mu * d * std::sqrt(d));
  return scale * ((r2 + 2.0 * e2) * f + f.dot(r) * r);
}

Mat3 stokeslet_block(const Vec3& r, double mu, double eps) {
  const double r2 = r.squaredNorm();
  const double e2 = eps * eps;
  const double d = r2 + e2;
  const double scale = 1.0 / (8.0 * kPi * mu * d * std::sqrt(d));
  return scale * ((r2 + 2.0 * e2) * Mat3::Identity() + r * r.transpose());
}

MobilityOperator::MobilityOperator(Points points, const FluidParams& fluid)
    : points_(std::move(points)), fluid_(fluid) {
  validate(fluid_);
  const std::size_t n = points_.size();
  if (n == 0) throw ModelError("mobility: needs at least one point");
  if (n > kMobilityPointCap)
    throw ModelError("mobility: " + std::to_string(n) + " points exceeds the cap of " +
                     std::to_string(kMobilityPointCap));
  matrix_.resize(3 * n, 3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    matrix_.block<3, 3>(3 * i, 3 * i) = stokeslet_block(Vec3::Zero(), fluid_.viscosity, fluid_.regularization);
    for (std::size_t j = i + 1; j < n; ++j) {
      const Mat3 b = stokeslet_block(points_[i] - points_[j], fluid_.viscosity, fluid_.regularization);
      matrix_.block<3, 3>(3 * i, 3 * j) = b;
      matrix_.block<3, 3>(3 * j, 3 * i) = b;
    }
  }
}

Eigen::VectorXd MobilityOperator::apply(const Eigen::VectorXd& forces) const {
  if (forces.size() != matrix_.cols()) throw ModelError("mobility: force vector has the wrong dimension");
  return matrix_ * forces;
}

Eigen::VectorXd MobilityOperator::solve(const Eigen::VectorXd& velocities) const {
  if (velocities.size() != matrix_.cols()) throw ModelError("mobility: velocity vector has the wrong dimension");
  Eigen::LLT<Eigen::MatrixXd> llt(matrix_);
  if (llt.info() != Eigen::Success) throw ModelError("mobility: operator is not positive definite");
  return llt.solve(velocities);
}

MobilityOperator build_mobility(const Points& points, const FluidParams& fluid) {
  return MobilityOperator(points, fluid);
}

Points velocities_from_forces(const MobilityOperator& op, const Points& forces) {
  if (forces.size() != op.size()) throw ModelError("mobility: force count does not match the operator");
  return unstack(op.apply(stack(forces)));
}

Points apply_mobility(const Points& x, const Points& f, const FluidParams& fluid) {
  if (x.size() != f.size()) throw ModelError("mobility: force count does not match the points");
  const std::size_t n = x.size();
  const double mu = fluid.viscosity;
  const double e2 = fluid.regularization * fluid.regularization;
  const double c = 1.0 / (8.0 * kPi * mu);
  Points u(n, Vec3::Zero());
  // Pairwise symmetric accumulation; each (i, j) kernel is evaluated once and the
  // order of additions is fixed by the loop nest.
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 xi = x[i];
    const Vec3 fi = f[i];
    Vec3 ui = (2.0 * e2 * c / (e2 * std::sqrt(e2))) * fi;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3 r = xi - x[j];
      const double r2 = r.squaredNorm();
      const double d = r2 + e2;
      const double s = c / (d * std::sqrt(d));
      const double a = s * (r2 + 2.0 * e2);
      const Vec3 fj = f[j];
      ui += a * fj + (s * fj.dot(r)) * r;
      u[j] += a * fi + (s * fi.dot(r)) * r;
    }
    u[i] += ui;
  }
  return u;
}

Points flow_at_probes(const Points& x, const Points& f, const Points& probes, const FluidParams& fluid) {
  if (x.size() != f.size()) throw ModelError("flow: force count does not match the points");
  Points u(probes.size(), Vec3::Zero());
  for (std::size_t p = 0; p < probes.size(); ++p)
    for (std::size_t j = 0; j < x.size(); ++j)
      u[p] += stokeslet_regularized(probes[p] - x[j], f[j], fluid.viscosity, fluid.regularization);
  return u;
}

Vec3 rigid_translation_force(const Points& points, const FluidParams& fluid, const Vec3& velocity) {
  const MobilityOperator op(points, fluid);
  Eigen::VectorXd u(3 * points.size());
  for (std::size_t i = 0; i < points.size(); ++i) u.segment<3>(3 * i) = velocity;
  const Eigen::VectorXd f = op.solve(u);
  Vec3 total = Vec3::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) total += f.segment<3>(3 * i);
  return total;
}

double mean_nearest_spacing(const Points& p) {
  if (p.size() < 2) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p.size(); ++j)
      if (j != i) best = std::min(best, (p[i] - p[j]).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(p.size());
}

}  // namespace magswim
