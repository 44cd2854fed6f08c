#pragma once

#include <cstddef>

#include "magswim/types.hpp"

namespace magswim {

/// Regularization as a multiple of the mean collocation spacing when none is given.
inline constexpr double kDefaultBlobFactor = 0.75;
inline constexpr std::size_t kMobilityPointCap = 5000;

struct FluidParams {
  double viscosity = 1.0;       // Pa s
  double regularization = 0.0;  // blob radius eps, m
};

void validate(const FluidParams& fluid);

/// Blob-regularized free-space Stokeslet:
///   u = [(r^2 + 2 eps^2) f + (f.r) r] / (8 pi mu (r^2 + eps^2)^(3/2))
Vec3 stokeslet_regularized(const Vec3& r, const Vec3& f, double viscosity, double eps);
/// 3x3 block of the same kernel.
Mat3 stokeslet_block(const Vec3& r, double viscosity, double eps);

/// Dense 3N x 3N mobility over a fixed set of collocation points.
class MobilityOperator {
 public:
  MobilityOperator(Points points, const FluidParams& fluid);

  std::size_t size() const { return points_.size(); }
  const Points& points() const { return points_; }
  const FluidParams& fluid() const { return fluid_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& forces) const;
  /// Forces that produce the given point velocities (dense Cholesky).
  Eigen::VectorXd solve(const Eigen::VectorXd& velocities) const;

 private:
  Points points_;
  FluidParams fluid_;
  Eigen::MatrixXd matrix_;
};

MobilityOperator build_mobility(const Points& points, const FluidParams& fluid);

/// u = M f. Throws ModelError on a dimension mismatch.
Points velocities_from_forces(const MobilityOperator& op, const Points& forces);

/// Matrix-free u = M(points) f; same arithmetic as the dense operator, O(N^2).
Points apply_mobility(const Points& points, const Points& forces, const FluidParams& fluid);

/// Superposed regularized Stokeslets evaluated at arbitrary probes.
Points flow_at_probes(const Points& points, const Points& forces, const Points& probes, const FluidParams& fluid);

/// Total force needed to translate a rigid set of points at `velocity`.
Vec3 rigid_translation_force(const Points& points, const FluidParams& fluid, const Vec3& velocity);

/// Mean nearest-neighbour distance between points (brute force).
double mean_nearest_spacing(const Points& points);

}  // namespace magswim
