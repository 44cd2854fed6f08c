#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace magswim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = std::vector<Vec3>;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for all errors raised by the model layers.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A triangle collapsed below the admissible area during deformation.
class DegenerateTriangleError : public ModelError {
 public:
  DegenerateTriangleError(std::size_t element, const std::string& what)
      : ModelError(what), element_(element) {}
  std::size_t element() const { return element_; }

 private:
  std::size_t element_;
};

// Stacked [x0 y0 z0 x1 ...] <-> per-node vectors.
Eigen::VectorXd stack(const Points& p);
Points unstack(const Eigen::VectorXd& v);

Vec3 centroid(const Points& p);

}  // namespace magswim
