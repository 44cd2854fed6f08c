#pragma once

#include <string>
#include <vector>

#include "magswim/elastica.hpp"
#include "magswim/hydrodynamics.hpp"

namespace magswim {

/// Drag on a rigid icosphere shell translating at unit speed, over 6 pi mu R U.
double sphere_drag_ratio(int n_points, double blob_factor = kDefaultBlobFactor);

/// Largest |f - f_fd| over max |f|, f the analytic elastic force and f_fd the
/// central difference of the discrete energy with step `step`.
double elastic_force_fd_error(const SwimmerMesh& mesh, const MaterialParams& material, const Points& x,
                              double step);

/// Flat plate with a smooth out-of-plane bump and in-plane jitter; stays well
/// inside the elastic model's admissible range.
Points perturbed_plate_nodes(const SwimmerMesh& plate, double amplitude, unsigned seed);

struct OracleResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double target = 0.0;
  std::string detail;
};

/// Quick self-checks of the physics layers (a few seconds in total).
std::vector<OracleResult> run_oracles();

}  // namespace magswim
