#include "magswim/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "magswim/config.hpp"

namespace magswim {

double sphere_drag_ratio(int n_points, double blob_factor) {
  const double radius = 1.0, mu = 1.0;
  const SwimmerMesh s = build_sphere_shell(radius, n_points);
  FluidParams fluid{mu, blob_factor * mean_edge_length(s)};
  const Vec3 f = rigid_translation_force(s.nodes, fluid, Vec3::UnitX());
  return f.x() / (6.0 * kPi * mu * radius);
}

double elastic_force_fd_error(const SwimmerMesh& mesh, const MaterialParams& material, const Points& x,
                              double step) {
  const ElasticModel model(mesh, material);
  const Points f = model.forces(x).forces;
  double fmax = 0.0, err = 0.0;
  for (const auto& v : f) fmax = std::max(fmax, v.cwiseAbs().maxCoeff());
  Points y = x;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      y[i][c] = x[i][c] + step;
      const double up = model.energy(y);
      y[i][c] = x[i][c] - step;
      const double down = model.energy(y);
      y[i][c] = x[i][c];
      const double fd = -(up - down) / (2.0 * step);
      err = std::max(err, std::abs(fd - f[i][c]));
    }
  return fmax > 0 ? err / fmax : err;
}

Points perturbed_plate_nodes(const SwimmerMesh& plate, double amplitude, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double lx = 0, ly = 0;
  for (const auto& p : plate.reference_nodes) lx = std::max(lx, p.x()), ly = std::max(ly, std::abs(p.y()));
  Points x = plate.reference_nodes;
  for (auto& p : x) {
    p.z() += amplitude * std::sin(kPi * p.x() / lx) * std::cos(0.5 * kPi * p.y() / ly) + 0.2 * amplitude * u(rng);
    p.x() += 0.1 * amplitude * u(rng);
    p.y() += 0.1 * amplitude * u(rng);
  }
  return x;
}

std::vector<OracleResult> run_oracles() {
  std::vector<OracleResult> out;
  char buf[160];

  {
    const double r = sphere_drag_ratio(642);
    std::snprintf(buf, sizeof buf, "F / 6 pi mu R U = %.4f on 642 points", r);
    out.push_back({"stokes_drag", std::abs(r - 1.0) < 0.05, r, 1.0, buf});
  }
  {
    const SwimmerMesh plate = build_plate(1.0, 0.5, 6, 3, 0.02);
    MaterialParams m;
    m.youngs_modulus = 1.0;
    m.thickness = 0.02;
    m.bending_prefactor = kCalibratedBendingPrefactor;
    const Points x = perturbed_plate_nodes(plate, 0.05, 7);
    const double e = elastic_force_fd_error(plate, m, x, 1e-6);
    std::snprintf(buf, sizeof buf, "max |f - f_fd| / max |f| = %.2e on %zu nodes", e, plate.node_count());
    out.push_back({"elastic_gradient", e < 1e-4, e, 1e-4, buf});
  }
  {
    const double tip = cantilever_tip_deflection(10.0, 1.0, 0.1, 1.0, 1e-7);
    const double beam = euler_bernoulli_tip_deflection(10.0, 1.0, 0.1, 1.0, 1e-7);
    std::snprintf(buf, sizeof buf, "tip %.5f vs P L^3 / 3EI %.5f", tip, beam);
    out.push_back({"cantilever", std::abs(tip / beam - 1.0) < 0.05, tip / beam, 1.0, buf});
  }
  {
    SimConfig c = default_sim_config(DesignKind::CarangiformLike, 0.0, 5.0, 0.5e-3, 500);
    c.n_cycles_max = 2;
    c.stop_at_steady = false;
    const Trajectory t = run(c);
    double worst = 0.0;
    for (const auto& s : t.samples) worst = std::max(worst, (s.com - t.samples.front().com).norm());
    const double rel = worst / t.lbar;
    std::snprintf(buf, sizeof buf, "zero field: max COM excursion %.1e Lbar over 2 cycles", rel);
    out.push_back({"zero_field_null", rel < 1e-6, rel, 1e-6, buf});
  }
  return out;
}

}  // namespace magswim
