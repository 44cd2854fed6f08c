#include <gtest/gtest.h>

#include "magswim/config.hpp"
#include "magswim/dynamics.hpp"

using namespace magswim;

namespace {

SimConfig coarse(DesignKind kind, double mn, double fn) {
  return default_sim_config(kind, mn, fn, 0.5e-3, 500);
}

CycleDiagnostics cycle_with(double dx, double lbar) {
  CycleDiagnostics c;
  c.displacement = Vec3(dx, 0, 0);
  c.blpc = dx / lbar;
  c.min_self_distance = 1.0;
  return c;
}

}  // namespace

TEST(Blpc, Definition) {
  Trajectory t;
  t.lbar = 5e-3;
  t.thickness = 1e-4;
  for (int k = 0; k < 3; ++k) t.cycles.push_back(cycle_with(0.5e-3, t.lbar));
  EXPECT_NEAR(compute_blpc(t), 0.1, 1e-15);
}

TEST(Blpc, StationarySwimmer) {
  Trajectory t;
  t.lbar = 5e-3;
  for (int k = 0; k < 3; ++k) t.cycles.push_back(cycle_with(0.0, t.lbar));
  EXPECT_EQ(compute_blpc(t), 0.0);
}

TEST(Blpc, MeanOfLastTwoCycles) {
  Trajectory t;
  t.lbar = 1.0;
  for (double d : {0.5, 0.1, 0.2}) t.cycles.push_back(cycle_with(d, 1.0));
  EXPECT_NEAR(compute_blpc(t), 0.15, 1e-15);
  t.cycles.resize(1);
  EXPECT_THROW(compute_blpc(t), ModelError);
}

TEST(Regime, Classification) {
  Trajectory t;
  t.lbar = 1.0;
  t.thickness = 1e-4;
  t.steady = true;
  for (int k = 0; k < 5; ++k) t.cycles.push_back(cycle_with(0.1, 1.0));
  EXPECT_EQ(detect_regime(t), Regime::OK);

  Trajectory slow = t;
  for (auto& c : slow.cycles) c.blpc = 0.001;
  EXPECT_EQ(detect_regime(slow), Regime::Floppy);

  Trajectory unsteady = t;
  unsteady.steady = false;
  EXPECT_EQ(detect_regime(unsteady), Regime::NotConverged);

  Trajectory twisted = t;
  twisted.cycles[2].max_twist = 7.0;
  EXPECT_EQ(detect_regime(twisted), Regime::Coiling);

  Trajectory touching = twisted;
  touching.cycles[1].min_self_distance = 0.5e-4;
  EXPECT_EQ(detect_regime(touching), Regime::SelfContact);
}

TEST(Regime, NamesRoundTrip) {
  for (Regime r : {Regime::OK, Regime::SelfContact, Regime::Coiling, Regime::Floppy, Regime::NotConverged})
    EXPECT_EQ(regime_from_string(to_string(r)), r);
}

TEST(SelfContact, FlatSheetIsClear) {
  const SwimmerMesh m = build_plate(4e-3, 1e-3, 16, 4, 1e-4);
  // Triangles closer than the reference gap are never compared, so a flat sheet
  // sits at least that far from itself.
  EXPECT_GE(min_self_distance(m, m.nodes, 1e-3), kContactReferenceGap * m.thickness);
}

TEST(SelfContact, FoldedSheetTouches) {
  const double len = 4e-3, h = 1e-4;
  const SwimmerMesh m = build_plate(len, 1e-3, 16, 4, h);
  // Fold the far half back over the near half with a gap of h / 2.
  Points folded = m.nodes;
  for (Vec3& p : folded)
    if (p.x() > len / 2) p = Vec3(len - p.x(), p.y(), h / 2);
  const double d = min_self_distance(m, folded, 1e-3);
  EXPECT_LT(d, h);
  // The crease triangles slope down to the fold line, so slightly under h / 2.
  EXPECT_GT(d, 0.4 * h);
  EXPECT_LE(d, h / 2 + 1e-15);
}

TEST(Twist, UniformHelicalStrip) {
  SwimmerDesign d;
  d.kind = DesignKind::AnguilliformLike;
  d.length = 5e-3;
  d.width = 0.625e-3;
  d.magnetic_fraction = 1.0;
  d.mesh_resolution = 0.25e-3;
  const SwimmerMesh m = build_swimmer(d);
  ASSERT_GE(m.stations.size(), 2u);
  const double total = 1.5 * kPi;
  Points x = m.nodes;
  const double x0 = m.nodes[m.stations.front()[0]].x();
  const double x1 = m.nodes[m.stations.back()[0]].x();
  for (Vec3& p : x) p = rotation_x(total * (p.x() - x0) / (x1 - x0)) * p;
  EXPECT_NEAR(std::abs(centerline_twist(m, x)), total, 1e-9);
  EXPECT_NEAR(centerline_twist(m, m.nodes), 0.0, 1e-15);
}

TEST(Flowrates, ZeroForcesGiveZero) {
  const SwimmerMesh m = build_plate(4e-3, 1e-3, 8, 2, 1e-4);
  const FlowRates q = compute_flowrates(m.nodes, Points(m.node_count(), Vec3::Zero()), FluidParams{1.0, 1e-4},
                                        ProbeSpec{}, centroid(m.nodes), 2e-3, 0.2);
  EXPECT_EQ(q.qx, 0.0);
  EXPECT_EQ(q.qy, 0.0);
  EXPECT_EQ(q.qz, 0.0);
}

TEST(Flowrates, ProbesRespectExclusion) {
  const SwimmerMesh m = build_plate(4e-3, 1e-3, 8, 2, 1e-4);
  const double eps = 2e-4;
  ProbeSpec spec;
  const Points probes = probe_box(m.nodes, spec, centroid(m.nodes), 2e-3, eps);
  EXPECT_LT(probes.size(), 16u * 16u * 16u);
  for (const Vec3& p : probes)
    for (const Vec3& q : m.nodes) EXPECT_GE((p - q).norm(), spec.exclusion_factor * eps);
}

TEST(Flowrates, UniformDragNormalization) {
  // A single far-away point force gives the regularized stokeslet at every probe;
  // Q_k is its mean |u_k| scaled by T / Lbar.
  const Points src = {Vec3(0, 0, 0)};
  const Points f = {Vec3(0, 0, 1e-6)};
  const FluidParams fluid{1e-3, 1e-5};
  ProbeSpec spec;
  spec.resolution = 4;
  const Vec3 center(0, 0, 1.0);
  const FlowRates q = compute_flowrates(src, f, fluid, spec, center, 1e-3, 0.2);
  const Points probes = probe_box(src, spec, center, 1e-3, fluid.regularization);
  const Points u = flow_at_probes(src, f, probes, fluid);
  double mz = 0;
  for (const Vec3& v : u) mz += std::abs(v.z());
  EXPECT_NEAR(q.qz, mz / u.size() * 0.2 / 1e-3, 1e-12 * q.qz);
}

TEST(Simulator, NullFieldLeavesRestStateUnchanged) {
  const SimConfig c = coarse(DesignKind::CarangiformLike, 0.0, 5.0);
  Simulator sim(c);
  const Points start = sim.state().nodes;
  for (int i = 0; i < 20; ++i) sim.step();
  for (std::size_t i = 0; i < start.size(); ++i) EXPECT_EQ((sim.state().nodes[i] - start[i]).norm(), 0.0);
}

TEST(Simulator, InternalForcesHaveZeroResultant) {
  const SimConfig c = coarse(DesignKind::FingerShaped, 191.0, 5.0);
  Simulator sim(c);
  for (int i = 0; i < 30; ++i) sim.step();
  const Points f = sim.total_forces(sim.state().nodes, sim.state().time);
  Vec3 net = Vec3::Zero();
  double scale = 0;
  for (const Vec3& v : f) {
    net += v;
    scale = std::max(scale, v.norm());
  }
  ASSERT_GT(scale, 0.0);
  EXPECT_LT(net.norm(), 1e-10 * scale * f.size());
}

TEST(Simulator, SubstepRuleBoundsNodeMotion) {
  const SimConfig c = coarse(DesignKind::FingerShaped, 400.0, 5.0);
  Simulator sim(c);
  for (int i = 0; i < 50; ++i) {
    const Points before = sim.state().nodes;
    sim.step();
    double worst = 0;
    for (std::size_t k = 0; k < before.size(); ++k) worst = std::max(worst, (sim.state().nodes[k] - before[k]).norm());
    // A nominal step may consist of up to 2^level substeps of at most 0.1 ds each.
    EXPECT_LE(worst, 0.1 * sim.spacing() * (1 << sim.state().substep_level) + 1e-15);
  }
}

TEST(Simulator, RigidRotationOfMeshAndFieldIsEquivariant) {
  SimConfig a = coarse(DesignKind::CarangiformLike, 300.0, 5.0);
  a.n_cycles_max = 2;
  a.stop_at_steady = false;
  SimConfig b = a;
  b.frame = tilt_rotation({20, -35, 50});
  const Trajectory ta = run(a);
  const Trajectory tb = run(b);
  for (int k = 0; k < 2; ++k) {
    const Vec3 da = b.frame * ta.cycles[k].displacement;
    EXPECT_LT((tb.cycles[k].displacement - da).norm(), 1e-8 * a.lbar());
    EXPECT_NEAR(tb.cycles[k].blpc, ta.cycles[k].blpc, 1e-8);
  }
}

TEST(Simulator, SetFieldRejectsPeriodChange) {
  const SimConfig c = default_sim_config(DesignKind::FieldInduced, 100.0, 5.0, 0.25e-3, 500);
  Simulator sim(c);
  FieldSchedule other = c.field;
  other.segments[0].program.frequency *= 2;
  EXPECT_THROW(sim.set_field(other), ModelError);
}

TEST(Simulator, ValidationNamesTheKey) {
  SimConfig c = coarse(DesignKind::CarangiformLike, 100.0, 5.0);
  c.dt = c.period() / 100;
  try {
    validate(c);
    FAIL() << "expected a ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("dt"), std::string::npos);
  }
}
