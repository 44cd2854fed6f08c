#include <gtest/gtest.h>

#include "magswim/config.hpp"

using namespace magswim;

namespace {

std::string error_key(const std::string& text) {
  try {
    const KeyValueConfig cfg = KeyValueConfig::parse(text);
    sim_config_from(cfg);
    cfg.reject_unused();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

}  // namespace

TEST(KeyValue, ParsesCommentsAndWhitespace) {
  const auto cfg = KeyValueConfig::parse("# header\n\n design.kind =  finger  # trailing\nfield.Mn=191\n");
  EXPECT_EQ(cfg.get_string("design.kind", ""), "finger");
  EXPECT_EQ(cfg.get_double("field.Mn", 0), 191.0);
  EXPECT_EQ(cfg.values().size(), 2u);
}

TEST(KeyValue, RejectsMalformedLines) {
  EXPECT_THROW(KeyValueConfig::parse("design.kind finger\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse("= 3\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse("a = 1\na = 2\n"), ConfigError);
}

TEST(KeyValue, TypedGetters) {
  const auto cfg = KeyValueConfig::parse("a = 1.5\nb = 7\nc = yes\nd = 1, 2,3\ne = -y\nf = 0,0,2\ng = abc\n");
  EXPECT_EQ(cfg.get_double("a", 0), 1.5);
  EXPECT_EQ(cfg.get_int("b", 0), 7);
  EXPECT_TRUE(cfg.get_bool("c", false));
  EXPECT_EQ(cfg.get_list("d"), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(cfg.get_vec3("e", Vec3::Zero()), -Vec3::UnitY());
  EXPECT_EQ(cfg.get_vec3("f", Vec3::Zero()), Vec3(0, 0, 2));
  EXPECT_THROW(cfg.get_double("g", 0), ConfigError);
  EXPECT_THROW(cfg.get_int("a", 0), ConfigError);
  EXPECT_EQ(cfg.get_double("missing", 4.0), 4.0);
}

TEST(KeyValue, UnusedKeysAreReported) {
  const auto cfg = KeyValueConfig::parse("design.kind = finger\ndesign.colour = red\n");
  sim_config_from(cfg);
  try {
    cfg.reject_unused();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "design.colour");
  }
}

TEST(KeyValue, CanonicalIsOrderIndependent) {
  const auto a = KeyValueConfig::parse("x = 1\ny = 2\n");
  const auto b = KeyValueConfig::parse("y=2\n# c\nx = 1\n");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(fnv1a_hex(a.canonical()), fnv1a_hex(b.canonical()));
}

TEST(Fnv1a, ReferenceVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(SimConfigFrom, MinimalCarangiform) {
  const SimConfig c = sim_config_from(KeyValueConfig::parse("design.kind = carangiform\n"));
  EXPECT_EQ(c.design.kind, DesignKind::CarangiformLike);
  EXPECT_NEAR(c.design.magnetic_fraction, 0.55, 1e-15);
  EXPECT_NEAR(c.dt, c.period() / 2000, 1e-15);
  const NondimAnchors a = anchors_for(c.design, c.material, 5.0);
  EXPECT_NEAR(magnetoelastic_number(c.field.segments[0].program.amplitude, a), 500.0, 1e-9);
  EXPECT_NEAR(fluid_number(c.fluid.viscosity, a), 5.0, 1e-12);
}

TEST(SimConfigFrom, DtAboveLimitNamesDt) {
  EXPECT_EQ(error_key("sim.dt = 0.001\n"), "sim.dt");
  EXPECT_EQ(error_key("sim.dt = 0.0004\n"), "");
}

TEST(SimConfigFrom, SchemaErrorsCarryKeyPath) {
  EXPECT_EQ(error_key("design.kind = helix\n"), "design.kind");
  EXPECT_EQ(error_key("field.Mn = 100\nfield.B = 0.01\n"), "field.B");
  EXPECT_EQ(error_key("fluid.Fn = 5\nfluid.viscosity = 1\n"), "fluid.viscosity");
  EXPECT_EQ(error_key("fluid.Fn = 0\n"), "fluid.Fn");
  EXPECT_EQ(error_key("field.sense = 3\n"), "field.sense");
  EXPECT_EQ(error_key("design.L0_over_L = 1.2\n"), "design.L0_over_L");
  EXPECT_EQ(error_key("sim.n_cycles_max = 1\n"), "sim.n_cycles_max");
  EXPECT_EQ(error_key("field.Mn = abc\n"), "field.Mn");
  EXPECT_EQ(error_key("probes.resolution = 1\n"), "probes.resolution");
  EXPECT_EQ(error_key("tilt.spin = 4\n"), "tilt.spin");
}

TEST(SimConfigFrom, PhysicalAndNondimensionalInputsAgree) {
  const SimConfig a = sim_config_from(KeyValueConfig::parse("design.kind = finger\nfield.Mn = 191\nfluid.Fn = 5\n"));
  char text[200];
  std::snprintf(text, sizeof text, "design.kind = finger\nfield.B = %.17g\nfluid.viscosity = %.17g\n",
                a.field.segments[0].program.amplitude, a.fluid.viscosity);
  const SimConfig b = sim_config_from(KeyValueConfig::parse(text));
  EXPECT_DOUBLE_EQ(b.field.segments[0].program.amplitude, a.field.segments[0].program.amplitude);
  EXPECT_DOUBLE_EQ(b.fluid.viscosity, a.fluid.viscosity);
}

TEST(DesignDefaults, Table) {
  EXPECT_EQ(design_defaults(DesignKind::FingerShaped).mn, 191.0);
  EXPECT_EQ(design_defaults(DesignKind::AnguilliformLike).mn, 255.0);
  EXPECT_EQ(design_defaults(DesignKind::AnguilliformLike).l0_over_l, 1.0);
  EXPECT_EQ(design_defaults(DesignKind::CarangiformLike).field.kind, FieldKind::OscillatingDirectional);
  EXPECT_EQ(design_defaults(DesignKind::FieldInduced).field.kind, FieldKind::RotatingAboutX);
  for (auto k : {DesignKind::FingerShaped, DesignKind::FieldInduced, DesignKind::DragInduced,
                 DesignKind::CarangiformLike, DesignKind::AnguilliformLike}) {
    EXPECT_GE(design_defaults(k).mn, 0.0);
    EXPECT_LE(design_defaults(k).mn, 500.0);
  }
}

TEST(DefaultSimConfig, MatchesRequestedNumbers) {
  const SimConfig c = default_sim_config(DesignKind::DragInduced, 40, 15, 0.4e-3, 500);
  EXPECT_NEAR(c.dt, c.period() / 500, 1e-15);
  EXPECT_NEAR(c.design.mesh_resolution, 0.4e-3, 1e-15);
  const NondimAnchors a = anchors_for(c.design, c.material, 5.0);
  EXPECT_NEAR(magnetoelastic_number(c.field.segments[0].program.amplitude, a), 40, 1e-9);
  EXPECT_NEAR(fluid_number(c.fluid.viscosity, a), 15, 1e-9);
}
