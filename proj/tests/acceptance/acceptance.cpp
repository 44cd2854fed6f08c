// Acceptance runs. Prints detail lines, then one PASS/FAIL line per criterion.
//
//   magswim_acceptance            all criteria
//   magswim_acceptance 4 7        selected criteria
//
// Exit status is 1 when any selected criterion fails.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "magswim/harness.hpp"
#include "magswim/oracles.hpp"

using namespace magswim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void detail(int k, const std::string& line) { std::cout << "  [" << k << "] " << line << std::endl; }

struct Outcome {
  bool pass = false;
  std::string summary;
};

std::string g17(double v) { return fmt("%.17g", v); }

const char* kKinds[] = {"finger", "field_induced", "drag_induced", "carangiform", "anguilliform"};

// Coarse mesh (ds <= 0.5 mm, at least four cells across) and dt = T/1000 for
// the runs that only need qualitative behaviour. T/500 is past the step's
// stability limit on the coarse finger mesh.
KeyValueConfig coarse_cfg(const std::string& kind, double mn, double fn) {
  const DesignDefaults dd = design_defaults(design_kind_from_string(kind));
  const double w = 5e-3 / dd.l_over_w;
  KeyValueConfig cfg;
  cfg.set("design.kind", kind);
  cfg.set("design.ds", g17(std::min(0.5e-3, w / 4.0)));
  cfg.set("field.Mn", g17(mn));
  cfg.set("fluid.Fn", g17(fn));
  cfg.set("sim.dt", g17(1.0 / dd.field.frequency / 1000.0));
  return cfg;
}

SimConfig coarse(const std::string& kind, double mn, double fn) { return sim_config_from(coarse_cfg(kind, mn, fn)); }

// Operating point of each design for the bidirectionality and stability
// runs. The drag-induced design is floppy at its stock loading, so it is run
// where it moves.
std::pair<double, double> operating_point(const std::string& kind) {
  if (kind == "drag_induced") return {40.0, 5.0};
  const DesignDefaults dd = design_defaults(design_kind_from_string(kind));
  return {dd.mn, dd.fn};
}

std::optional<RunSummary> carangiform_fine;  // default resolution, T/2000; shared by 4 and 10

// ---------------------------------------------------------------------------

Outcome c1() {
  const auto t0 = Clock::now();
  const double r = sphere_drag_ratio(642);
  const double dt = seconds_since(t0);
  detail(1, fmt("642-point icosphere: F / 6 pi mu R U = %.4f, %.1f s", r, dt));
  return {std::abs(r - 1.0) < 0.05 && dt < 30.0, fmt("sphere drag ratio %.4f (|err| < 5%%), %.1f s (< 30 s)", r, dt)};
}

Outcome c2() {
  // Finite differences of the energy, component by component.
  const SwimmerMesh plate = build_plate(1e-3, 0.5e-3, 6, 3, 1e-5);
  MaterialParams mat;
  mat.thickness = plate.thickness;
  mat.bending_prefactor = kCalibratedBendingPrefactor;
  const ElasticModel model(plate, mat);
  double worst = 0.0;
  for (unsigned seed : {1u, 2u, 3u}) {
    const Points x = perturbed_plate_nodes(plate, 0.05e-3, seed);
    const Points f = model.forces(x).forces;
    double fmax = 0.0;
    for (const auto& v : f) fmax = std::max(fmax, v.cwiseAbs().maxCoeff());
    const double h = 1e-7 * std::sqrt(1e-3 * 0.5e-3);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (int c = 0; c < 3; ++c) {
        Points xp = x, xm = x;
        xp[i][c] += h;
        xm[i][c] -= h;
        const double fd = -(model.energy(xp) - model.energy(xm)) / (2 * h);
        const double scale = std::max(std::abs(fd), 1e-3 * fmax);
        worst = std::max(worst, std::abs(f[i][c] - fd) / scale);
      }
  }
  detail(2, fmt("%zu-node plate, 3 perturbations: worst component error %.2e", plate.node_count(), worst));

  const double prefactor = calibrate_bending_prefactor();
  const double tip = cantilever_tip_deflection(10.0, 1.0, 0.1, 1.0, 1e-7, prefactor);
  const double beam = euler_bernoulli_tip_deflection(10.0, 1.0, 0.1, 1.0, 1e-7);
  const double ratio = tip / beam;
  // A second load and a different strip, both with the frozen prefactor.
  const double tip2 = cantilever_tip_deflection(8.0, 1.0, 0.05, 2.0, 2e-8);
  const double beam2 = euler_bernoulli_tip_deflection(8.0, 1.0, 0.05, 2.0, 2e-8);
  detail(2, fmt("cantilever: prefactor %.4f, tip / beam %.4f; second strip %.4f", prefactor, ratio, tip2 / beam2));
  const bool ok = plate.node_count() <= 50 && worst < 1e-4 && std::abs(ratio - 1) < 0.05 &&
                  std::abs(tip2 / beam2 - 1) < 0.05;
  return {ok, fmt("force FD error %.1e (< 1e-4), cantilever %.4f / %.4f (within 5%%)", worst, ratio, tip2 / beam2)};
}

Outcome c3() {
  bool ok = true;
  std::string summary;

  SimConfig null = coarse("carangiform", 0.0, 5.0);
  null.stop_at_steady = false;
  null.n_cycles_max = 5;
  const Trajectory tn = run(null);
  const double drift = (tn.samples.back().com - tn.samples.front().com).norm() / tn.lbar;
  detail(3, fmt("Mn = 0, 5 cycles: COM drift %.2e Lbar", drift));
  ok = ok && tn.cycles.size() == 5 && drift < 1e-6;
  summary += fmt("null drift %.1e Lbar", drift);

  KeyValueConfig full = coarse_cfg("carangiform", 300.0, 5.0);
  full.set("design.L0_over_L", "1");
  full.set("sim.n_cycles_max", "12");
  const RunSummary sf = summarize(run(sim_config_from(full)));
  detail(3, fmt("carangiform L0/L = 1 (300, 5): blpc %.5f, %s", sf.blpc, std::string(to_string(sf.regime)).c_str()));
  ok = ok && std::abs(sf.blpc) < 0.01;
  summary += fmt(", L0/L=1 blpc %.4f", sf.blpc);

  // Same run in a rotated frame: mesh and field rotated together.
  double worst = 0.0;
  for (const char* kind : {"carangiform", "finger"}) {
    SimConfig a = coarse(kind, kind == std::string("finger") ? 191.0 : 500.0, 5.0);
    a.stop_at_steady = false;
    a.n_cycles_max = 2;
    SimConfig b = a;
    b.frame = (rotation_z(0.7) * rotation_y(-0.4) * rotation_x(1.1));
    const Trajectory ta = run(a), tb = run(b);
    for (std::size_t k = 0; k < ta.cycles.size(); ++k) {
      const double e = (b.frame * ta.cycles[k].displacement - tb.cycles[k].displacement).norm() / ta.lbar;
      worst = std::max(worst, e);
    }
    detail(3, fmt("%s in a rotated frame: per-cycle displacement mismatch up to %.2e Lbar", kind, worst));
    ok = ok && ta.cycles.size() == 2 && tb.cycles.size() == 2;
  }
  ok = ok && worst < 1e-8;
  summary += fmt(", rotated-frame mismatch %.1e Lbar/cycle", worst);
  return {ok, summary};
}

RunSummary timed_default(const char* kind, double mn, double fn, double& secs) {
  const auto t0 = Clock::now();
  const RunSummary s = summarize(run(default_sim_config(design_kind_from_string(kind), mn, fn)));
  secs = seconds_since(t0);
  return s;
}

Outcome c4() {
  struct Case {
    const char* kind;
    double mn, fn, lo, hi;
  };
  bool ok = true;
  std::string summary;
  for (const Case& c : {Case{"finger", 191, 5, 0.155, 0.465}, Case{"carangiform", 500, 5, 0.06, 0.18},
                        Case{"anguilliform", 255, 5, 0.06, 0.18}}) {
    double secs = 0.0;
    const RunSummary s = timed_default(c.kind, c.mn, c.fn, secs);
    if (c.kind == std::string("carangiform")) carangiform_fine = s;
    const bool in = s.blpc >= c.lo && s.blpc <= c.hi && secs < 600.0;
    detail(4, fmt("%s (%g, %g): blpc %.4f in [%.3f, %.3f]? %s; %s after %d cycles; %.0f s", c.kind, c.mn, c.fn,
                  s.blpc, c.lo, c.hi, in ? "yes" : "no", std::string(to_string(s.regime)).c_str(), s.cycles, secs));
    ok = ok && in;
    summary += fmt("%s%s %.4f", summary.empty() ? "" : ", ", c.kind, s.blpc);
  }
  return {ok, summary};
}

Outcome c5() {
  std::map<std::string, double> best;
  for (const char* kind : kKinds) {
    KeyValueConfig base = coarse_cfg(kind, 0, 0);
    base.erase("field.Mn");
    base.erase("fluid.Fn");
    base.set("sim.n_cycles_max", "12");
    std::string text = base.canonical();
    text += "sweep.axis1.name = Mn\nsweep.axis1.values = 100, 200, 300, 400, 500\n"
            "sweep.axis2.name = Fn\nsweep.axis2.values = 5, 15\n";
    const SweepSpec spec = sweep_spec_from(KeyValueConfig::parse(text));
    const auto rows = run_sweep(spec, 1, 0, [](const SweepRecord&) {});
    double m = 0.0;
    std::string cells;
    for (const auto& r : rows) {
      cells += fmt(" (%g,%g)=%.3f%s", r.v1, r.v2, r.blpc, r.regime == Regime::OK ? "" : "*");
      if (r.regime == Regime::OK && std::isfinite(r.blpc)) m = std::max(m, std::abs(r.blpc));
    }
    best[kind] = m;
    detail(5, fmt("%s max OK |blpc| %.4f;%s", kind, m, cells.c_str()));
  }
  double other = 0.0;
  for (const auto& [k, v] : best)
    if (k != "finger") other = std::max(other, v);
  const double ratio = other > 0 ? best["finger"] / other : INFINITY;
  detail(5, "(* = not OK, excluded)");
  return {ratio >= 1.5, fmt("finger %.4f vs best other %.4f: ratio %.2f (>= 1.5)", best["finger"], other, ratio)};
}

Outcome c6() {
  bool ok = true;
  std::string summary;
  for (const char* kind : kKinds) {
    const auto [mn, fn] = operating_point(kind);
    const BidirReport r = run_bidirectionality(coarse(kind, mn, fn), 6, 3);
    const double fwd = r.forward.blpc, rev = r.reversed.blpc;
    const bool moving = std::abs(fwd) >= kFloppyBlpc;
    bool want;
    std::string rule;
    const std::string k = kind;
    if (k == "field_induced") {
      const double mag = std::abs(std::abs(rev) / std::abs(fwd) - 1.0);
      want = r.on_the_fly && mag < 0.05;
      rule = fmt("reverses on the fly, magnitude change %.1f%%", 100 * mag);
    } else if (k == "drag_induced" || k == "finger") {
      want = moving && !r.reverses && std::signbit(fwd) == std::signbit(rev);
      rule = "keeps its direction under a sense flip";
    } else {
      want = r.reverses && r.scenario == "reorientation";
      rule = "reverses after reorientation";
    }
    detail(6, fmt("%s (%g, %g) %s: forward %.4f (%s), reversed %.4f (%s); expected: %s -> %s", kind, mn, fn,
                  r.scenario.c_str(), fwd, std::string(to_string(r.forward.regime)).c_str(), rev,
                  std::string(to_string(r.reversed.regime)).c_str(), rule.c_str(), want ? "yes" : "no"));
    ok = ok && want;
    summary += fmt("%s%s %s", summary.empty() ? "" : ", ", kind, want ? "ok" : "MISMATCH");
  }
  return {ok, summary};
}

Outcome c7() {
  bool ok = true;
  std::string summary;
  auto check = [&](const char* label, const SimConfig& c, Regime want) {
    const Trajectory t = run(c);
    const RunSummary s = summarize(t);
    double dmin = INFINITY, twist = 0.0;
    for (const auto& d : t.cycles) {
      dmin = std::min(dmin, d.min_self_distance);
      twist = std::max(twist, std::abs(d.max_twist));
    }
    detail(7, fmt("%s: %s after %d cycles (blpc %.4f, min gap %.2f h, max twist %.2f rad); want %s", label,
                  std::string(to_string(s.regime)).c_str(), s.cycles, s.blpc, dmin / t.thickness, twist,
                  std::string(to_string(want)).c_str()));
    ok = ok && s.regime == want;
    summary += fmt("%s%s %s", summary.empty() ? "" : ", ", label, std::string(to_string(s.regime)).c_str());
  };

  SimConfig ang = default_sim_config(DesignKind::AnguilliformLike, 500, 5, 0.0, 500);
  ang.n_cycles_max = 12;
  check("anguilliform (500, 5)", ang, Regime::SelfContact);

  KeyValueConfig drag = coarse_cfg("drag_induced", 500, 30);
  drag.set("design.L0_over_L", "0.1");
  drag.set("sim.n_cycles_max", "12");
  check("drag_induced L0/L 0.1 (500, 30)", sim_config_from(drag), Regime::Coiling);

  KeyValueConfig finger = coarse_cfg("finger", 20, 5);
  finger.set("sim.n_cycles_max", "12");
  check("finger (20, 5)", sim_config_from(finger), Regime::Floppy);
  return {ok, summary};
}

// Cycle-5 blpc and regime of a fixed five-cycle run.
std::pair<double, Regime> cycle5(SimConfig c) {
  c.stop_at_steady = false;
  c.n_cycles_max = 5;
  try {
    const Trajectory t = run(c);
    const double b = t.cycles.size() >= 5 ? t.cycles[4].blpc : NAN;
    return {b, cycle_regime(t, 5)};
  } catch (const ModelError&) {
    return {NAN, Regime::NotConverged};
  }
}

Outcome c8() {
  bool ok = true;
  std::string summary;
  const double angles[] = {30.0, 60.0, 90.0};

  {
    const auto [mn, fn] = operating_point("carangiform");
    const auto [base, base_regime] = cycle5(coarse("carangiform", mn, fn));
    double worst = 0.0;
    for (const char* axis : {"roll", "pitch", "yaw"})
      for (double a : angles) {
        KeyValueConfig cfg = coarse_cfg("carangiform", mn, fn);
        cfg.set(std::string("tilt.") + axis, g17(a));
        const auto [b, r] = cycle5(sim_config_from(cfg));
        const double dev = std::abs(b / base - 1.0);
        worst = std::isfinite(dev) ? std::max(worst, dev) : INFINITY;
        detail(8, fmt("carangiform %s %g: cycle-5 blpc %.4f (%s), %.1f%% off baseline %.4f", axis, a, b,
                      std::string(to_string(r)).c_str(), 100 * dev, base));
      }
    ok = ok && base_regime == Regime::OK && worst < 0.2;
    summary += fmt("carangiform worst deviation %.1f%%", 100 * worst);
  }

  // Weak axis of each other design.
  const std::pair<const char*, const char*> weak[] = {
      {"anguilliform", "pitch"}, {"drag_induced", "yaw"}, {"field_induced", "pitch"}, {"finger", "roll"}};
  for (const auto& [kind, axis] : weak) {
    const auto [mn, fn] = operating_point(kind);
    const auto [base, base_regime] = cycle5(coarse(kind, mn, fn));
    bool found = false;
    std::string cells;
    for (double a : angles) {
      KeyValueConfig cfg = coarse_cfg(kind, mn, fn);
      cfg.set(std::string("tilt.") + axis, g17(a));
      const auto [b, r] = cycle5(sim_config_from(cfg));
      const bool deficit = !(std::copysign(1.0, base) * b > 0.5 * std::abs(base));
      const bool unstable = r != Regime::OK || deficit;
      found = found || unstable;
      cells += fmt(" %g: %.4f %s%s", a, b, std::string(to_string(r)).c_str(), unstable ? " (unstable)" : "");
    }
    detail(8, fmt("%s %s, baseline %.4f %s;%s", kind, axis, base, std::string(to_string(base_regime)).c_str(),
                  cells.c_str()));
    ok = ok && found;
    summary += fmt(", %s %s %s", kind, axis, found ? "unstable" : "stable");
  }
  return {ok, summary};
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i] / n, mb += b[i] / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Outcome c9() {
  SimConfig ang = coarse("anguilliform", 200, 10);
  ang.n_cycles_max = 12;
  const FlowFieldResult r = run_flowfield(ang, Plane::XZ, 50, 16);
  double qy = 0, qz = 0;
  std::vector<double> trace;
  for (const auto& q : r.q) {
    qy += std::abs(q.qy);
    qz += std::abs(q.qz);
    trace.push_back(q.qz);
  }
  const double ratio = qy / qz;
  const int harmonic = dominant_harmonic(trace);
  detail(9, fmt("anguilliform (200, 10): blpc %.4f, mean |Qy| / mean |Qz| = %.3f, Qz dominant harmonic %d", r.blpc,
                ratio, harmonic));

  std::vector<double> q, b;
  for (const char* kind : kKinds) {
    SimConfig c = coarse(kind, 200, 10);
    c.n_cycles_max = 12;
    c.flow_samples_per_cycle = 10;
    RunSummary s;
    try {
      s = summarize(run(c));
    } catch (const ModelError& e) {
      detail(9, std::string(kind) + ": " + e.what());
      continue;
    }
    detail(9, fmt("%s (200, 10): blpc %.4f, mean Qtotal %.4f, %s", kind, s.blpc, s.q_total,
                  std::string(to_string(s.regime)).c_str()));
    q.push_back(s.q_total);
    b.push_back(s.blpc);
  }
  const double corr = q.size() == 5 ? pearson(q, b) : NAN;
  detail(9, fmt("corr(Qtotal, blpc) over the five designs = %.3f", corr));
  return {ratio < 0.2 && harmonic == 2 && corr > 0.8,
          fmt("Qy/Qz %.3f (< 0.2), Qz period T/%d (T/2), corr %.3f (> 0.8)", ratio, harmonic, corr)};
}

Outcome c10() {
  bool ok = true;
  if (!carangiform_fine) {
    double secs = 0;
    carangiform_fine = timed_default("carangiform", 500, 5, secs);
  }
  const RunSummary half =
      summarize(run(default_sim_config(DesignKind::CarangiformLike, 500, 5, 0.0, 4000)));
  const double dt_change = std::abs(half.blpc / carangiform_fine->blpc - 1.0);
  detail(10, fmt("carangiform (500, 5): dt T/2000 blpc %.5f, dt T/4000 blpc %.5f, change %.2f%%",
                 carangiform_fine->blpc, half.blpc, 100 * dt_change));
  ok = ok && dt_change < 0.02;

  // Two physical parameterizations of the same (Mn, Fn): E, B and f doubled.
  const SimConfig a = coarse("carangiform", 400, 10);
  KeyValueConfig bcfg;
  bcfg.set("design.kind", "carangiform");
  bcfg.set("design.ds", g17(a.design.mesh_resolution));
  bcfg.set("material.E", g17(2 * a.material.youngs_modulus));
  bcfg.set("field.B", g17(2 * a.field.segments.front().program.amplitude));
  bcfg.set("field.frequency", g17(2 * a.field.segments.front().program.frequency));
  bcfg.set("fluid.viscosity", g17(a.fluid.viscosity));
  bcfg.set("sim.dt", g17(a.dt / 2));
  const SimConfig b = sim_config_from(bcfg);
  const NondimAnchors an = anchors_for(b.design, b.material, b.field.segments.front().program.frequency);
  const double mn_b = magnetoelastic_number(b.field.segments.front().program.amplitude, an);
  const double fn_b = fluid_number(b.fluid.viscosity, an);
  const RunSummary sa = summarize(run(a)), sb = summarize(run(b));
  const double nd_change = std::abs(sb.blpc / sa.blpc - 1.0);
  detail(10, fmt("E = %.0f Pa, f = %g Hz: blpc %.5f; E = %.0f Pa, f = %g Hz (Mn %.2f, Fn %.2f): blpc %.5f; %.3f%%",
                 a.material.youngs_modulus, a.field.segments.front().program.frequency, sa.blpc,
                 b.material.youngs_modulus, b.field.segments.front().program.frequency, mn_b, fn_b, sb.blpc,
                 100 * nd_change));
  ok = ok && nd_change < 0.02 && std::abs(mn_b - 400) < 1e-9 * 400 && std::abs(fn_b - 10) < 1e-9 * 10;

  // Same sweep on 1 and 8 workers.
  KeyValueConfig base = coarse_cfg("carangiform", 0, 0);
  base.erase("field.Mn");
  base.erase("fluid.Fn");
  base.set("sim.n_cycles_max", "3");
  const std::string text = base.canonical() +
                           "sweep.axis1.name = Mn\nsweep.axis1.values = 200, 350, 500\n"
                           "sweep.axis2.name = Fn\nsweep.axis2.values = 5, 20\n";
  const SweepSpec spec = sweep_spec_from(KeyValueConfig::parse(text));
  auto csv = [&](int workers) {
    std::string s = sweep_csv_header(spec) + "\n";
    for (const auto& r : run_sweep(spec, workers, 0, [](const SweepRecord&) {})) s += format_sweep_row(r) + "\n";
    return s;
  };
  const std::string one = csv(1), eight = csv(8);
  detail(10, fmt("sweep CSV, 1 vs 8 workers: %zu bytes, %s", one.size(), one == eight ? "identical" : "DIFFERENT"));
  ok = ok && one == eight;
  return {ok, fmt("dt halving %.2f%% (< 2%%), parameterization %.3f%% (< 2%%), workers %s", 100 * dt_change,
                  100 * nd_change, one == eight ? "bitwise identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"Stokes drag", c1},          {"elastic gradient and cantilever", c2},
      {"null and symmetry", c3},    {"reference blpc bands", c4},
      {"design ordering", c5},      {"bidirectionality", c6},
      {"failure regimes", c7},      {"stability", c8},
      {"flow field", c9},           {"numerical hygiene", c10}};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));

  std::vector<std::string> lines;
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int k = static_cast<int>(i + 1);
    if (!pick.empty() && !pick.count(k)) continue;
    std::cout << "criterion " << k << ": " << criteria[i].first << std::endl;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    detail(k, fmt("%.0f s", seconds_since(t0)));
    lines.push_back(fmt("%s criterion %d (%s): %s", o.pass ? "PASS" : "FAIL", k, criteria[i].first,
                        o.summary.c_str()));
    all = all && o.pass;
  }
  std::cout << '\n';
  for (const auto& l : lines) std::cout << l << '\n';
  return all ? 0 : 1;
}
