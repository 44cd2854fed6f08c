#include "magswim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace magswim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunSummary summarize(const Trajectory& traj) {
  RunSummary s;
  s.cycles = static_cast<int>(traj.cycles.size());
  s.blpc = s.cycles >= 2 ? compute_blpc(traj) : kNaN;
  s.regime = traj.regime;
  s.steady = traj.steady;
  s.q_total = kNaN;
  if (!traj.cycles.empty() && traj.cycles.back().mean_flow) s.q_total = traj.cycles.back().mean_flow->total();
  return s;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,com_x,com_y,com_z,Qx,Qy,Qz,regime\n";
  const std::string regime(to_string(traj.regime));
  for (const auto& s : traj.samples) {
    out << num(s.time) << ',' << num(s.com.x()) << ',' << num(s.com.y()) << ',' << num(s.com.z()) << ',';
    if (s.flow)
      out << num(s.flow->qx) << ',' << num(s.flow->qy) << ',' << num(s.flow->qz);
    else
      out << ",,";
    out << ',' << regime << '\n';
  }
}

void write_summary_csv(std::ostream& out, const SimConfig& c, const RunSummary& s) {
  const NondimAnchors a = anchors_for(c.design, c.material, c.field.segments.front().program.frequency);
  const double b = c.field.segments.front().program.amplitude;
  const double mn = a.magnetic_length > 0 ? magnetoelastic_number(b, a) : 0.0;
  out << "design,Mn,Fn,L0_over_L,L_over_W,blpc,regime,cycles,steady,Q_total\n";
  out << to_string(c.design.kind) << ',' << num(mn) << ',' << num(fluid_number(c.fluid.viscosity, a)) << ','
      << num(c.design.magnetic_fraction) << ',' << num(c.design.aspect_ratio()) << ',' << num(s.blpc) << ','
      << to_string(s.regime) << ',' << s.cycles << ',' << (s.steady ? "true" : "false") << ',' << num(s.q_total)
      << '\n';
}

Regime cycle_regime(const Trajectory& traj, int k) {
  const int n = static_cast<int>(traj.cycles.size());
  for (int i = 0; i < std::min(k, n); ++i) {
    if (traj.cycles[i].min_self_distance < traj.thickness) return Regime::SelfContact;
    if (std::abs(traj.cycles[i].max_twist) > kCoilingTwist) return Regime::Coiling;
  }
  if (k > n) return Regime::NotConverged;
  if (k >= kFloppyMinCycles && std::abs(traj.cycles[k - 1].blpc) < kFloppyBlpc) return Regime::Floppy;
  return Regime::OK;
}

// ---------------------------------------------------------------------------
// Sweeps

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Mn: return "Mn";
    case SweepAxis::Fn: return "Fn";
    case SweepAxis::L0OverL: return "L0_over_L";
    case SweepAxis::LOverW: return "L_over_W";
    case SweepAxis::TiltRoll: return "tilt_roll";
    case SweepAxis::TiltPitch: return "tilt_pitch";
    case SweepAxis::TiltYaw: return "tilt_yaw";
    case SweepAxis::CycleIndex: return "cycle_index";
  }
  return "unknown";
}

SweepAxis sweep_axis_from_string(std::string_view name) {
  for (SweepAxis a : {SweepAxis::Mn, SweepAxis::Fn, SweepAxis::L0OverL, SweepAxis::LOverW, SweepAxis::TiltRoll,
                      SweepAxis::TiltPitch, SweepAxis::TiltYaw, SweepAxis::CycleIndex})
    if (name == to_string(a)) return a;
  throw ModelError("unknown sweep axis '" + std::string(name) + "'");
}

std::string axis_key(SweepAxis a) {
  switch (a) {
    case SweepAxis::Mn: return "field.Mn";
    case SweepAxis::Fn: return "fluid.Fn";
    case SweepAxis::L0OverL: return "design.L0_over_L";
    case SweepAxis::LOverW: return "design.L_over_W";
    case SweepAxis::TiltRoll: return "tilt.roll";
    case SweepAxis::TiltPitch: return "tilt.pitch";
    case SweepAxis::TiltYaw: return "tilt.yaw";
    case SweepAxis::CycleIndex: return "";
  }
  return "";
}

namespace {

AxisSpec read_axis(const KeyValueConfig& cfg, const std::string& prefix) {
  AxisSpec a;
  const auto name = cfg.raw(prefix + ".name");
  if (!name) throw ConfigError(prefix + ".name", "missing");
  try {
    a.axis = sweep_axis_from_string(*name);
  } catch (const ModelError& e) {
    throw ConfigError(prefix + ".name", e.what());
  }
  a.values = cfg.get_list(prefix + ".values");
  const auto start = cfg.get_optional_double(prefix + ".start");
  const auto stop = cfg.get_optional_double(prefix + ".stop");
  const auto step = cfg.get_optional_double(prefix + ".step");
  if (!a.values.empty() && (start || stop || step))
    throw ConfigError(prefix + ".values", "give either values or start/stop/step");
  if (a.values.empty()) {
    double lo = 0, hi = 0, dv = 0;
    if (start || stop || step) {
      if (!start || !stop || !step) throw ConfigError(prefix + ".step", "start, stop and step go together");
      lo = *start, hi = *stop, dv = *step;
    } else if (a.axis == SweepAxis::Mn) {
      lo = 0, hi = 500, dv = 100;
    } else if (a.axis == SweepAxis::Fn) {
      lo = 5, hi = 30, dv = 5;
    } else {
      throw ConfigError(prefix + ".values", "missing");
    }
    if (!(dv > 0) || hi < lo) throw ConfigError(prefix + ".step", "needs step > 0 and stop >= start");
    const int n = static_cast<int>(std::floor((hi - lo) / dv + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) a.values.push_back(lo + i * dv);
  }
  if (a.values.empty()) throw ConfigError(prefix + ".values", "empty range");
  if (a.axis == SweepAxis::CycleIndex)
    for (double v : a.values)
      if (v < 1 || v != std::floor(v)) throw ConfigError(prefix + ".values", "cycle indices are positive integers");
  return a;
}

KeyValueConfig without_prefix(const KeyValueConfig& cfg, const std::string& prefix) {
  KeyValueConfig out;
  for (const auto& [k, v] : cfg.values())
    if (k.rfind(prefix, 0) != 0) out.set(k, v);
  return out;
}

void check_spec(const SweepSpec& s) {
  if (s.axis1.axis == s.axis2.axis) throw ConfigError("sweep.axis2.name", "must differ from axis1");
  point_config(s, s.axis1.values.front(), s.axis2.values.front());
}

}  // namespace

SweepSpec sweep_spec_from(const KeyValueConfig& cfg) {
  SweepSpec s;
  s.axis1 = read_axis(cfg, "sweep.axis1");
  s.axis2 = read_axis(cfg, "sweep.axis2");
  cfg.consume_prefix("sweep.");
  for (const auto& [k, v] : cfg.values())
    if (k.rfind("sweep.", 0) == 0 && k.rfind("sweep.axis1.", 0) != 0 && k.rfind("sweep.axis2.", 0) != 0)
      throw ConfigError(k, "unknown key");
  s.base = without_prefix(cfg, "sweep.");
  check_spec(s);
  return s;
}

SweepSpec stability_spec_from(const KeyValueConfig& cfg) {
  SweepSpec s;
  const std::string axis = cfg.get_string("stability.axis", "roll");
  if (axis == "roll") s.axis1.axis = SweepAxis::TiltRoll;
  else if (axis == "pitch") s.axis1.axis = SweepAxis::TiltPitch;
  else if (axis == "yaw") s.axis1.axis = SweepAxis::TiltYaw;
  else throw ConfigError("stability.axis", "expected roll, pitch or yaw");
  s.axis1.values = cfg.has("stability.angles") ? cfg.get_list("stability.angles") : std::vector<double>{0, 30, 60, 90};
  if (s.axis1.values.empty()) throw ConfigError("stability.angles", "empty");
  for (double a : s.axis1.values)
    if (a < 0 || a > 90) throw ConfigError("stability.angles", "angles must lie in [0, 90] degrees");
  const int cycles = cfg.get_int("stability.cycles", 5);
  if (cycles < 2) throw ConfigError("stability.cycles", "must be at least 2");
  s.axis2.axis = SweepAxis::CycleIndex;
  for (int k = 1; k <= cycles; ++k) s.axis2.values.push_back(k);
  for (const auto& [k, v] : cfg.values())
    if (k.rfind("stability.", 0) == 0 && k != "stability.axis" && k != "stability.angles" && k != "stability.cycles")
      throw ConfigError(k, "unknown key");
  s.base = without_prefix(cfg, "stability.");
  for (const char* k : {"tilt.roll", "tilt.pitch", "tilt.yaw"})
    if (s.base.has(k)) throw ConfigError(k, "set by the stability battery");
  check_spec(s);
  return s;
}

std::string sweep_csv_header(const SweepSpec& s) {
  return std::string(to_string(s.axis1.axis)) + "," + std::string(to_string(s.axis2.axis)) +
         ",blpc,regime,cycles_to_steady,Q_total";
}

std::string format_sweep_row(const SweepRecord& r) {
  return num(r.v1) + "," + num(r.v2) + "," + num(r.blpc) + "," + std::string(to_string(r.regime)) + "," +
         std::to_string(r.cycles_to_steady) + "," + num(r.q_total);
}

SweepRecord parse_sweep_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) f.push_back(item);
  if (f.size() != 6) throw ConfigError("csv", "malformed sweep row '" + line + "'");
  auto d = [&](const std::string& t) {
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("csv", "bad number '" + t + "' in sweep row");
    }
  };
  SweepRecord r;
  r.v1 = d(f[0]);
  r.v2 = d(f[1]);
  r.blpc = d(f[2]);
  try {
    r.regime = regime_from_string(f[3]);
  } catch (const ModelError& e) {
    throw ConfigError("csv", e.what());
  }
  r.cycles_to_steady = static_cast<int>(d(f[4]));
  r.q_total = d(f[5]);
  return r;
}

std::vector<SweepRecord> read_sweep_csv(std::istream& in, const SweepSpec& spec) {
  std::string line;
  if (!std::getline(in, line)) return {};
  if (line != sweep_csv_header(spec)) throw ConfigError("resume", "existing CSV header does not match this sweep");
  std::vector<SweepRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const SweepRecord r = parse_sweep_row(line);
    const std::size_t i = rows.size();
    if (i >= spec.size()) throw ConfigError("resume", "existing CSV has more rows than the grid");
    const std::size_t n2 = spec.axis2.values.size();
    if (num(r.v1) != num(spec.axis1.values[i / n2]) || num(r.v2) != num(spec.axis2.values[i % n2]))
      throw ConfigError("resume", "existing CSV row " + std::to_string(i + 1) + " does not match the grid");
    rows.push_back(r);
  }
  return rows;
}

SimConfig point_config(const SweepSpec& spec, double v1, double v2) {
  KeyValueConfig cfg = spec.base;
  for (const auto& [axis, v] : {std::pair{spec.axis1.axis, v1}, std::pair{spec.axis2.axis, v2}}) {
    if (axis == SweepAxis::CycleIndex) continue;
    const std::string key = axis_key(axis);
    if (spec.base.has(key)) throw ConfigError(key, "also swept; remove the fixed value");
    cfg.set(key, exact(v));
  }
  SimConfig c = sim_config_from(cfg);
  cfg.consume_prefix("output.");
  cfg.reject_unused();
  return c;
}

namespace {

struct Job {
  SimConfig config;
  std::vector<std::size_t> rows;  // row-major indices covered
  int cycles = 0;                 // > 0: fixed-length run reporting per cycle
};

std::vector<SweepRecord> run_job(const Job& job, const SweepSpec& spec) {
  const std::size_t n2 = spec.axis2.values.size();
  auto cycle_of = [&](std::size_t row) {
    return static_cast<int>(spec.axis1.axis == SweepAxis::CycleIndex ? spec.axis1.values[row / n2]
                                                                     : spec.axis2.values[row % n2]);
  };
  std::vector<SweepRecord> out;
  Trajectory traj;
  bool failed = false;
  try {
    traj = run(job.config);
  } catch (const ModelError&) {
    failed = true;
  }
  for (std::size_t row : job.rows) {
    SweepRecord r;
    r.v1 = spec.axis1.values[row / n2];
    r.v2 = spec.axis2.values[row % n2];
    if (failed) {
      r.blpc = kNaN;
      r.regime = Regime::NotConverged;
      r.q_total = kNaN;
    } else if (job.cycles > 0) {
      const int k = cycle_of(row);
      const bool have = k <= static_cast<int>(traj.cycles.size());
      r.blpc = have ? traj.cycles[k - 1].blpc : kNaN;
      r.regime = cycle_regime(traj, k);
      r.q_total = have && traj.cycles[k - 1].mean_flow ? traj.cycles[k - 1].mean_flow->total() : kNaN;
    } else {
      const RunSummary s = summarize(traj);
      r.blpc = s.blpc;
      r.regime = s.regime;
      r.cycles_to_steady = s.steady ? s.cycles : -1;
      r.q_total = s.q_total;
    }
    out.push_back(r);
  }
  return out;
}

std::vector<Job> make_jobs(const SweepSpec& spec) {
  const std::size_t n1 = spec.axis1.values.size(), n2 = spec.axis2.values.size();
  std::vector<Job> jobs;
  if (spec.axis1.axis == SweepAxis::CycleIndex || spec.axis2.axis == SweepAxis::CycleIndex) {
    const bool first = spec.axis1.axis == SweepAxis::CycleIndex;
    const auto& cyc = first ? spec.axis1.values : spec.axis2.values;
    const int cycles = static_cast<int>(*std::max_element(cyc.begin(), cyc.end()));
    const std::size_t outer = first ? n2 : n1;
    for (std::size_t o = 0; o < outer; ++o) {
      Job j;
      j.config = first ? point_config(spec, 1.0, spec.axis2.values[o]) : point_config(spec, spec.axis1.values[o], 1.0);
      j.config.stop_at_steady = false;
      j.config.n_cycles_max = std::max(2, cycles);
      j.cycles = cycles;
      for (std::size_t c = 0; c < cyc.size(); ++c) j.rows.push_back(first ? c * n2 + o : o * n2 + c);
      jobs.push_back(std::move(j));
    }
  } else {
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t k = 0; k < n2; ++k) {
        Job j;
        j.config = point_config(spec, spec.axis1.values[i], spec.axis2.values[k]);
        j.rows.push_back(i * n2 + k);
        jobs.push_back(std::move(j));
      }
  }
  return jobs;
}

}  // namespace

std::vector<SweepRecord> run_sweep(const SweepSpec& spec, int workers, std::size_t first_row,
                                   const std::function<void(const SweepRecord&)>& sink) {
  if (workers < 1) throw ConfigError("workers", "must be at least 1");
  std::vector<Job> all = make_jobs(spec);
  std::vector<Job> jobs;
  for (auto& j : all)
    if (*std::max_element(j.rows.begin(), j.rows.end()) >= first_row) jobs.push_back(std::move(j));

  const std::size_t n = spec.size();
  std::vector<std::optional<SweepRecord>> slots(n);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      std::vector<SweepRecord> recs;
      try {
        recs = run_job(jobs[j], spec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        next = jobs.size();
        cv.notify_all();
        return;
      }
      std::lock_guard<std::mutex> lock(mu);
      for (std::size_t r = 0; r < recs.size(); ++r) slots[jobs[j].rows[r]] = recs[r];
      cv.notify_all();
    }
  };

  const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), jobs.size()));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);

  std::vector<SweepRecord> emitted;
  std::size_t row = first_row;
  {
    std::unique_lock<std::mutex> lock(mu);
    while (row < n) {
      cv.wait(lock, [&] { return error || slots[row].has_value(); });
      if (error) break;
      while (row < n && slots[row]) {
        const SweepRecord r = *slots[row];
        lock.unlock();
        sink(r);
        emitted.push_back(r);
        lock.lock();
        ++row;
      }
    }
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return emitted;
}

// ---------------------------------------------------------------------------
// Heatmap

namespace {

// ColorBrewer "Blues", light to dark.
constexpr std::array<std::array<int, 3>, 9> kBlues = {{{247, 251, 255},
                                                       {222, 235, 247},
                                                       {198, 219, 239},
                                                       {158, 202, 225},
                                                       {107, 174, 214},
                                                       {66, 146, 198},
                                                       {33, 113, 181},
                                                       {8, 81, 156},
                                                       {8, 48, 107}}};

std::string ramp(double u) {
  u = std::clamp(u, 0.0, 1.0) * (kBlues.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), kBlues.size() - 2);
  const double w = u - static_cast<double>(i);
  char buf[8];
  int c[3];
  for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::lround((1 - w) * kBlues[i][k] + w * kBlues[i + 1][k]));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

std::string hatch_id(Regime r) { return "hatch-" + std::string(to_string(r)); }

void hatch_pattern(std::ostream& out, Regime r, const char* color, const char* path) {
  out << "  <pattern id=\"" << hatch_id(r) << "\" patternUnits=\"userSpaceOnUse\" width=\"8\" height=\"8\">"
      << "<rect width=\"8\" height=\"8\" fill=\"#ffffff\"/><path d=\"" << path << "\" stroke=\"" << color
      << "\" stroke-width=\"1.5\"/></pattern>\n";
}

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else if (c == '"') o += "&quot;";
    else o += c;
  }
  return o;
}

}  // namespace

void write_heatmap_svg(std::ostream& out, const SweepSpec& spec, const std::vector<SweepRecord>& records,
                       const std::string& title) {
  const int n1 = static_cast<int>(spec.axis1.values.size());
  const int n2 = static_cast<int>(spec.axis2.values.size());
  const int cw = 56, ch = 36, left = 90, top = 50;
  const int width = left + n1 * cw + 220, height = top + n2 * ch + 70;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : records)
    if (r.regime == Regime::OK && std::isfinite(r.blpc)) lo = std::min(lo, r.blpc), hi = std::max(hi, r.blpc);
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const double span = hi > lo ? hi - lo : 1.0;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n<defs>\n";
  hatch_pattern(out, Regime::SelfContact, "#b2182b", "M0,8 L8,0");
  hatch_pattern(out, Regime::Coiling, "#e08214", "M0,0 L8,8");
  hatch_pattern(out, Regime::Floppy, "#4d4d4d", "M0,4 L8,4");
  hatch_pattern(out, Regime::NotConverged, "#762a83", "M4,0 L4,8");
  out << "  <linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
  for (std::size_t i = 0; i < kBlues.size(); ++i)
    out << "    <stop offset=\"" << num(static_cast<double>(i) / (kBlues.size() - 1)) << "\" stop-color=\""
        << ramp(static_cast<double>(i) / (kBlues.size() - 1)) << "\"/>\n";
  out << "  </linearGradient>\n</defs>\n";
  out << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << esc(title) << "</text>\n";

  out << "<g id=\"cells\">\n";
  for (std::size_t idx = 0; idx < records.size(); ++idx) {
    const auto& r = records[idx];
    const int i = static_cast<int>(idx) / n2, k = static_cast<int>(idx) % n2;
    const int x = left + i * cw, y = top + (n2 - 1 - k) * ch;
    const bool ok = r.regime == Regime::OK && std::isfinite(r.blpc);
    const Regime shown = ok ? Regime::OK : (r.regime == Regime::OK ? Regime::NotConverged : r.regime);
    out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\""
        << (ok ? ramp((r.blpc - lo) / span) : "url(#" + hatch_id(shown) + ")") << "\" stroke=\"#ffffff\"";
    if (!ok) out << " data-hatch=\"" << hatch_id(shown) << "\"";
    out << " data-v1=\"" << num(r.v1) << "\" data-v2=\"" << num(r.v2) << "\" data-blpc=\"" << num(r.blpc)
        << "\" data-regime=\"" << to_string(r.regime) << "\"><title>" << to_string(spec.axis1.axis) << "="
        << num(r.v1) << " " << to_string(spec.axis2.axis) << "=" << num(r.v2) << " blpc=" << num(r.blpc) << " "
        << to_string(r.regime) << "</title></rect>\n";
  }
  out << "</g>\n";

  for (int i = 0; i < n1; ++i)
    out << "<text x=\"" << left + i * cw + cw / 2 << "\" y=\"" << top + n2 * ch + 16
        << "\" text-anchor=\"middle\">" << num(spec.axis1.values[i]) << "</text>\n";
  for (int k = 0; k < n2; ++k)
    out << "<text x=\"" << left - 6 << "\" y=\"" << top + (n2 - 1 - k) * ch + ch / 2 + 4
        << "\" text-anchor=\"end\">" << num(spec.axis2.values[k]) << "</text>\n";
  out << "<text x=\"" << left + n1 * cw / 2 << "\" y=\"" << top + n2 * ch + 36 << "\" text-anchor=\"middle\">"
      << to_string(spec.axis1.axis) << "</text>\n";
  out << "<text x=\"20\" y=\"" << top + n2 * ch / 2 << "\" transform=\"rotate(-90 20 " << top + n2 * ch / 2
      << ")\" text-anchor=\"middle\">" << to_string(spec.axis2.axis) << "</text>\n";

  const int lx = left + n1 * cw + 30;
  out << "<g id=\"legend\">\n";
  out << "  <rect x=\"" << lx << "\" y=\"" << top << "\" width=\"16\" height=\"120\" fill=\"url(#ramp)\"/>\n";
  out << "  <text x=\"" << lx + 22 << "\" y=\"" << top + 10 << "\">" << num(hi) << "</text>\n";
  out << "  <text x=\"" << lx + 22 << "\" y=\"" << top + 120 << "\">" << num(lo) << "</text>\n";
  out << "  <text id=\"range\" x=\"" << lx << "\" y=\"" << top + 140 << "\">blpc range [" << num(lo) << ", "
      << num(hi) << "]</text>\n";
  int ly = top + 156;
  for (Regime r : {Regime::SelfContact, Regime::Coiling, Regime::Floppy, Regime::NotConverged}) {
    out << "  <rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"16\" height=\"12\" fill=\"url(#" << hatch_id(r)
        << ")\" stroke=\"#999999\"/><text x=\"" << lx + 22 << "\" y=\"" << ly + 10 << "\">" << to_string(r)
        << "</text>\n";
    ly += 18;
  }
  out << "</g>\n</svg>\n";
}

// ---------------------------------------------------------------------------
// Bi-directionality

namespace {

BidirPhase run_phase(Simulator& sim, Trajectory& traj, const std::string& name, int cycles) {
  BidirPhase p;
  p.name = name;
  const std::size_t first = traj.cycles.size();
  bool failed = false;
  for (int c = 0; c < cycles; ++c) {
    try {
      const auto& d = sim.run_cycle(traj, false);
      p.cycle_blpc.push_back(d.blpc);
      if (d.min_self_distance < traj.thickness || std::abs(d.max_twist) > kCoilingTwist) break;
    } catch (const ModelError&) {
      failed = true;
      break;
    }
  }
  Trajectory part = traj;
  part.cycles.assign(traj.cycles.begin() + static_cast<std::ptrdiff_t>(first), traj.cycles.end());
  part.integration_failed = failed;
  const std::size_t n = part.cycles.size();
  part.steady = n >= 2 && (part.cycles[n - 1].displacement - part.cycles[n - 2].displacement).norm() <
                              sim.config().steady_tolerance * std::max(part.cycles[n - 1].displacement.norm(),
                                                                       part.cycles[n - 2].displacement.norm()) +
                                  1e-9 * traj.lbar;
  p.regime = detect_regime(part);
  p.blpc = n >= 2 ? compute_blpc(part) : (n == 1 ? part.cycles[0].blpc : kNaN);
  return p;
}

}  // namespace

BidirReport run_bidirectionality(const SimConfig& base, int cycles, int reorient_cycles) {
  if (cycles < 2) throw ConfigError("bidir.cycles", "must be at least 2");
  if (base.field.segments.size() != 1) throw ConfigError("field", "bidirectionality needs a single field program");
  BidirReport rep;
  rep.design = base.design.kind;
  const FieldProgram fwd = base.field.segments.front().program;
  const double period = fwd.period();

  Simulator sim(base);
  Trajectory traj = sim.start_trajectory();
  rep.forward = run_phase(sim, traj, "forward", cycles);

  if (fwd.kind == FieldKind::RotatingAboutX) {
    rep.scenario = "sense_flip";
    FieldProgram rev = fwd;
    rev.sense = -fwd.sense;
    FieldSchedule s = base.field;
    s.segments.push_back({sim.state().time, rev});
    sim.set_field(s);
  } else {
    if (reorient_cycles < 2) throw ConfigError("bidir.reorient_cycles", "must be at least 2");
    rep.scenario = "reorientation";
    // Half turn about z over all but the last reorientation cycle, then hold.
    FieldProgram turn = fwd;
    turn.kind = FieldKind::Turning;
    turn.sweep_axis = Vec3::UnitZ();
    turn.half_angle_deg = 180.0;
    turn.frequency = 1.0 / ((reorient_cycles - 1) * period);
    FieldProgram rev = fwd;
    rev.direction = -fwd.direction;
    if (fwd.sweep_axis.squaredNorm() > 0) rev.sweep_axis = -fwd.sweep_axis;
    FieldSchedule s = base.field;
    const double t0 = sim.state().time;
    s.segments.push_back({t0, turn});
    s.segments.push_back({t0 + reorient_cycles * period, rev});
    sim.set_field(s);
    rep.reorient = run_phase(sim, traj, "reorientation", reorient_cycles);
  }
  rep.reversed = run_phase(sim, traj, "reversed", cycles);

  const bool moving = std::abs(rep.forward.blpc) >= kFloppyBlpc && std::abs(rep.reversed.blpc) >= kFloppyBlpc;
  rep.reverses = moving && std::signbit(rep.forward.blpc) != std::signbit(rep.reversed.blpc);
  rep.on_the_fly = rep.reverses && rep.scenario == "sense_flip";
  return rep;
}

void write_bidir_csv(std::ostream& out, const BidirReport& r) {
  out << "design,scenario,phase,cycle,blpc,phase_blpc,phase_regime,reverses,on_the_fly\n";
  for (const BidirPhase* p : {&r.forward, &r.reorient, &r.reversed})
    for (std::size_t c = 0; c < p->cycle_blpc.size(); ++c)
      out << to_string(r.design) << ',' << r.scenario << ',' << p->name << ',' << c + 1 << ','
          << num(p->cycle_blpc[c]) << ',' << num(p->blpc) << ',' << to_string(p->regime) << ','
          << (r.reverses ? "true" : "false") << ',' << (r.on_the_fly ? "true" : "false") << '\n';
}

// ---------------------------------------------------------------------------
// Flow field

Plane plane_from_string(std::string_view name) {
  if (name == "xy") return Plane::XY;
  if (name == "xz") return Plane::XZ;
  if (name == "yz") return Plane::YZ;
  throw ModelError("unknown plane '" + std::string(name) + "' (expected xy, xz or yz)");
}

std::string_view to_string(Plane p) {
  switch (p) {
    case Plane::XY: return "xy";
    case Plane::XZ: return "xz";
    case Plane::YZ: return "yz";
  }
  return "xy";
}

namespace {

FlowFrame plane_frame(const Simulator& sim, Plane plane, int resolution) {
  const Points& x = sim.state().nodes;
  const Points f = sim.total_forces(x, sim.state().time);
  const Vec3 com = center_of_mass(x);
  const double side = sim.config().probes.box_factor * sim.config().lbar();
  const double eps = sim.fluid().regularization;
  const double keep2 = std::pow(sim.config().probes.exclusion_factor * eps, 2);
  int ia = 0, ib = 1;
  if (plane == Plane::XZ) ib = 2;
  if (plane == Plane::YZ) ia = 1, ib = 2;

  Points probes;
  std::vector<std::array<double, 2>> ab;
  for (int j = 0; j < resolution; ++j)
    for (int i = 0; i < resolution; ++i) {
      const double a = -0.5 * side + side * (i + 0.5) / resolution;
      const double b = -0.5 * side + side * (j + 0.5) / resolution;
      Vec3 p = com;
      p[ia] += a;
      p[ib] += b;
      bool near = false;
      for (const auto& n : x)
        if ((n - p).squaredNorm() < keep2) {
          near = true;
          break;
        }
      if (near) continue;
      probes.push_back(p);
      ab.push_back({a, b});
    }
  FlowFrame fr;
  fr.time = sim.state().time;
  const Points u = flow_at_probes(x, f, probes, sim.fluid());
  for (std::size_t k = 0; k < u.size(); ++k) fr.cells.push_back({ab[k][0], ab[k][1], u[k].norm()});
  return fr;
}

}  // namespace

FlowFieldResult run_flowfield(const SimConfig& config, Plane plane, int frames, int resolution) {
  if (frames < 2) throw ConfigError("flowfield.frames", "must be at least 2");
  if (resolution < 2) throw ConfigError("flowfield.resolution", "must be at least 2");
  const int n = static_cast<int>(std::lround(config.period() / config.dt));
  if (n % frames != 0) throw ConfigError("flowfield.frames", "must divide the steps per cycle (" + std::to_string(n) + ")");
  FlowFieldResult res;
  Simulator sim(config);
  Trajectory traj = sim.run();
  res.regime = traj.regime;
  res.blpc = traj.cycles.size() >= 2 ? compute_blpc(traj) : kNaN;
  if (traj.integration_failed) return res;

  const int stride = n / frames;
  auto sample = [&] {
    res.time.push_back(sim.state().time);
    res.q.push_back(sim.flowrates_now());
    res.frames.push_back(plane_frame(sim, plane, resolution));
  };
  try {
    sample();
    for (int k = 1; k <= n; ++k) {
      sim.step();
      if (k % stride == 0) sample();
    }
  } catch (const ModelError&) {
    res.regime = Regime::NotConverged;
  }
  return res;
}

void write_flow_traces_csv(std::ostream& out, const FlowFieldResult& r) {
  out << "t,t_over_T,Qx,Qy,Qz,Qtotal\n";
  if (r.time.empty()) return;
  const double t0 = r.time.front();
  const double period = r.time.size() > 1 ? r.time.back() - t0 : 1.0;
  for (std::size_t i = 0; i < r.time.size(); ++i)
    out << num(r.time[i]) << ',' << num((r.time[i] - t0) / period) << ',' << num(r.q[i].qx) << ','
        << num(r.q[i].qy) << ',' << num(r.q[i].qz) << ',' << num(r.q[i].total()) << '\n';
}

void write_flow_frames_csv(std::ostream& out, const FlowFieldResult& r, Plane plane) {
  const std::string_view p = to_string(plane);
  out << "frame,t," << p[0] << ',' << p[1] << ",speed\n";
  for (std::size_t f = 0; f < r.frames.size(); ++f)
    for (const auto& c : r.frames[f].cells)
      out << f << ',' << num(r.frames[f].time) << ',' << num(c[0]) << ',' << num(c[1]) << ',' << num(c[2]) << '\n';
}

int dominant_harmonic(const std::vector<double>& trace) {
  if (trace.size() < 3) throw ModelError("harmonic: needs at least three samples");
  const std::size_t n = trace.size() - 1;
  int best = 0;
  double best_power = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> s = 0;
    for (std::size_t j = 0; j < n; ++j) s += trace[j] * std::polar(1.0, -2.0 * kPi * double(k * j) / double(n));
    if (std::norm(s) > best_power) best_power = std::norm(s), best = static_cast<int>(k);
  }
  return best;
}

}  // namespace magswim
