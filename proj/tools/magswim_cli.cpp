// magswim command-line driver.
//
//   magswim simulate  --config run.cfg   --out DIR
//   magswim sweep     --config sweep.cfg --out DIR [--workers N] [--resume]
//   magswim stability --config stab.cfg  --out DIR [--workers N] [--resume]
//   magswim bidir     --config run.cfg   --out DIR
//   magswim flowfield --config run.cfg   --out DIR
//   magswim validate  [--out DIR]
//
// Exit codes: 0 success (whatever the regime), 1 failed validation oracle,
// 2 configuration error, 3 I/O error.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "magswim/harness.hpp"
#include "magswim/oracles.hpp"

namespace fs = std::filesystem;
using namespace magswim;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  int workers = 1;
  bool resume = false;
};

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(p, mode);
  if (!f) throw IoError("cannot write '" + p.string() + "'");
  return f;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

KeyValueConfig load_config(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config", "required");
  return KeyValueConfig::load(o.config);
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int cmd_simulate(const Options& o) {
  const KeyValueConfig cfg = load_config(o);
  const SimConfig c = sim_config_from(cfg);
  const bool snapshots = cfg.get_bool("output.snapshots", false);
  cfg.reject_unused();
  ensure_dir(o.out);

  Simulator sim(c);
  const Trajectory traj = sim.run();
  const RunSummary s = summarize(traj);
  {
    auto f = open_out(fs::path(o.out) / "trajectory.csv");
    write_trajectory_csv(f, traj);
  }
  {
    auto f = open_out(fs::path(o.out) / "summary.csv");
    write_summary_csv(f, c, s);
  }
  if (snapshots) {
    const fs::path dir = fs::path(o.out) / "snapshots";
    ensure_dir(dir);
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "cycle_%03zu.mesh", k + 1);
      auto f = open_out(dir / name);
      write_mesh(f, sim.mesh(), traj.snapshots[k]);
    }
  }
  std::cout << "blpc " << s.blpc << "  regime " << to_string(s.regime) << "  cycles " << s.cycles << '\n';
  return 0;
}

int grid_command(const Options& o, const SweepSpec& spec, const std::string& stem, const std::string& title,
                 const std::string& config_text) {
  ensure_dir(o.out);
  const fs::path csv = fs::path(o.out) / (stem + ".csv");
  const fs::path prov = fs::path(o.out) / (stem + ".provenance");
  const std::string hash = fnv1a_hex(config_text);

  std::vector<SweepRecord> rows;
  if (o.resume && fs::exists(csv)) {
    std::ifstream p(prov);
    std::string line, old_hash;
    while (std::getline(p, line))
      if (line.rfind("config_hash=", 0) == 0) old_hash = line.substr(12);
    if (!old_hash.empty() && old_hash != hash) throw ConfigError("resume", "config changed since the sweep started");
    std::ifstream in(csv);
    if (!in) throw IoError("cannot read '" + csv.string() + "'");
    rows = read_sweep_csv(in, spec);
    // Rewrite the validated prefix so a torn last line is dropped.
    auto f = open_out(csv);
    f << sweep_csv_header(spec) << '\n';
    for (const auto& r : rows) f << format_sweep_row(r) << '\n';
  } else {
    auto f = open_out(csv);
    f << sweep_csv_header(spec) << '\n';
  }
  {
    auto p = open_out(prov);
    p << "config_hash=" << hash << "\ncode_version=" << kCodeVersion << "\nstarted=" << utc_now() << '\n';
  }

  auto f = open_out(csv, std::ios::app);
  const auto fresh = run_sweep(spec, o.workers, rows.size(), [&](const SweepRecord& r) {
    f << format_sweep_row(r) << '\n';
    f.flush();
    if (!f) throw IoError("write to '" + csv.string() + "' failed");
  });
  rows.insert(rows.end(), fresh.begin(), fresh.end());
  auto svg = open_out(fs::path(o.out) / (stem + ".svg"));
  write_heatmap_svg(svg, spec, rows, title);
  std::cout << rows.size() << " grid points written to " << csv.string() << '\n';
  return 0;
}

int cmd_sweep(const Options& o) {
  const KeyValueConfig cfg = load_config(o);
  const SweepSpec spec = sweep_spec_from(cfg);
  const std::string title = "blpc: " + spec.base.get_string("design.kind", "carangiform") + " over " +
                            std::string(to_string(spec.axis1.axis)) + " x " + std::string(to_string(spec.axis2.axis));
  return grid_command(o, spec, "sweep", title, cfg.canonical());
}

int cmd_stability(const Options& o) {
  const KeyValueConfig cfg = load_config(o);
  const SweepSpec spec = stability_spec_from(cfg);
  const std::string title = "blpc per cycle: " + spec.base.get_string("design.kind", "carangiform") + ", " +
                            std::string(to_string(spec.axis1.axis));
  return grid_command(o, spec, "stability", title, cfg.canonical());
}

int cmd_bidir(const Options& o) {
  const KeyValueConfig cfg = load_config(o);
  const int cycles = cfg.get_int("bidir.cycles", 6);
  const int reorient = cfg.get_int("bidir.reorient_cycles", 3);
  const SimConfig c = sim_config_from(cfg);
  cfg.reject_unused();
  ensure_dir(o.out);
  const BidirReport r = run_bidirectionality(c, cycles, reorient);
  auto f = open_out(fs::path(o.out) / "bidir.csv");
  write_bidir_csv(f, r);
  std::cout << to_string(r.design) << " (" << r.scenario << "): forward " << r.forward.blpc << ", reversed "
            << r.reversed.blpc << ", reverses " << (r.reverses ? "yes" : "no") << ", on the fly "
            << (r.on_the_fly ? "yes" : "no") << '\n';
  return 0;
}

int cmd_flowfield(const Options& o) {
  const KeyValueConfig cfg = load_config(o);
  Plane plane;
  try {
    plane = plane_from_string(cfg.get_string("flowfield.plane", "xz"));
  } catch (const ModelError& e) {
    throw ConfigError("flowfield.plane", e.what());
  }
  const int frames = cfg.get_int("flowfield.frames", 20);
  const int resolution = cfg.get_int("flowfield.resolution", 24);
  const SimConfig c = sim_config_from(cfg);
  cfg.reject_unused();
  ensure_dir(o.out);
  const FlowFieldResult r = run_flowfield(c, plane, frames, resolution);
  {
    auto f = open_out(fs::path(o.out) / "flow_traces.csv");
    write_flow_traces_csv(f, r);
  }
  {
    auto f = open_out(fs::path(o.out) / "flow_frames.csv");
    write_flow_frames_csv(f, r, plane);
  }
  std::cout << "regime " << to_string(r.regime) << "  blpc " << r.blpc << "  frames " << r.frames.size() << '\n';
  return 0;
}

int cmd_validate(const Options& o) {
  const auto results = run_oracles();
  bool all = true;
  std::ostringstream report;
  report << "oracle,passed,value,target,detail\n";
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    report << r.name << ',' << (r.passed ? "true" : "false") << ',' << r.value << ',' << r.target << ",\""
           << r.detail << "\"\n";
    all = all && r.passed;
  }
  if (!o.config.empty() || o.out != "out") {
    ensure_dir(o.out);
    auto f = open_out(fs::path(o.out) / "validate.csv");
    f << report.str();
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magneto-elastic sheet swimmers in Stokes flow"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub, bool grid) {
    sub->add_option("--config", o.config, "Config file (dotted key = value)");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--resume", o.resume, grid ? "Continue an interrupted grid from its CSV" : "Accepted, no effect");
  };
  std::map<std::string, std::function<int(const Options&)>> commands = {
      {"simulate", cmd_simulate}, {"sweep", cmd_sweep},         {"stability", cmd_stability},
      {"bidir", cmd_bidir},       {"flowfield", cmd_flowfield}, {"validate", cmd_validate}};
  const std::map<std::string, std::string> help = {
      {"simulate", "Run one simulation"},
      {"sweep", "Two-axis parameter sweep with CSV and SVG heatmap"},
      {"stability", "Per-cycle blpc over initial tilt angles"},
      {"bidir", "Forward then reversed field program"},
      {"flowfield", "Flow frames on a plane and flowrate traces over one steady cycle"},
      {"validate", "Run the built-in oracle suite"}};
  for (const auto& [name, fn] : commands)
    add_common(app.add_subcommand(name, help.at(name)), name == "sweep" || name == "stability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    for (const auto& [name, fn] : commands)
      if (app.got_subcommand(name)) return fn(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
