#include "bilayer/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

namespace bilayer {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v, int digits = 15) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

void check_written(std::ostream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("writing " + path + " failed");
}

Domain parse_domain(const std::string& s) {
  if (s == "rectangle") return Domain::rectangle;
  if (s == "oshape") return Domain::oshape;
  throw ConfigError("unknown domain '" + s + "'");
}

Clamp parse_clamp(const std::string& s) {
  if (s == "short_side") return Clamp::short_side;
  if (s == "corner") return Clamp::corner;
  if (s == "none") return Clamp::none;
  throw ConfigError("unknown clamp '" + s + "'");
}

FlowMode parse_mode(const std::string& s) {
  if (s == "isometry" || s == "isometry_flow") return FlowMode::isometry_flow;
  if (s == "penalized" || s == "penalized_flow") return FlowMode::penalized_flow;
  throw ConfigError("unknown mode '" + s + "'");
}

}  // namespace

std::string to_string(Domain domain) { return domain == Domain::rectangle ? "rectangle" : "oshape"; }

std::string to_string(Clamp clamp) {
  switch (clamp) {
    case Clamp::short_side: return "short_side";
    case Clamp::corner: return "corner";
    case Clamp::none: return "none";
  }
  return "unknown";
}

double RunConfig::mesh_size() const { return std::ldexp(1.0, -level); }

double RunConfig::resolved_tau() const { return tau ? *tau : tau_scale * mesh_size() / tau_divisor; }

void RunConfig::validate() const {
  if (level < 0 || level > 8) throw ConfigError("level must lie in 0..8");
  if (tau && !(*tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(tau_scale > 0.0) || !(tau_divisor > 0.0)) throw ConfigError("tau scale and divisor must be positive");
  if (!std::isfinite(alpha)) throw ConfigError("alpha must be finite");
  if (!std::isfinite(cf)) throw ConfigError("cf must be finite");
  if (!(eps_stop > 0.0)) throw ConfigError("eps-stop must be positive");
  if (max_iters < 0) throw ConfigError("max-iters must be nonnegative");
  if (vtk_every < 0) throw ConfigError("vtk-every must be nonnegative");
  if (mode == FlowMode::penalized_flow && !eps)
    throw ConfigError("penalized mode requires the penalty parameter (--eps)");
  if (eps && !(*eps > 0.0)) throw ConfigError("eps must be positive");
  if (out.empty()) throw ConfigError("output directory must not be empty");
}

RunConfig preset(const std::string& experiment) {
  RunConfig c;
  c.experiment = experiment;
  if (experiment == "rectangle") {
    c.domain = Domain::rectangle;
    c.level = 3;
    c.pattern = Pattern::nonsymmetric;
    c.clamp = Clamp::short_side;
    c.alpha = 2.5;
    c.tau_divisor = 5.0;
  } else if (experiment == "oshape") {
    c.domain = Domain::oshape;
    c.level = 1;
    c.pattern = Pattern::symmetric;
    c.clamp = Clamp::corner;
    c.alpha = 0.5;
    c.tau_divisor = 5.0;
  } else if (experiment == "obstacle") {
    c.domain = Domain::oshape;
    c.level = 3;
    c.pattern = Pattern::symmetric;
    c.clamp = Clamp::corner;
    c.alpha = 0.0;
    c.tau_divisor = 50.0;
    c.mode = FlowMode::penalized_flow;
    c.eps = 0.125;
    c.cf = 6.0e-3;
  } else {
    throw ConfigError("unknown experiment '" + experiment + "' (rectangle, oshape, obstacle)");
  }
  return c;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Isometric bending of bilayer plates by a discrete gradient flow", "bilayer_run"};
  app.set_config("--config", "", "flat key = value configuration file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::string experiment = "oshape", domain, pattern, clamp, mode, out, resume;
  int level = 0;
  double alpha = 0, tau = 0, tau_scale = 1, tau_divisor = 5, eps = 0, cf = 0, eps_stop = 0, height = 1;
  long max_iters = 0, vtk_every = 0;
  bool debug = false;

  app.add_option("--experiment", experiment, "preset")
      ->check(CLI::IsMember({"rectangle", "oshape", "obstacle"}));
  auto* o_domain = app.add_option("--domain", domain, "rectangle or oshape")
                       ->check(CLI::IsMember({"rectangle", "oshape"}));
  auto* o_level = app.add_option("--level", level, "mesh level, h = 2^-level");
  auto* o_pattern = app.add_option("--pattern", pattern, "triangulation pattern")
                        ->check(CLI::IsMember({"symmetric", "nonsymmetric"}));
  auto* o_clamp = app.add_option("--clamp", clamp, "clamped boundary part")
                      ->check(CLI::IsMember({"short_side", "corner", "none"}));
  auto* o_alpha = app.add_option("--alpha", alpha, "spontaneous curvature");
  auto* o_tau = app.add_option("--tau", tau, "step size (overrides the preset rule)");
  auto* o_scale = app.add_option("--tau-scale,--tau_scale", tau_scale, "factor 2^k applied to the preset step size");
  auto* o_div = app.add_option("--tau-divisor,--tau_divisor", tau_divisor, "tau = h / divisor");
  auto* o_mode = app.add_option("--mode", mode, "isometry or penalized")
                     ->check(CLI::IsMember({"isometry", "penalized", "isometry_flow", "penalized_flow"}));
  auto* o_eps = app.add_option("--eps", eps, "penalty parameter");
  auto* o_cf = app.add_option("--cf", cf, "vertical body force");
  auto* o_height = app.add_option("--obstacle-height,--obstacle_height", height, "obstacle plane x3 = g");
  auto* o_stop = app.add_option("--eps-stop,--eps_stop", eps_stop, "stopping threshold");
  auto* o_iters = app.add_option("--max-iters,--max_iters", max_iters, "iteration cap");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_vtk = app.add_option("--vtk-every,--vtk_every", vtk_every, "VTK snapshot interval, 0 for final only");
  auto* o_resume = app.add_option("--resume", resume, "checkpoint file to continue from");
  app.add_flag("--debug-checks,--debug_checks", debug, "verify nodal identities every step");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  RunConfig c = preset(experiment);
  if (o_domain->count()) c.domain = parse_domain(domain);
  if (o_level->count()) c.level = level;
  if (o_pattern->count()) c.pattern = parse_pattern(pattern);
  if (o_clamp->count()) c.clamp = parse_clamp(clamp);
  if (o_alpha->count()) c.alpha = alpha;
  if (o_tau->count()) c.tau = tau;
  if (o_scale->count()) c.tau_scale = tau_scale;
  if (o_div->count()) c.tau_divisor = tau_divisor;
  if (o_mode->count()) {
    c.mode = parse_mode(mode);
    if (c.mode == FlowMode::isometry_flow) c.eps.reset();
  }
  if (o_eps->count()) c.eps = eps;
  if (o_cf->count()) c.cf = cf;
  if (o_height->count()) c.obstacle_height = height;
  if (o_stop->count()) c.eps_stop = eps_stop;
  if (o_iters->count()) c.max_iters = max_iters;
  if (o_out->count()) c.out = out;
  if (o_vtk->count()) c.vtk_every = vtk_every;
  if (o_resume->count()) c.resume = resume;
  c.debug_checks = debug;
  if (c.domain == Domain::rectangle && c.clamp == Clamp::corner)
    throw ConfigError("the corner clamp belongs to the O-shaped domain");
  c.validate();
  return c;
}

TriangleMesh build_mesh(const RunConfig& config) {
  TriangleMesh mesh = config.domain == Domain::rectangle ? generate_rectangle_mesh(config.level, config.pattern)
                                                         : generate_oshape_mesh(config.level, config.pattern);
  switch (config.clamp) {
    case Clamp::short_side: return mesh.with_dirichlet(rectangle_clamp_segments());
    case Clamp::corner: return mesh.with_dirichlet(oshape_corner_segments());
    case Clamp::none: return mesh;
  }
  return mesh;
}

SimulationParams build_params(const RunConfig& config) {
  SimulationParams p;
  p.alpha = config.alpha;
  p.tau = config.resolved_tau();
  if (config.eps) p.eps_penalty = *config.eps;
  p.eps_stop = config.eps_stop;
  p.body_force = Vec3(0.0, 0.0, config.cf);
  p.obstacle_height = config.obstacle_height;
  p.mode = config.mode;
  p.max_iters = config.max_iters;
  p.debug_checks = config.debug_checks;
  return p;
}

SmoothMap horizontal_clamp() {
  return [](const Vec2& x) {
    Grad32 g = Grad32::Zero();
    g(0, 0) = g(1, 1) = 1.0;
    return std::make_pair(Vec3(x.x(), x.y(), 0.0), g);
  };
}

// ---------------------------------------------------------------- history

namespace {

constexpr const char* kHistoryHeader = "iter,energy,penalty_energy,delta_iso,delta_pen,update_norm";

void write_history_row(std::ostream& out, const HistoryRecord& r) {
  char line[256];
  std::snprintf(line, sizeof line, "%ld,%.15g,%.15g,%.15g,%.15g,%.15g\n", r.iter, r.energy, r.penalty_energy,
                r.delta_iso, r.delta_pen, r.update_norm);
  out << line;
}

}  // namespace

HistoryWriter::HistoryWriter(const std::string& path, bool append) : path_(path) {
  const bool existing = append && fs::exists(path) && fs::file_size(path) > 0;
  out_ = open_output(path, append ? std::ios::app : std::ios::out);
  header_ = existing;
}

void HistoryWriter::add(const HistoryRecord& record) {
  pending_.push_back(record);
  if (static_cast<int>(pending_.size()) >= kFlushInterval) flush();
}

void HistoryWriter::flush() {
  if (!header_) {
    out_ << kHistoryHeader << '\n';
    header_ = true;
  }
  for (const HistoryRecord& r : pending_) write_history_row(out_, r);
  pending_.clear();
  check_written(out_, path_);
}

void write_history_csv(const std::vector<HistoryRecord>& history, const std::string& path) {
  HistoryWriter w(path, false);
  for (const HistoryRecord& r : history) w.add(r);
  w.flush();
}

std::vector<HistoryRecord> read_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHistoryHeader)
    throw std::runtime_error(path + ": missing history header");
  std::vector<HistoryRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    HistoryRecord r;
    if (std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf,%lf,%lf", &r.iter, &r.energy, &r.penalty_energy,
                    &r.delta_iso, &r.delta_pen, &r.update_norm) != 6)
      throw std::runtime_error(path + ": malformed history row '" + line + "'");
    out.push_back(r);
  }
  return out;
}

// -------------------------------------------------------------------- vtk

void write_vtk_surface(std::ostream& out, const TriangleMesh& mesh, const DeformationField& y,
                       double obstacle_height) {
  const int nv = mesh.num_vertices();
  const int nt = mesh.num_triangles();
  out << "# vtk DataFile Version 3.0\n"
      << "bilayer plate deformation\n"
      << "ASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n"
      << "POINTS " << nv << " double\n";
  out << std::setprecision(12);
  for (int v = 0; v < nv; ++v) {
    const Vec3 p = y.position(v);
    out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) out << "5\n";
  out << "POINT_DATA " << nv << '\n';
  out << "SCALARS isometry_defect double 1\nLOOKUP_TABLE default\n";
  for (double d : nodal_isometry_defect(y)) out << d << '\n';
  out << "SCALARS obstacle_penetration double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < nv; ++v) out << std::max(0.0, y.position(v).z() - obstacle_height) << '\n';
}

void write_vtk_surface(const std::string& path, const TriangleMesh& mesh, const DeformationField& y,
                       double obstacle_height) {
  std::ofstream out = open_output(path);
  write_vtk_surface(out, mesh, y, obstacle_height);
  check_written(out, path);
}

// ----------------------------------------------------------------- report

KeyValues config_entries(const RunConfig& c) {
  KeyValues kv{
      {"experiment", c.experiment},
      {"domain", to_string(c.domain)},
      {"level", std::to_string(c.level)},
      {"pattern", to_string(c.pattern)},
      {"clamp", to_string(c.clamp)},
      {"alpha", format_double(c.alpha)},
      {"tau", format_double(c.resolved_tau())},
      {"tau_scale", format_double(c.tau_scale)},
      {"tau_divisor", format_double(c.tau_divisor)},
      {"mode", to_string(c.mode)},
      {"eps", c.eps ? format_double(*c.eps) : "none"},
      {"cf", format_double(c.cf)},
      {"obstacle_height", format_double(c.obstacle_height)},
      {"eps_stop", format_double(c.eps_stop)},
      {"max_iters", std::to_string(c.max_iters)},
      {"vtk_every", std::to_string(c.vtk_every)},
  };
  if (!c.resume.empty()) kv.emplace_back("resume", c.resume);
  return kv;
}

KeyValues report_entries(const RunReport& r, const RunConfig& c, const TriangleMesh& mesh) {
  const double constant = c.alpha * c.alpha * mesh.total_area();
  const double bending_energy = r.final_energy - r.penalty_energy;
  KeyValues kv{
      {"termination", to_string(r.reason)},
      {"iterations", std::to_string(r.iterations)},
      {"final_energy", format_double(r.final_energy)},
      {"final_energy_with_constant", format_double(bending_energy + constant + r.penalty_energy)},
      {"energy_constant", format_double(constant)},
      {"penalty_energy", format_double(r.penalty_energy)},
      {"initial_energy", format_double(r.initial_energy)},
      {"max_energy_increase", format_double(r.max_energy_increase)},
      {"delta_iso", format_double(r.delta_iso)},
      {"delta_pen", format_double(r.delta_pen)},
      {"last_update_norm", format_double(r.last_update_norm)},
      {"wall_time_s", format_double(r.wall_time, 6)},
      {"vertices", std::to_string(mesh.num_vertices())},
      {"triangles", std::to_string(mesh.num_triangles())},
      {"dofs", std::to_string(kDofsPerVertex * mesh.num_vertices())},
  };
  if (!r.message.empty()) kv.emplace_back("message", r.message);
  for (auto& [k, v] : config_entries(c)) kv.emplace_back("config." + k, v);
  return kv;
}

void write_report(const RunReport& report, const RunConfig& config, const TriangleMesh& mesh,
                  const std::string& path, const std::vector<std::string>& warnings) {
  std::ofstream out = open_output(path);
  out << "# final_energy excludes the constant alpha^2 |omega|; final_energy_with_constant includes it\n";
  for (const auto& [k, v] : report_entries(report, config, mesh)) out << k << " = " << v << '\n';
  for (size_t i = 0; i < warnings.size(); ++i) out << "warning." << i << " = " << warnings[i] << '\n';
  check_written(out, path);
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw std::runtime_error(path + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

// ------------------------------------------------------------- checkpoint

void write_checkpoint(const std::string& path, long iteration, const DeformationField& y) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out = open_output(tmp);
    out << "bilayer_checkpoint 1\n"
        << "iteration " << iteration << " vertices " << y.num_vertices() << '\n';
    char buf[64];
    for (int v = 0; v < y.num_vertices(); ++v) {
      for (int j = 0; j < kDofsPerVertex; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", y.dofs()[kDofsPerVertex * v + j]);
        out << buf << (j + 1 < kDofsPerVertex ? ' ' : '\n');
      }
    }
    check_written(out, tmp);
  }
  fs::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::string magic, it_key, v_key;
  int version = 0, nv = 0;
  Checkpoint cp;
  if (!(in >> magic >> version) || magic != "bilayer_checkpoint" || version != 1)
    throw std::runtime_error(path + ": not a checkpoint file");
  if (!(in >> it_key >> cp.iteration >> v_key >> nv) || it_key != "iteration" || v_key != "vertices" || nv < 0 ||
      cp.iteration < 0)
    throw std::runtime_error(path + ": malformed checkpoint header");
  Eigen::VectorXd dofs(kDofsPerVertex * nv);
  for (int i = 0; i < dofs.size(); ++i)
    if (!(in >> dofs[i])) throw std::runtime_error(path + ": truncated checkpoint");
  cp.y = DeformationField(std::move(dofs));
  return cp;
}

void write_rear_edge_trace(const std::string& path, const TriangleMesh& mesh, const DeformationField& y) {
  double top = -std::numeric_limits<double>::infinity();
  for (const Vec2& x : mesh.vertices()) top = std::max(top, x.y());
  std::vector<int> edge;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.vertices()[v].y() == top) edge.push_back(v);
  std::sort(edge.begin(), edge.end(),
            [&](int a, int b) { return mesh.vertices()[a].x() < mesh.vertices()[b].x(); });
  std::ofstream out = open_output(path);
  out << "x1,y1,y2,y3,u1,u3\n" << std::setprecision(15);
  for (int v : edge) {
    const Vec2& x = mesh.vertices()[v];
    const Vec3 p = y.position(v);
    out << x.x() << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << p.x() - x.x() << ',' << p.z() << '\n';
  }
  check_written(out, path);
}

// -------------------------------------------------------------------- run

RunOutcome run_experiment(const RunConfig& config, std::ostream& log) {
  config.validate();
  const TriangleMesh mesh = build_mesh(config);
  const SimulationParams params = build_params(config);

  RunOutcome outcome;
  outcome.output_dir = config.out;
  fs::create_directories(config.out);
  const fs::path dir(config.out);
  {
    std::ofstream m = open_output((dir / "mesh.txt").string());
    write_mesh(m, mesh);
    check_written(m, (dir / "mesh.txt").string());
  }

  DeformationField initial;
  long first = 0;
  if (!config.resume.empty()) {
    Checkpoint cp = read_checkpoint(config.resume);
    if (cp.y.num_vertices() != mesh.num_vertices())
      throw ConfigError("checkpoint " + config.resume + " has " + std::to_string(cp.y.num_vertices()) +
                        " vertices, the configured mesh has " + std::to_string(mesh.num_vertices()));
    initial = std::move(cp.y);
    first = cp.iteration;
  } else {
    initial = apply_dirichlet(flat_embedding(mesh), mesh, horizontal_clamp());
  }

  outcome.warnings = step_size_safeguard(params, mesh);
  for (const std::string& w : outcome.warnings) log << "warning: " << w << '\n';
  log << "experiment " << config.experiment << ": " << mesh.num_triangles() << " triangles, "
      << kDofsPerVertex * mesh.num_vertices() << " dofs, tau = " << params.tau << ", mode "
      << to_string(params.mode) << '\n';

  GradientFlow flow(mesh, params, std::move(initial), first);
  HistoryWriter history((dir / "history.csv").string(), first > 0);
  const auto snapshot = [&](long k, const DeformationField& y) {
    char name[64];
    std::snprintf(name, sizeof name, "state_%06ld.vtk", k);
    write_vtk_surface((dir / name).string(), mesh, y, params.obstacle_height);
    write_checkpoint((dir / "checkpoint.txt").string(), k, y);
  };
  if (config.vtk_every > 0 && first == 0) snapshot(0, flow.state().y);

  const RunReport report = flow.run([&](const FlowState& s, const HistoryRecord& rec) {
    history.add(rec);
    if (config.vtk_every > 0 && rec.iter % config.vtk_every == 0) {
      snapshot(rec.iter, s.y);
      log << "iter " << rec.iter << "  energy " << format_double(rec.energy, 10) << "  delta_iso "
          << format_double(rec.delta_iso, 6) << "  update " << format_double(rec.update_norm, 6) << '\n';
    }
  });
  history.flush();

  const DeformationField& y = flow.state().y;
  write_vtk_surface((dir / "final.vtk").string(), mesh, y, params.obstacle_height);
  write_checkpoint((dir / "checkpoint.txt").string(), flow.state().k, y);
  if (params.mode == FlowMode::penalized_flow) write_rear_edge_trace((dir / "rear_edge.csv").string(), mesh, y);
  write_report(report, config, mesh, (dir / "report.txt").string(), outcome.warnings);

  log << "finished: " << to_string(report.reason) << " after " << report.iterations << " iterations, energy "
      << format_double(report.final_energy, 10) << " (with constant "
      << format_double(report.final_energy - report.penalty_energy + config.alpha * config.alpha * mesh.total_area() +
                           report.penalty_energy,
                       10)
      << "), delta_iso " << format_double(report.delta_iso, 6) << ", delta_pen "
      << format_double(report.delta_pen, 6) << '\n';
  if (!report.message.empty()) log << report.message << '\n';
  outcome.report = report;
  return outcome;
}

}  // namespace bilayer
