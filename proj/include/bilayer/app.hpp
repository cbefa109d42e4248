#pragma once

#include <fstream>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bilayer/flow.hpp"

namespace bilayer {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by parse_config for --help; what() holds the usage text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Domain { rectangle, oshape };
enum class Clamp { short_side, corner, none };

std::string to_string(Domain domain);
std::string to_string(Clamp clamp);

struct RunConfig {
  std::string experiment = "oshape";
  Domain domain = Domain::oshape;
  int level = 1;
  Pattern pattern = Pattern::symmetric;
  Clamp clamp = Clamp::corner;
  double alpha = 0.5;
  // Unless tau is given explicitly, tau = tau_scale * h / tau_divisor.
  std::optional<double> tau;
  double tau_divisor = 5.0;
  double tau_scale = 1.0;
  FlowMode mode = FlowMode::isometry_flow;
  std::optional<double> eps;  // required in penalized mode
  double cf = 0.0;            // body force (0, 0, cf)
  double obstacle_height = 1.0;
  double eps_stop = 1.0e-3;
  long max_iters = 500000;
  std::string out = "out";
  long vtk_every = 1000;  // 0 writes only the final state
  std::string resume;     // checkpoint file to continue from
  bool debug_checks = false;

  double mesh_size() const;
  double resolved_tau() const;
  // Throws ConfigError on invalid combinations.
  void validate() const;
};

/// Defaults of the three experiments: "rectangle", "oshape", "obstacle".
RunConfig preset(const std::string& experiment);

/// Flags override keys of the --config file (flat "key = value" lines);
/// unknown keys and flags are rejected with ConfigError.
RunConfig parse_config(const std::vector<std::string>& args);

TriangleMesh build_mesh(const RunConfig& config);
SimulationParams build_params(const RunConfig& config);

// Clamped boundary data y_D = (x, 0), phi_D = [I2; 0].
SmoothMap horizontal_clamp();

// iter,energy,penalty_energy,delta_iso,delta_pen,update_norm
class HistoryWriter {
 public:
  HistoryWriter(const std::string& path, bool append);
  void add(const HistoryRecord& record);
  void flush();

  static constexpr int kFlushInterval = 100;

 private:
  std::string path_;
  std::ofstream out_;
  std::vector<HistoryRecord> pending_;
  bool header_ = false;
};

void write_history_csv(const std::vector<HistoryRecord>& history, const std::string& path);
std::vector<HistoryRecord> read_history_csv(const std::string& path);

/// Legacy ASCII unstructured grid of the deformed surface with point data
/// isometry_defect and obstacle_penetration.
void write_vtk_surface(std::ostream& out, const TriangleMesh& mesh, const DeformationField& y,
                       double obstacle_height = 1.0);
void write_vtk_surface(const std::string& path, const TriangleMesh& mesh, const DeformationField& y,
                       double obstacle_height = 1.0);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues config_entries(const RunConfig& config);
KeyValues report_entries(const RunReport& report, const RunConfig& config, const TriangleMesh& mesh);
void write_report(const RunReport& report, const RunConfig& config, const TriangleMesh& mesh,
                  const std::string& path, const std::vector<std::string>& warnings = {});
std::map<std::string, std::string> read_key_values(const std::string& path);

struct Checkpoint {
  long iteration = 0;
  DeformationField y;
};

void write_checkpoint(const std::string& path, long iteration, const DeformationField& y);
Checkpoint read_checkpoint(const std::string& path);

/// x1,y1,y2,y3,u1,u3 along the rear edge x2 = 2, where u = y - (x, 0).
void write_rear_edge_trace(const std::string& path, const TriangleMesh& mesh, const DeformationField& y);

struct RunOutcome {
  RunReport report;
  std::vector<std::string> warnings;
  std::string output_dir;
};

/// Builds the mesh and parameters, runs the flow and writes history.csv,
/// report.txt, mesh.txt, checkpoint.txt, state_<k>.vtk, final.vtk and, for
/// penalized runs, rear_edge.csv into config.out. Progress goes to log.
RunOutcome run_experiment(const RunConfig& config, std::ostream& log);

}  // namespace bilayer
