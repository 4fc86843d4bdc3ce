#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbm/closure.hpp"
#include "sbm/domain_parameter.hpp"
#include "sbm/io.hpp"

namespace sbm {

enum class SolverKind {
  diffusion,
  surface_bulk,
  helmholtz,
  allen_cahn,
  cahn_hilliard,
  elasticity,
  smooth_voxels,
  suite
};
const char* to_string(SolverKind k);
SolverKind solver_kind_from_string(const std::string& s);

// Exit statuses of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_solver = 3, exit_validation = 4 };

// Records every value a run used and whether the config set it or a default
// filled it in.
struct RunLog {
  std::vector<std::string> lines;
  void record(const std::string& key, const std::string& value, bool defaulted);
  std::string text() const;
};

// A checked run file. Sections keep their JSON form; parse_run_config has
// already rejected unknown keys (with the nearest valid key as a hint),
// wrong types, and missing referenced files.
struct RunConfig {
  SolverKind solver = SolverKind::diffusion;
  nlohmann::json grid, domain, domain2, initial, physics, box, output;
  std::string base_dir;  // relative paths resolve against the config's folder
};

RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

// Builders shared by the run verbs.
Grid grid_from_config(const nlohmann::json& j, RunLog& log);
DomainParameter domain_from_config(const nlohmann::json& j, const Grid& grid,
                                   const std::string& base_dir, RunLog& log,
                                   const std::string& prefix = "domain");
BoxClosure box_from_config(const nlohmann::json& j, RunLog& log);

struct RunOutcome {
  int exit_code = exit_ok;
  std::vector<std::string> artifacts;
  std::string message;
};

// Runs a config and writes its outputs (and run.log) into output.dir.
// Config and input errors give exit_config before any compute, solver
// failures exit_solver with whatever was already written, and a suite whose
// trend assertions fail exit_validation. Progress goes to `progress`.
RunOutcome run_config(const RunConfig& config, std::ostream& progress);
RunOutcome run_config_file(const std::string& path, std::ostream& progress);

// Levenshtein-nearest candidate, for "did you mean" hints.
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);

}  // namespace sbm
