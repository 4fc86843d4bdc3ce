#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "sbm/config.hpp"
#include "sbm/error.hpp"
#include "sbm/io.hpp"

using nlohmann::json;

namespace {

int finish(const sbm::RunOutcome& r) {
  for (const auto& a : r.artifacts) std::cout << "wrote " << a << "\n";
  if (!r.message.empty()) std::cerr << "sbm: " << r.message << "\n";
  return r.exit_code;
}

int run_json(const json& j) {
  try {
    return finish(sbm::run_config(sbm::parse_run_config(j, "."), std::cout));
  } catch (const sbm::InvalidArgument& ex) {
    return finish({sbm::exit_config, {}, ex.what()});
  }
}

int info(const std::string& path) {
  try {
    const sbm::ArrayFile f = sbm::read_sbmf(path);
    const sbm::Grid& g = f.grid;
    std::cout << "value_kind " << sbm::to_string(f.kind) << "\ncoord_system "
              << sbm::to_string(g.coords()) << "\ndims";
    for (int a = 0; a < g.ndim(); ++a) std::cout << " " << g.dim(a);
    std::cout << "\nspacing";
    for (int a = 0; a < g.ndim(); ++a) std::printf(" %.17g", g.spacing(a));
    std::cout << "\norigin";
    for (int a = 0; a < g.ndim(); ++a) std::printf(" %.17g", g.origin(a));
    std::cout << "\nnodes " << g.size() << "\n";
    const Eigen::ArrayXd v = f.real_field().values();
    std::printf("min %.17g\nmax %.17g\nmean %.17g\n", v.minCoeff(), v.maxCoeff(), v.mean());
    return sbm::exit_ok;
  } catch (const sbm::IoError& ex) {
    std::cerr << "sbm: " << ex.what() << "\n";
    return sbm::exit_config;
  } catch (const sbm::InvalidArgument& ex) {
    std::cerr << "sbm: " << ex.what() << "\n";
    return sbm::exit_config;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoothed boundary method solvers and validation suites"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run a JSON config");
  run->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);

  std::string suite, out_dir = "validation_out";
  bool full = false;
  int workers = 1;
  auto* validate = app.add_subcommand("validate", "Run validation suites and write CSV reports");
  validate->add_option("suite", suite, "table1, table2, table3, boundary, elasticity, kernels or all")
      ->required();
  validate->add_flag("--full", full, "Run cases that exceed the default step budget");
  validate->add_option("--workers", workers, "Parallel cases")->check(CLI::PositiveNumber);
  validate->add_option("--out", out_dir, "Report directory");

  std::string mask, smooth_out = "smooth_out";
  double zeta = 1.0;
  int steps = 400;
  std::vector<int> inside{1};
  auto* smooth = app.add_subcommand("smooth", "Smooth a label8 voxel mask into a domain parameter");
  smooth->add_option("mask", mask, "label8 SBMF file")->required()->check(CLI::ExistingFile);
  smooth->add_option("--zeta", zeta, "Interface width parameter")->required();
  smooth->add_option("--inside", inside, "Labels inside the domain");
  smooth->add_option("--steps", steps, "Reinitialization steps");
  smooth->add_option("--out", smooth_out, "Output directory");

  std::string sbmf;
  auto* inf = app.add_subcommand("info", "Print an SBMF header and value range");
  inf->add_option("file", sbmf, "SBMF file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? 0 : sbm::exit_config;
  }

  if (*run) return finish(sbm::run_config_file(config, std::cout));
  if (*validate)
    return run_json({{"solver", "suite"},
                     {"physics", {{"name", suite}, {"full", full}, {"workers", workers}}},
                     {"output", {{"dir", out_dir}}}});
  if (*smooth)
    return run_json({{"solver", "smooth_voxels"},
                     {"domain",
                      {{"shape", "voxels"},
                       {"file", mask},
                       {"inside_labels", inside},
                       {"zeta", zeta},
                       {"steps", steps}}},
                     {"output", {{"dir", smooth_out}, {"fields", {"psi"}}}}});
  return info(sbmf);
}
