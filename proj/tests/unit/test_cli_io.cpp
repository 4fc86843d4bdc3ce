#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sbm/config.hpp"
#include "sbm/error.hpp"
#include "sbm/io.hpp"
#include "sbm/validation.hpp"

using namespace sbm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "sbm_cli_io_tests" / name;
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& ex) {
    return ex.what();
  }
  return "";
}

ScalarField wavy(const Grid& g) {
  return ScalarField::from_function(g, [](const auto& x) {
    return std::sin(1.3 * x[0]) + 1e-300 * x[1] + std::exp(-x[1]) / 3.0;
  });
}

}  // namespace

TEST_CASE("sbmf round trip is bit exact for real, complex and label arrays") {
  const Grid g({7, 5, 4}, {0.1, 1.0 / 3.0, 0.06285}, {-0.3, 0.0, 1e-9});
  const ScalarField f = wavy(g);
  const fs::path p = scratch("real.sbmf");
  write_sbmf(p.string(), ArrayFile::from(f));
  const ArrayFile back = read_sbmf(p.string());
  CHECK(back.grid == g);
  CHECK(back.kind == ValueKind::real64);
  CHECK(std::memcmp(back.real.data(), f.values().data(), sizeof(double) * g.size()) == 0);

  ComplexScalarField z(g);
  for (Index q = 0; q < g.size(); ++q) z[q] = {f[q], -2.0 * f[q] + 1.0};
  const fs::path pz = scratch("complex.sbmf");
  write_sbmf(pz.string(), ArrayFile::from(z));
  const ComplexScalarField zb = read_sbmf(pz.string()).complex_field();
  bool same = true;
  for (Index q = 0; q < g.size(); ++q) same = same && zb[q] == z[q];
  CHECK(same);

  std::vector<std::uint8_t> labels(g.size());
  for (Index q = 0; q < g.size(); ++q) labels[q] = static_cast<std::uint8_t>(q % 3);
  const fs::path pl = scratch("labels.sbmf");
  write_sbmf(pl.string(), ArrayFile::from_labels(g, labels));
  CHECK(read_sbmf(pl.string()).labels == labels);
  CHECK(load_voxels(pl.string())[5] == 2.0);
  CHECK_THROWS_AS(load_voxels(p.string()), IoError);
}

TEST_CASE("sbmf header follows the documented layout") {
  const Grid g({3, 2}, {0.5, 0.25}, {0.0, 0.0});
  const fs::path p = scratch("layout.sbmf");
  write_sbmf(p.string(), ArrayFile::from(ScalarField(g, 1.0)));
  const std::string bytes = slurp(p);
  const std::string header =
      "SBMF1\ndims 3 2\nspacing 0.5 0.25\norigin 0 0\ncoord_system cartesian\n"
      "value_kind real64\norder row-major, last axis fastest\nendianness little\nend_header\n";
  CHECK(bytes.substr(0, header.size()) == header);
  CHECK(bytes.size() == header.size() + 6 * sizeof(double));
}

TEST_CASE("a full-size micrograph header is accepted without reading the payload") {
  const fs::path p = scratch("large.sbmf");
  const std::string header =
      "SBMF1\ndims 321 176 297\nspacing 0.06285 0.06285 0.06285\norigin 0 0 0\n"
      "coord_system cartesian\nvalue_kind real64\norder row-major, last axis fastest\n"
      "endianness little\nend_header\n";
  spit(p, header);
  const std::size_t n = 321ull * 176ull * 297ull;
  fs::resize_file(p, header.size() + n * sizeof(double));  // sparse on most filesystems
  std::size_t offset = 0;
  const ArrayFile f = read_sbmf_header(p.string(), &offset);
  CHECK(f.grid.size() == static_cast<Index>(n));
  CHECK(f.grid.dim(2) == 297);
  CHECK(f.grid.spacing(1) == 0.06285);
  CHECK(offset == header.size());
  fs::remove(p);
}

TEST_CASE("malformed sbmf files name the byte offset") {
  const Grid g({4, 4}, {1.0, 1.0}, {0.0, 0.0});
  const fs::path good = scratch("good.sbmf");
  write_sbmf(good.string(), ArrayFile::from(ScalarField(g, 2.0)));
  const std::string bytes = slurp(good);

  const fs::path trunc = scratch("trunc.sbmf");
  spit(trunc, bytes.substr(0, bytes.size() - 10));
  const std::string header_size = std::to_string(bytes.size() - 16 * sizeof(double));
  const std::string e = error_of([&] { read_sbmf(trunc.string()); });
  CHECK(e.find("byte " + header_size) != std::string::npos);
  CHECK(e.find("expected 128 bytes, got 118") != std::string::npos);

  const fs::path magic = scratch("magic.sbmf");
  spit(magic, "SBMF2" + bytes.substr(5));
  CHECK(error_of([&] { read_sbmf(magic.string()); }).find("byte 0") != std::string::npos);

  const fs::path key = scratch("key.sbmf");
  std::string k = bytes;
  k.replace(k.find("endianness"), 10, "endianess_");
  spit(key, k);
  CHECK_THROWS_AS(read_sbmf(key.string()), IoError);
  CHECK_THROWS_AS(read_sbmf(scratch("missing.sbmf").string()), IoError);
}

TEST_CASE("csv export round trips within 1e-15 and vtk holds a constant field") {
  const Grid g({6, 5}, {0.2, 0.3}, {1.0, -1.0});
  const ScalarField f = wavy(g);
  const fs::path p = scratch("points.csv");
  export_field(f, p.string(), ExportFormat::csv_points, "C");
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,C");
  double worst = 0.0, worst_x = 0.0;
  for (Index q = 0; q < g.size(); ++q) {
    REQUIRE(std::getline(in, line));
    double x, y, v;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &v) == 3);
    worst = std::max(worst, std::abs(v - f[q]));
    worst_x = std::max(worst_x, std::abs(x - g.position(q)[0]) + std::abs(y - g.position(q)[1]));
  }
  CHECK(worst <= 1e-15);
  CHECK(worst_x <= 1e-15);

  const Grid ga = Grid::axisymmetric(4, 3, 0.5, 0.5, 0.25, 0.0);
  export_field(ScalarField(ga, 1.0), p.string(), ExportFormat::csv_points);
  CHECK(slurp(p).rfind("r,z,value\n", 0) == 0);

  const fs::path v = scratch("const.vtk");
  export_field(ScalarField(g, 0.75), v.string(), ExportFormat::vtk_structured, "phi");
  std::ifstream vin(v);
  std::vector<std::string> lines;
  while (std::getline(vin, line)) lines.push_back(line);
  REQUIRE(lines.size() == 10 + 30);
  CHECK(lines[4] == "DIMENSIONS 6 5 1");
  CHECK(lines[8] == "SCALARS phi double 1");
  CHECK(std::all_of(lines.begin() + 10, lines.end(),
                    [](const std::string& s) { return s == "0.75"; }));

  ComplexScalarField z(g);
  for (Index q = 0; q < g.size(); ++q) z[q] = {1.0, -2.0};
  export_field(z, v.string(), ExportFormat::vtk_structured);
  const std::string text = slurp(v);
  CHECK(text.find("SCALARS re double 1") != std::string::npos);
  CHECK(text.find("SCALARS im double 1") != std::string::npos);
  export_field(z, p.string(), ExportFormat::csv_points);
  CHECK(slurp(p).rfind("x,y,re,im\n1,-1,1,-2\n", 0) == 0);

  ScalarField bad(g, 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(export_field(bad, p.string(), ExportFormat::csv_points), InvalidArgument);
}

TEST_CASE("config errors carry a nearest-key hint and exit before compute") {
  const json base = {{"solver", "diffusion"},
                     {"grid", {{"dims", {11}}, {"spacing", {0.1}}}},
                     {"domain", {{"shape", "uniform"}}},
                     {"physics", {{"diffusivty", 1.0}}}};
  const std::string e = error_of([&] { parse_run_config(base); });
  CHECK(e.find("unknown key 'diffusivty' in physics") != std::string::npos);
  CHECK(e.find("did you mean 'diffusivity'") != std::string::npos);

  json j = base;
  j["solver"] = "alen_cahn";
  CHECK(error_of([&] { parse_run_config(j); }).find("'allen_cahn'") != std::string::npos);

  j = base;
  j["physics"] = json::object();
  j["domain"] = {{"shape", "voxels"}, {"file", "no_such_mask.sbmf"}, {"zeta", 1.0}};
  CHECK(error_of([&] { parse_run_config(j); }).find("does not exist") != std::string::npos);

  j = base;
  j["physics"] = {{"diffusivity", "fast"}};
  j["output"] = {{"dir", scratch("cfg_type").string()}};
  std::ostringstream progress;
  const RunOutcome r = run_config(parse_run_config(j), progress);
  CHECK(r.exit_code == exit_config);
  CHECK(r.message.find("physics.diffusivity must be a number") != std::string::npos);

  CHECK(nearest_key("zzzzzz", {"diffusivity", "source"}).empty());
}

TEST_CASE("a diffusion run writes its fields and logs the defaults it used") {
  const fs::path dir = scratch("run_diffusion");
  fs::remove_all(dir);
  const json j = {{"solver", "diffusion"},
                  {"grid", {{"dims", {21}}, {"spacing", {0.05}}}},
                  {"domain", {{"shape", "halfspace"}, {"axis", 0}, {"position", 0.5},
                              {"inside_above", false}, {"zeta", 0.1}}},
                  {"initial", {{"value", 1.0}}},
                  {"physics", {{"t_end", 0.01}}},
                  {"output", {{"dir", dir.string()}, {"fields", {"C"}}, {"format", "sbmf"}}}};
  std::ostringstream progress;
  const RunOutcome r = run_config(parse_run_config(j), progress);
  REQUIRE(r.exit_code == exit_ok);
  const ArrayFile c = read_sbmf((dir / "C.sbmf").string());
  // No flux and no source keep the uniform start uniform.
  CHECK((c.real - 1.0).abs().maxCoeff() < 1e-12);
  const std::string log = slurp(dir / "run.log");
  CHECK(log.find("physics.diffusivity = 1  (default)") != std::string::npos);
  CHECK(log.find("physics.t_end = 0.01\n") != std::string::npos);
  CHECK(log.find("box.default = zero_gradient  (default)") != std::string::npos);
  CHECK(log.find("dt = ") != std::string::npos);
  CHECK(log.find("physics.upsilon = ") != std::string::npos);
}

TEST_CASE("identical phase-field configs give byte-identical sbmf outputs") {
  auto run_into = [](const fs::path& dir) {
    fs::remove_all(dir);
    const json j = {{"solver", "cahn_hilliard"},
                    {"grid", {{"dims", {24, 20}}, {"spacing", {1.0, 1.0}}}},
                    {"domain", {{"shape", "halfspace"}, {"axis", 1}, {"position", 5.0},
                                {"zeta", 1.0}}},
                    {"initial", {{"shape", "sphere"}, {"centre", {12.0, 5.0}}, {"radius", 7.0}}},
                    {"physics", {{"theta", 60.0}, {"t_end", 5.0}}},
                    {"output", {{"dir", dir.string()}, {"fields", {"phi", "mu"}}}}};
    std::ostringstream progress;
    REQUIRE(run_config(parse_run_config(j), progress).exit_code == exit_ok);
  };
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run_into(a);
  run_into(b);
  for (const char* f : {"phi.sbmf", "mu.sbmf", "contour.csv", "report.txt"})
    CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("a helmholtz run that cannot converge exits with the solver status") {
  const fs::path dir = scratch("run_helmholtz");
  const json j = {{"solver", "helmholtz"},
                  {"grid", {{"dims", {41, 41}}, {"spacing", {0.1, 0.1}}}},
                  {"domain", {{"shape", "sphere"}, {"centre", {2.0, 2.0}}, {"radius", 1.2},
                              {"zeta", 0.2}}},
                  {"physics", {{"kappa", 1.0}, {"omega", 0.5}, {"tol", 1e-14}, {"max_sweeps", 2}}},
                  {"box", {{"x_lo", {{"fixed_value", 1.0}}}}},
                  {"output", {{"dir", dir.string()}, {"fields", {"C"}}}}};
  std::ostringstream progress;
  const RunOutcome r = run_config(parse_run_config(j), progress);
  CHECK(r.exit_code == exit_solver);
  CHECK(fs::exists(dir / "C.sbmf"));
  CHECK(fs::exists(dir / "run.log"));
}

TEST_CASE("error report judging follows its band and status") {
  ErrorReport r;
  r.metrics = {{"e", 1.1}};
  r.compared = "e";
  r.paper_value = 1.0;
  r.tolerance = 0.2;
  r.judge();
  CHECK(r.pass);
  r.tolerance = 0.05;
  r.judge();
  CHECK_FALSE(r.pass);
  r.paper_value.reset();
  r.upper = 1.0;
  r.judge();
  CHECK_FALSE(r.pass);
  r.upper = 2.0;
  r.judge();
  CHECK(r.pass);
  r.status = "capped";
  r.judge();
  CHECK_FALSE(r.pass);
  r.status = "ok";
  r.metrics.push_back({"t", std::nan("")});
  r.judge();
  CHECK_FALSE(r.pass);
  CHECK(std::isnan(r.parameter("zeta")));
}

TEST_CASE("suite csv is byte stable and carries no timings") {
  const SuiteReport a = run_kernel_invariant_suite();
  const SuiteReport b = run_kernel_invariant_suite();
  CHECK(to_csv(a) == to_csv(b));
  CHECK(trends_to_csv(a) == trends_to_csv(b));
  CHECK(to_csv(a).rfind("case_id,provenance,", 0) == 0);
  CHECK(trends_to_csv(a).rfind("suite,trend,pass,detail\n", 0) == 0);
  CHECK_THROWS_AS(a.row("no_such_case"), InvalidArgument);
  CHECK(a.scored_pass());
}
