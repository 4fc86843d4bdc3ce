// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "sbm/surface_bulk.hpp"
#include "sbm/validation.hpp"

using namespace sbm;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Scored rows that failed, with their value and band.
void require_rows(Verdict& v, const SuiteReport& r) {
  for (const auto& row : r.rows) {
    if (!row.scored || row.pass) continue;
    std::string what = row.case_id + " " + row.compared + " = " + g(row.metric(row.compared));
    if (row.paper_value) what += " (printed " + g(*row.paper_value) + " +- " + row.band + ")";
    if (row.upper) what += " (limit " + g(*row.upper) + ")";
    if (row.status != "ok") what += " [" + row.status + "]";
    v.require(false, what);
  }
}

void require_trends(Verdict& v, const SuiteReport& r, const std::string& prefix = "") {
  for (const auto& t : r.trends)
    if (t.name.rfind(prefix, 0) == 0) v.require(t.pass, t.name + ": " + t.detail);
}

void require_time(Verdict& v, double seconds, double budget) {
  v.require(seconds <= budget, "took " + g(seconds) + " s, budget " + g(budget) + " s");
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict table1_zeta() {
  const SuiteReport r = run_table1_cases({"1b", "1c", "1d", "1e", "1f"});
  Verdict v;
  for (const char* id : {"1b", "1f"}) v.require(r.row(id).scored && r.row(id).pass,
                                                std::string(id) + " outside its band");
  require_rows(v, r);
  require_trends(v, r, "case1_");
  require_time(v, r.seconds, 120.0);
  v.detail += (v.detail.empty() ? "" : "; ") + std::string("1b e = ") +
              g(r.row("1b").metric("e")) + ", 1f e = " + g(r.row("1f").metric("e")) + ", " +
              g(r.seconds) + " s";
  return v;
}

Verdict table1_upsilon() {
  const SuiteReport r = run_table1_cases({"4c", "4f"});
  Verdict v;
  const TrendCheck& t = r.trend("case4_upsilon_converged");
  v.require(t.pass, t.detail);
  require_time(v, r.seconds, 120.0);
  if (v.pass) v.detail = t.detail + ", " + g(r.seconds) + " s";
  return v;
}

Verdict table2() {
  const SuiteReport r = run_table2_suite();
  Verdict v;
  require_rows(v, r);
  require_trends(v, r);
  require_time(v, r.seconds, 900.0);
  v.detail += (v.detail.empty() ? "" : "; ") + g(r.seconds) + " s";
  return v;
}

Verdict table3() {
  const SuiteReport r = run_table3_suite();
  Verdict v;
  require_rows(v, r);
  require_trends(v, r, "ac_within_2deg");
  require_trends(v, r, "ch_within_2deg");
  require_time(v, r.seconds, 1200.0);
  v.detail += (v.detail.empty() ? "" : "; ") + g(r.seconds) + " s";
  return v;
}

Verdict boundary() {
  const SuiteReport r = run_boundary_property_suite();
  Verdict v;
  require_rows(v, r);
  require_trends(v, r);
  require_time(v, r.seconds, 60.0);
  if (v.pass) v.detail = std::to_string(r.trends.size()) + " trends, " + g(r.seconds) + " s";
  return v;
}

// The steady amplitude at zero frequency against a time march of the same
// coupled equation on the thin cylinder, started from the sharp solution
// extended outward and stopped once the largest rate inside falls below 2e-4.
Verdict adlr_vs_march() {
  const auto t0 = std::chrono::steady_clock::now();
  const CylinderSetup s = CylinderSetup::make(CylinderResolution::thin);
  const double D_s = 10.0, kappa = 2.1;
  SurfaceBulkProblem prob;
  prob.dp = s.domain();
  prob.D_s = D_s;
  prob.kappa = kappa;
  prob.box = s.box();
  const HelmholtzResult h = solve_helmholtz_adlr(prob, {.tol = 1e-9, .max_sweeps = 100000});
  const ScalarField steady(s.grid, Eigen::ArrayXd(h.C.values().real()));

  const ScalarField sharp = solve_sharp_cylinder(s, 1.0, D_s, kappa);
  Eigen::ArrayXd T = sharp.values();
  for (int i = s.surface_index + 1; i < s.grid.dim(0); ++i)
    for (int j = 0; j < s.grid.dim(1); ++j)
      T[s.grid.ravel({i, j, 0})] = sharp.at(s.surface_index, j);
  CoupledStepper stepper(prob, 0.0, 0.9);
  std::vector<unsigned char> inside(s.grid.size());
  for (Index p = 0; p < s.grid.size(); ++p) inside[p] = prob.dp.psi[p] >= 0.5;
  stepper.set_monitor(inside);
  while (stepper.step(T) > 2e-4) {
  }
  const double e = cylinder_error_report(ScalarField(s.grid, T), steady, prob.dp).e;
  const double seconds = since(t0);
  Verdict v;
  v.require(h.converged, "line relaxation residual " + g(h.residual));
  v.require(e <= 1e-3, "relative difference " + g(e) + " above 1e-3");
  require_time(v, seconds, 300.0);
  v.detail += (v.detail.empty() ? "" : "; ") + std::string("difference ") + g(e) + " at t = " +
              g(stepper.steps() * stepper.dt()) + ", " + g(seconds) + " s";
  return v;
}

Verdict elasticity() {
  const SuiteReport r = run_elasticity_suite();
  Verdict v;
  require_rows(v, r);
  require_trends(v, r);
  require_time(v, r.seconds, 300.0);
  if (v.pass) v.detail = std::to_string(r.rows.size()) + " rows, " + g(r.seconds) + " s";
  return v;
}

Verdict kernels() {
  const SuiteReport r = run_kernel_invariant_suite();
  Verdict v;
  require_rows(v, r);
  require_trends(v, r);
  require_time(v, r.seconds, 120.0);
  if (v.pass) v.detail = std::to_string(r.rows.size()) + " rows, " + g(r.seconds) + " s";
  return v;
}

// Two in-process runs of a cheap Table 1 subset must give identical bytes.
Verdict determinism() {
  const std::vector<std::string> ids = {"2d", "2e", "2f"};
  const SuiteReport a = run_table1_cases(ids), b = run_table1_cases(ids);
  const SuiteReport c = run_table1_cases(ids, {.full = false, .workers = 3});
  Verdict v;
  v.require(to_csv(a) == to_csv(b) && trends_to_csv(a) == trends_to_csv(b),
            "repeated runs differ");
  v.require(to_csv(a) == to_csv(c), "parallel run differs from the serial one");
  if (v.pass) v.detail = std::to_string(to_csv(a).size()) + " CSV bytes identical over 3 runs";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"planar interface error grows near-linearly with zeta", table1_zeta},
      {"regularization converged in upsilon", table1_upsilon},
      {"surface-bulk cylinder errors", table2},
      {"contact angles and conservation", table3},
      {"diffuse boundary conditions converge with zeta", boundary},
      {"steady line relaxation matches the time march", adlr_vs_march},
      {"elasticity properties", elasticity},
      {"kernel invariants", kernels},
      {"validation output is deterministic", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& ex) {
      v = {false, std::string("threw: ") + ex.what()};
    }
    failed += !v.pass;
    std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed;
}
