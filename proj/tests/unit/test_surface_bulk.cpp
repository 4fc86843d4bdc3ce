#include <cmath>
#include <complex>

#include "doctest.h"
#include "sbm/diffusion.hpp"
#include "sbm/stencil.hpp"
#include "sbm/surface_bulk.hpp"

using namespace sbm;

namespace {

DomainParameter sphere_dp(int n, double R, double zeta) {
  const Grid g = Grid::box(n, n, n, 1.0, 1.0, 1.0);
  const double c = 0.5 * (n - 1);
  return tanh_from_distance(sphere_distance(g, {c, c, c}, R), zeta);
}

double max_abs(const Eigen::ArrayXd& a) { return a.abs().maxCoeff(); }

// Nodes with 0.1 < psi < 0.9 whose whole stencil stays inside the box.
std::vector<unsigned char> shell(const DomainParameter& dp, double lo = 0.1, double hi = 0.9) {
  const Grid& g = dp.grid();
  std::vector<unsigned char> s(g.size(), 0);
  for (Index p = 0; p < g.size(); ++p) {
    const Index3 ijk = g.unravel(p);
    bool inner = true;
    for (int a = 0; a < g.ndim(); ++a) inner = inner && ijk[a] >= 2 && ijk[a] <= g.dim(a) - 3;
    s[p] = inner && dp.psi[p] > lo && dp.psi[p] < hi;
  }
  return s;
}

// Root of D_b b J1(bR)/J0(bR) + D_s b^2 = kappa for the slowest axial mode
// J0(b r) exp(-b z) of the sharp cylinder.
double bessel_decay_rate(double R, double D_b, double D_s, double kappa) {
  auto f = [&](double b) {
    return D_b * b * std::cyl_bessel_j(1.0, b * R) / std::cyl_bessel_j(0.0, b * R) +
           D_s * b * b - kappa;
  };
  double lo = 1e-9, hi = 2.4048 / R - 1e-9;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Axial decay length from the cross-section averages: for a single mode
// cosh(h / lambda) = (Cbar(z - h) + Cbar(z + h)) / (2 Cbar(z)).
double decay_length(const ScalarField& C, int surface_index, int j, int h) {
  const Grid& g = C.grid();
  auto avg = [&](int jj) {
    double s = 0.0, v = 0.0;
    for (int i = 0; i <= surface_index; ++i) {
      const double w = g.node_volume(g.ravel({i, jj, 0}));
      s += w * C.at(i, jj);
      v += w;
    }
    return s / v;
  };
  const double ratio = (avg(j - h) + avg(j + h)) / (2.0 * avg(j));
  return h * g.spacing(1) / std::acosh(ratio);
}

SurfaceBulkProblem cylinder_problem(const CylinderSetup& s, double kappa, double D_s) {
  SurfaceBulkProblem prob;
  prob.dp = s.domain();
  prob.D_b = 1.0;
  prob.D_s = D_s;
  prob.kappa = kappa;
  prob.box = s.box();
  return prob;
}

}  // namespace

TEST_CASE("surface Laplacian: constants, flat interface, gating") {
  const DomainParameter sph = sphere_dp(24, 8.0, 1.5);
  CHECK(max_abs(surface_laplacian(ScalarField(sph.grid(), 3.0), sph).values()) <= 1e-12);

  const Grid g = Grid::plane(40, 30, 0.5, 0.5);
  const DomainParameter flat = tanh_from_distance(halfspace_distance(g, 0, 10.0, false), 1.0);
  const ScalarField C = ScalarField::from_function(g, [](const auto& x) { return x[1] * x[1]; });
  const ScalarField L = surface_laplacian(C, flat);
  int checked = 0;
  for (Index p = 0; p < g.size(); ++p) {
    const int j = g.unravel(p)[1];
    if (flat.grad_mag[p] > flat.eps_n && j > 0 && j < g.dim(1) - 1) {
      CHECK(L[p] == doctest::Approx(2.0).epsilon(1e-10));
      ++checked;
    }
    if (flat.projector(0, 0)[p] == 0.0 && flat.projector(1, 1)[p] == 0.0) CHECK(L[p] == 0.0);
  }
  CHECK(checked > 0);
}

TEST_CASE("surface Laplacian of cos(theta) on a sphere") {
  const int n = 36;
  const double R = 12.0, c = 0.5 * (n - 1);
  const DomainParameter dp = sphere_dp(n, R, 1.0);
  const ScalarField C = ScalarField::from_function(dp.grid(), [c](const auto& x) {
    const double dx = x[0] - c, dy = x[1] - c, dz = x[2] - c;
    return dz / std::sqrt(dx * dx + dy * dy + dz * dz);
  });
  const ScalarField L = surface_laplacian(C, dp);
  const auto s = shell(dp, 0.3, 0.7);
  double num = 0.0, den = 0.0;
  for (Index p = 0; p < dp.grid().size(); ++p) {
    if (!s[p]) continue;
    num += L[p] * C[p];
    den += C[p] * C[p];
  }
  const double eigen = num / den;
  CHECK(eigen == doctest::Approx(-2.0 / (R * R)).epsilon(0.10));
}

TEST_CASE("surface Laplacian annihilates functions of psi") {
  // Discretization error only: it falls at second order under refinement.
  double previous = 0.0;
  for (int k : {1, 2}) {
    const DomainParameter dp = sphere_dp(32 * k, 10.0 * k, 1.5 * k);
    const Grid& g = dp.grid();
    const ScalarField C(g, Eigen::ArrayXd(dp.psi.values().cube() + 2.0 * dp.psi.values()));
    const ScalarField Ls = surface_laplacian(C, dp);
    const ScalarField Lfull = conservative_div(ScalarField(g, 1.0), C);
    const auto s = shell(dp);
    double worst = 0.0, scale = 0.0;
    for (Index p = 0; p < g.size(); ++p) {
      if (!s[p]) continue;
      worst = std::max(worst, std::abs(Ls[p]));
      scale = std::max(scale, std::abs(Lfull[p]));
    }
    const double rel = worst / scale;
    if (k == 1) CHECK(rel <= 0.15);
    if (k == 2) {
      CHECK(rel <= 0.05);
      CHECK(rel <= previous / 3.0);
    }
    previous = rel;
  }
}

TEST_CASE("assembled and field routes agree") {
  SUBCASE("3D sphere") {
    SurfaceBulkProblem prob;
    prob.dp = sphere_dp(20, 6.0, 1.2);
    prob.D_b = 0.7;
    prob.D_s = 3.0;
    prob.kappa = 1.3;
    prob.L = 0.4;
    const Grid& g = prob.dp.grid();
    const ScalarField C = ScalarField::from_function(
        g, [](const auto& x) { return std::sin(0.3 * x[0]) + std::cos(0.2 * x[1] * x[2] / 10.0); });
    const Eigen::ArrayXd field = coupled_rate(C, prob).values();
    const Eigen::ArrayXd assembled = assemble_coupled(prob).apply(C.values());
    CHECK(max_abs(field - assembled) <= 1e-11 * max_abs(field));

    StencilOperator<double> op(g);
    add_surface_laplacian(op, Eigen::ArrayXd::Ones(g.size()), prob.dp, BoxClosure{});
    const Eigen::ArrayXd lf = surface_laplacian(C, prob.dp).values();
    CHECK(max_abs(lf - op.apply(C.values())) <= 1e-12 * max_abs(lf));
  }
  SUBCASE("axisymmetric cylinder with fixed-value faces") {
    const CylinderSetup s = CylinderSetup::make(CylinderResolution::thick, 2.0);
    SurfaceBulkProblem prob = cylinder_problem(s, 2.1, 10.0);
    const Grid& g = s.grid;
    const ScalarField C = ScalarField::from_function(
        g, [](const auto& x) { return std::exp(-x[1]) * (1.0 + 0.3 * x[0] * x[0]); });
    const Eigen::ArrayXd field = coupled_rate(C, prob).values();
    const Eigen::ArrayXd assembled = assemble_coupled(prob).apply(C.values());
    CHECK(max_abs(field - assembled) <= 1e-11 * max_abs(field));

    StencilOperator<double> op(g);
    add_surface_laplacian(op, Eigen::ArrayXd::Ones(g.size()), prob.dp, prob.box);
    const Eigen::ArrayXd lf = surface_laplacian(C, prob.dp, prob.box).values();
    CHECK(max_abs(lf - op.apply(C.values())) <= 1e-12 * max_abs(lf));
  }
}

TEST_CASE("coupled step reduces to bulk and to no-flux diffusion") {
  const Grid g = Grid::plane(30, 20, 0.1, 0.1);
  const ScalarField C = ScalarField::from_function(
      g, [](const auto& x) { return std::sin(x[0]) * std::cos(2.0 * x[1]); });

  SurfaceBulkProblem bulk;
  bulk.dp = DomainParameter::uniform(g);
  bulk.kappa = 5.0;
  bulk.D_s = 2.0;
  bulk.L = 1.0;
  const double dt = 1e-3;
  const ScalarField a = step_coupled(C, bulk, dt);
  const ScalarField b = step_plain_diffusion(C, ScalarField(g, 1.0), ScalarField(g, 0.0), 0.0, dt);
  CHECK((a.values() == b.values()).all());
  CHECK(max_abs(step_coupled(ScalarField(g, 0.4), bulk, dt).values() - 0.4) == 0.0);

  SurfaceBulkProblem sb;
  sb.dp = tanh_from_distance(sphere_distance(g, {1.5, 1.0, 0.0}, 0.8), 0.1);
  sb.D_b = 1.5;
  DiffusionProblem dprob;
  dprob.dp = sb.dp;
  dprob.D = ScalarField(g, 1.5);
  dprob.S = ScalarField(g, 0.0);
  dprob.bc = BoundarySpec::no_flux(g);
  const Eigen::ArrayXd rc = coupled_rate(C, sb).values();
  const Eigen::ArrayXd rd = diffusion_rate(C, dprob).values();
  CHECK(max_abs(rc - rd) <= 1e-11 * max_abs(rd));
}

TEST_CASE("coupled stepper matches the field update and rejects large steps") {
  const CylinderSetup s = CylinderSetup::make(CylinderResolution::thick, 1.0);
  const SurfaceBulkProblem prob = cylinder_problem(s, 20.0, 10.0);
  CoupledStepper stepper(prob);
  const ScalarField C0 = ScalarField::from_function(
      s.grid, [](const auto& x) { return 1.0 - x[1] + 0.1 * std::cos(x[0]); });
  Eigen::ArrayXd C = C0.values();
  stepper.step(C);
  const Eigen::ArrayXd ref = step_coupled(C0, prob, stepper.dt()).values();
  CHECK(max_abs(C - ref) <= 1e-12);
  CHECK_THROWS_AS(step_coupled(C0, prob, 2.0 * stepper.max_stable_dt()), InvalidArgument);
  CHECK_THROWS_AS(CoupledStepper(prob, 2.0 * stepper.max_stable_dt()), InvalidArgument);

  SurfaceBulkProblem bad = prob;
  bad.kappa = -1.0;
  CHECK_THROWS_AS(assemble_coupled(bad), InvalidArgument);
  bad = prob;
  bad.upsilon = 0.0;
  CHECK_THROWS_AS(assemble_coupled(bad), InvalidArgument);
}

TEST_CASE("slab surface reaction: flux balance at the interface") {
  const double zeta = 0.05, dx = 0.02, kappa = 0.1;
  const Grid g = Grid::line(static_cast<int>(std::lround(12.0 / dx)) + 1, dx);
  SurfaceBulkProblem prob;
  prob.dp = tanh_from_distance(halfspace_distance(g, 0, 10.0, false), zeta);
  prob.kappa = kappa;
  prob.box.set(0, Side::lo, FaceClosure::fixed_value(1.0));
  const HelmholtzResult r = solve_helmholtz_adlr(prob, {.tol = 1e-12, .max_sweeps = 50});
  REQUIRE(r.converged);
  Eigen::ArrayXd C = r.C.values().real();
  CHECK(r.C.values().imag().abs().maxCoeff() == 0.0);
  // Sharp oracle: C = 1 + a x with -D_b a = kappa C(10).
  const double a = -kappa / (1.0 + 10.0 * kappa);
  const int i = static_cast<int>(std::lround(10.0 / dx));
  CHECK(C[i] == doctest::Approx(1.0 + 10.0 * a).epsilon(0.01));
  const double slope = (C[i - 5] - C[i - 15]) / (10.0 * dx);
  CHECK(-slope == doctest::Approx(kappa * C[i]).epsilon(0.01));
  CHECK(C[i / 2] == doctest::Approx(1.0 + 5.0 * a).epsilon(0.005));

  // The time march reaches the same state.
  CoupledStepper stepper(prob, 0.0, 0.9);
  Eigen::ArrayXd T = Eigen::ArrayXd::Zero(g.size());
  T[0] = 1.0;
  std::vector<unsigned char> mon(g.size(), 0);
  for (Index p = 0; p < g.size(); ++p) mon[p] = prob.dp.psi[p] >= 0.5;
  stepper.set_monitor(mon);
  while (stepper.step(T) > 1e-9) {
  }
  double worst = 0.0;
  for (Index p = 0; p < g.size(); ++p)
    if (mon[p]) worst = std::max(worst, std::abs(T[p] - C[p]));
  CHECK(worst <= 1e-6);
}

TEST_CASE("ADLR: Laplace, oscillatory decay, DC imaginary part") {
  SUBCASE("linear profile") {
    const Grid g = Grid::plane(21, 11, 0.05, 0.1);
    SurfaceBulkProblem prob;
    prob.dp = DomainParameter::uniform(g);
    prob.box.set(0, Side::lo, FaceClosure::fixed_value(1.0));
    prob.box.set(0, Side::hi, FaceClosure::fixed_value(0.0));
    const HelmholtzResult r = solve_helmholtz_adlr(prob, {.tol = 1e-12});
    CHECK(r.converged);
    CHECK(r.residual <= 1e-12);
    for (Index p = 0; p < g.size(); ++p) {
      const double x = g.position(p)[0];
      CHECK(std::abs(r.C[p] - std::complex<double>(1.0 - x, 0.0)) <= 1e-10);
      CHECK(r.C[p].imag() == 0.0);
    }
  }
  SUBCASE("oscillatory diffusion decays like exp(-sqrt(omega / 2D) y)") {
    const double omega = 2.0, D = 0.5;
    const Grid g = Grid::line(1201, 0.01);
    SurfaceBulkProblem prob;
    prob.dp = DomainParameter::uniform(g);
    prob.D_b = D;
    prob.omega = omega;
    prob.box.set(0, Side::lo, FaceClosure::fixed_value(1.0));
    const HelmholtzResult r = solve_helmholtz_adlr(prob, {.tol = 1e-10});
    CHECK(r.converged);
    const double k = std::sqrt(omega / (2.0 * D));
    for (int j : {100, 200, 400}) {
      const double mag = std::abs(r.C[j]);
      const double y = g.coordinate(0, j);
      CHECK(-std::log(mag) / y == doctest::Approx(k).epsilon(0.05));
    }
    // Phase lags by the same rate.
    CHECK(-std::arg(r.C[200]) / 2.0 == doctest::Approx(k).epsilon(0.05));
  }
}

TEST_CASE("ADLR on the cylinder: zero imaginary part, monotone residual, time-march oracle") {
  const CylinderSetup s = CylinderSetup::make(CylinderResolution::thick, 3.0);
  const SurfaceBulkProblem prob = cylinder_problem(s, 20.0, 10.0);
  const HelmholtzResult r = solve_helmholtz_adlr(prob, {.tol = 1e-10});
  REQUIRE(r.converged);
  CHECK((r.C.values().imag() == 0.0).all());
  for (size_t k = 3; k + 1 < r.history.size(); ++k) CHECK(r.history[k + 1] <= r.history[k]);

  CoupledStepper stepper(prob, 0.0, 0.9);
  std::vector<unsigned char> mon(s.grid.size(), 0);
  for (Index p = 0; p < s.grid.size(); ++p) mon[p] = prob.dp.psi[p] >= 0.5;
  stepper.set_monitor(mon);
  Eigen::ArrayXd T = Eigen::ArrayXd::Zero(s.grid.size());
  for (int i = 0; i < s.grid.dim(0); ++i) T[s.grid.ravel({i, 0, 0})] = 1.0;
  while (stepper.step(T) > 1e-5 && stepper.steps() < 5000000) {
  }
  double num = 0.0, den = 0.0;
  for (Index p = 0; p < s.grid.size(); ++p) {
    if (!mon[p]) continue;
    num = std::max(num, std::abs(T[p] - r.C[p].real()));
    den = std::max(den, std::abs(r.C[p].real()));
  }
  CHECK(num / den <= 1e-3);
}

TEST_CASE("ADLR rejects singular lines and reports the best iterate") {
  StencilOperator<double> op(Grid::line(3, 1.0));
  op.coeff(StencilOperator<double>::kCentre);
  op.rhs() = Eigen::ArrayXd::Ones(3);
  CHECK_THROWS_AS(solve_adlr(op, Eigen::ArrayXd(Eigen::ArrayXd::Zero(3))), SolverError);

  const CylinderSetup s = CylinderSetup::make(CylinderResolution::thick, 3.0);
  const HelmholtzResult r =
      solve_helmholtz_adlr(cylinder_problem(s, 2.1, 10.0), {.tol = 1e-14, .max_sweeps = 5});
  CHECK_FALSE(r.converged);
  CHECK(r.sweeps == 5);
  CHECK(r.residual > 0.0);
}

TEST_CASE("sharp cylinder reference") {
  SUBCASE("no reaction: linear in z") {
    const CylinderSetup s = CylinderSetup::make(CylinderResolution::thick);
    const ScalarField C = solve_sharp_cylinder(s, 1.0, 0.0, 0.0);
    for (int i = 0; i <= s.surface_index; ++i)
      for (int j = 0; j < s.grid.dim(1); ++j)
        CHECK(C.at(i, j) == doctest::Approx(1.0 - s.grid.coordinate(1, j) / 12.0).epsilon(1e-9));
    CHECK(C.at(s.surface_index + 1, 3) == 0.0);
  }
  SUBCASE("axial decay against the Bessel mode and the fin limit") {
    const CylinderSetup s = CylinderSetup::make(CylinderResolution::thin);
    const double rs = s.grid.coordinate(0, s.surface_index);
    for (double D_s : {0.0, 10.0}) {
      const ScalarField C = solve_sharp_cylinder(s, 1.0, D_s, 2.1);
      const double b = bessel_decay_rate(rs, 1.0, D_s, 2.1);
      CHECK(decay_length(C, s.surface_index, 50, 10) == doctest::Approx(1.0 / b).epsilon(0.03));
    }
    const double kappa = 0.02;
    const ScalarField C = solve_sharp_cylinder(s, 1.0, 0.0, kappa);
    // The finite length adds a sinh profile; the two-point ratio absorbs it.
    CHECK(decay_length(C, s.surface_index, 100, 25) ==
          doctest::Approx(std::sqrt(rs / (2.0 * kappa))).epsilon(0.15));
  }
  SUBCASE("strong reaction depresses the surface") {
    const CylinderSetup s = CylinderSetup::make(CylinderResolution::thin);
    const ScalarField C = solve_sharp_cylinder(s, 1.0, 10.0, 50.0);
    for (int j : {5, 12, 25}) CHECK(C.at(s.surface_index, j) < C.at(0, j));
  }
  SUBCASE("the alternating update reaches the direct solution") {
    const CylinderSetup s = CylinderSetup::make(CylinderResolution::thick);
    const ScalarField direct = solve_sharp_cylinder(s, 1.0, 10.0, 20.0);
    const ScalarField alt =
        solve_sharp_cylinder(s, 1.0, 10.0, 20.0, {.method = SharpMethod::alternating});
    CHECK(max_abs(direct.values() - alt.values()) <= 1e-8);
  }
}

TEST_CASE("cylinder error report") {
  const CylinderSetup s = CylinderSetup::make(CylinderResolution::thick);
  const DomainParameter dp = s.domain();
  const ScalarField sharp = solve_sharp_cylinder(s, 1.0, 10.0, 2.1);
  const CylinderErrors zero = cylinder_error_report(sharp, sharp, dp);
  CHECK(zero.e == 0.0);
  CHECK(zero.e_b == 0.0);
  CHECK(zero.e_s == 0.0);
  CHECK(zero.active_planes > 1);
  CHECK(zero.active_planes < s.grid.dim(1));

  // A constant offset on the surface nodes only.
  ScalarField sbm = sharp;
  const double delta = 1e-3;
  for (int j = 0; j < s.grid.dim(1); ++j) sbm.at(s.surface_index, j) += delta;
  double vol = 0.0, vol_s = 0.0, ref = 0.0;
  for (int j = 0; j < zero.active_planes; ++j) {
    for (int i = 0; i <= s.surface_index; ++i) {
      const double w = s.grid.node_volume(s.grid.ravel({i, j, 0}));
      vol += w;
      ref += w * sharp.at(i, j);
      if (i == s.surface_index) vol_s += w;
    }
  }
  const CylinderErrors e = cylinder_error_report(sbm, sharp, dp);
  const double mean = ref / vol;
  CHECK(e.e_b == 0.0);
  CHECK(e.e_s == doctest::Approx(delta / mean).epsilon(1e-12));
  CHECK(e.e == doctest::Approx(delta * std::sqrt(vol_s / vol) / mean).epsilon(1e-12));
  CHECK(e.e * e.e == doctest::Approx(((vol - vol_s) * e.e_b * e.e_b + vol_s * e.e_s * e.e_s) / vol));

  CHECK_THROWS_AS(cylinder_error_report(sharp, ScalarField(s.grid, 0.0), dp), InvalidArgument);
}

TEST_CASE("cylinder setups") {
  const CylinderSetup thin = CylinderSetup::make(CylinderResolution::thin);
  CHECK(thin.grid.dim(0) == 75);
  CHECK(thin.grid.dim(1) == 301);
  CHECK(thin.surface_index == 56);
  CHECK(thin.R == 1.0);
  for (auto res : {CylinderResolution::thin, CylinderResolution::medium, CylinderResolution::thick}) {
    const CylinderSetup s = CylinderSetup::make(res);
    const DomainParameter dp = s.domain();
    CHECK(dp.psi.at(s.surface_index, 0) >= 0.5);
    CHECK(dp.psi.at(s.surface_index + 1, 0) < 0.5);
  }
  CHECK(nominal_thickness(thin.zeta) == doctest::Approx(0.075).epsilon(0.01));
  CHECK(nominal_thickness(CylinderSetup::make(CylinderResolution::medium).zeta) ==
        doctest::Approx(0.149).epsilon(0.01));
  CHECK(nominal_thickness(CylinderSetup::make(CylinderResolution::thick).zeta) ==
        doctest::Approx(0.292).epsilon(0.01));
  CHECK(cylinder_resolution_from_string("medium") == CylinderResolution::medium);
  CHECK_THROWS_AS(cylinder_resolution_from_string("fat"), InvalidArgument);
}
