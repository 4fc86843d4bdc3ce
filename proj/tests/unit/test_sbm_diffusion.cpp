#include <Eigen/SparseLU>
#include <cmath>
#include <random>

#include "doctest.h"
#include "sbm/diffusion.hpp"
#include "sbm/stencil.hpp"

using namespace sbm;

namespace {

// Sharp-interface finite differences on [5, 25] with a fine grid, the
// Neumann end closed by a ghost node: an oracle independent of the SBM code.
Eigen::VectorXd sharp_fd(const OneDimBenchmark& bench, int n, double& h) {
  h = 20.0 / (n - 1);
  std::vector<Eigen::Triplet<double>> t;
  Eigen::VectorXd rhs(n);
  t.emplace_back(0, 0, 1.0);
  rhs[0] = 0.4;
  const double inv = 1.0 / (h * h);
  for (int i = 1; i < n; ++i) {
    const double off_lo = inv, off_hi = inv;
    t.emplace_back(i, i, -2.0 * inv - bench.sink_rate);
    rhs[i] = -bench.source;
    if (i < n - 1) {
      t.emplace_back(i, i - 1, off_lo);
      t.emplace_back(i, i + 1, off_hi);
    } else {
      // C[n] = C[n-2] + 2 h (-0.1)
      t.emplace_back(i, i - 1, 2.0 * inv);
      rhs[i] -= inv * 2.0 * h * -0.1;
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  return lu.solve(rhs);
}

DiffusionProblem slab_problem(const Grid& g, double zeta) {
  DiffusionProblem prob;
  prob.dp = tanh_from_distance(slab_distance(g, 0, 0.25 * g.dim(0) * g.spacing(0),
                                             0.75 * g.dim(0) * g.spacing(0)),
                               zeta);
  prob.D = ScalarField(g, 1.0);
  prob.S = ScalarField(g, 0.0);
  prob.bc = BoundarySpec::no_flux(g);
  return prob;
}

ScalarField random_field(const Grid& g, unsigned seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ScalarField f(g);
  for (Index p = 0; p < g.size(); ++p) f[p] = u(rng);
  return f;
}

}  // namespace

TEST_CASE("steady 1D solution: boundary values, coefficients, sharp oracle") {
  for (const OneDimBenchmark bench : {OneDimBenchmark{}, OneDimBenchmark::as_printed()}) {
    CAPTURE(bench.sink_rate);
    CHECK(analytic_1d_steady(5.0, bench) == doctest::Approx(0.4).epsilon(1e-13));
    CHECK(analytic_1d_slope(25.0, bench) == doctest::Approx(-0.1).epsilon(1e-12));
    double h;
    const Eigen::VectorXd ref = sharp_fd(bench, 80001, h);
    double err = 0.0;
    for (int i = 0; i < ref.size(); i += 50)
      err = std::max(err, std::abs(ref[i] - analytic_1d_steady(5.0 + i * h, bench)));
    CHECK(err <= 1e-6);
  }
  const SteadyCoefficients printed = analytic_1d_coefficients(OneDimBenchmark::as_printed());
  CHECK(printed.a == doctest::Approx(0.3998).epsilon(1e-14));
  // The cosh/sinh form agrees with the evaluated solution where it does not cancel.
  for (double x : {5.0, 5.3, 5.9}) {
    const double u = 10.0 * (x - 5.0);
    CHECK(0.0002 + printed.a * std::cosh(u) + printed.b * std::sinh(u) ==
          doctest::Approx(analytic_1d_steady(x, OneDimBenchmark::as_printed())).epsilon(1e-10));
  }
  const SteadyCoefficients slow = analytic_1d_coefficients();
  CHECK(slow.a == doctest::Approx(-1.6).epsilon(1e-14));
  for (double x : {5.0, 11.0, 17.5, 25.0}) {
    const double u = 0.1 * (x - 5.0);
    CHECK(2.0 + slow.a * std::cosh(u) + slow.b * std::sinh(u) ==
          doctest::Approx(analytic_1d_steady(x)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(analytic_1d_steady(4.0), InvalidArgument);
}

TEST_CASE("uniform concentration in a uniform domain does not move") {
  const Grid g = Grid::plane(12, 10, 0.5, 0.5);
  DiffusionProblem prob;
  prob.dp = DomainParameter::uniform(g);
  prob.D = random_field(g, 1, 0.5, 2.0);
  prob.S = ScalarField(g, 0.0);
  prob.bc = BoundarySpec::no_flux(g);
  prob.dt = 1e-3;
  const ScalarField C(g, 0.37);
  CHECK((step_diffusion_mixed(C, prob).values() == C.values()).all());
}

TEST_CASE("the boundary value is a fixed point of the Dirichlet term") {
  const Grid g = Grid::line(201, 0.05);
  for (GuardForm guard : {GuardForm::blended, GuardForm::additive}) {
    DiffusionProblem prob = slab_problem(g, 0.2);
    prob.guard = guard;
    prob.bc = BoundarySpec::regional(ScalarField(g, -1.0), 0.0, 0.3);
    const ScalarField C(g, 0.3);
    CHECK(diffusion_rate(C, prob).values().abs().maxCoeff() <= 1e-9);
    CHECK(assemble_diffusion(prob).apply(C.values()).abs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("bulk nodes reproduce the plain diffusion step bitwise") {
  const Grid g = Grid::plane(40, 30, 1.0, 1.0);
  DiffusionProblem prob;
  prob.dp = tanh_from_distance(halfspace_distance(g, 0, 10.0), 0.5);
  prob.D = random_field(g, 2, 0.5, 1.5);
  prob.S = random_field(g, 3, -0.1, 0.1);
  prob.sink_rate = 2.0;
  prob.bc.neumann_value = random_field(g, 4, -1.0, 1.0);
  prob.bc.dirichlet_value = random_field(g, 5, 0.0, 1.0);
  prob.bc.neumann_weight = ScalarField(g, 0.5);
  prob.bc.dirichlet_weight = ScalarField(g, 0.5);
  prob.dt = 5e-4;
  const ScalarField C = random_field(g, 6);
  const ScalarField mixed = step_diffusion_mixed(C, prob);
  const ScalarField plain = step_plain_diffusion(C, prob.D, prob.S, prob.sink_rate, prob.dt);
  int bulk = 0;
  for (Index p = 0; p < g.size(); ++p) {
    const Index3 ijk = g.unravel(p);
    bool all_one = true;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        const int i = std::clamp(ijk[0] + di, 0, 39), j = std::clamp(ijk[1] + dj, 0, 29);
        all_one = all_one && prob.dp.psi[g.ravel({i, j, 0})] == 1.0;
      }
    if (!all_one) continue;
    ++bulk;
    CHECK(mixed[p] == plain[p]);
  }
  CHECK(bulk > 300);
}

TEST_CASE("assembled rate operator matches the field operators") {
  auto compare = [](const DiffusionProblem& prob, const ScalarField& C) {
    const Eigen::ArrayXd a = assemble_diffusion(prob).apply(C.values());
    const Eigen::ArrayXd b = diffusion_rate(C, prob).values();
    return (a - b).abs().maxCoeff() / b.abs().maxCoeff();
  };
  SUBCASE("1D benchmark geometry") {
    const Grid g = Grid::line(241, 0.125);
    DiffusionProblem prob;
    prob.dp = tanh_from_distance(slab_distance(g, 0, 5.0, 25.0), 0.3);
    prob.D = ScalarField(g, 1.0);
    prob.S = ScalarField(g, 0.02);
    prob.sink_rate = 0.01;
    prob.bc = BoundarySpec::regional(
        ScalarField::from_function(g, [](const auto& x) { return x[0] - 15.0; }), -0.1, 0.4);
    CHECK(compare(prob, random_field(g, 7)) <= 1e-12);
  }
  SUBCASE("2D disc with mixed weights and closed faces") {
    const Grid g = Grid::plane(30, 26, 0.5, 0.5);
    DiffusionProblem prob;
    prob.dp = tanh_from_distance(sphere_distance(g, {7.2, 6.1, 0.0}, 4.5), 0.6);
    prob.D = random_field(g, 8, 0.5, 1.5);
    prob.S = random_field(g, 9);
    prob.bc.neumann_value = random_field(g, 10);
    prob.bc.dirichlet_value = random_field(g, 11);
    prob.bc.neumann_weight = random_field(g, 12, 0.0, 0.5);
    prob.bc.dirichlet_weight = random_field(g, 13, 0.0, 0.5);
    prob.box.set(0, Side::lo, FaceClosure::fixed_value(0.2));
    prob.box.set(1, Side::hi, FaceClosure::fixed_gradient(-0.4));
    CHECK(compare(prob, random_field(g, 14)) <= 1e-12);
  }
  SUBCASE("axisymmetric cylinder") {
    const Grid g = Grid::axisymmetric(20, 16, 0.1, 0.1, 0.05, 0.0);
    DiffusionProblem prob;
    prob.dp = tanh_from_distance(halfspace_distance(g, 0, 1.2, false), 0.1);
    prob.D = ScalarField(g, 1.0);
    prob.S = ScalarField(g, 0.0);
    prob.bc = BoundarySpec::regional(ScalarField(g, -1.0), 0.0, 1.0);
    CHECK(compare(prob, random_field(g, 15)) <= 1e-12);
  }
}

TEST_CASE("the assembled stepper advances by dt times the rate") {
  const Grid g = Grid::line(121, 0.25);
  DiffusionProblem prob = slab_problem(g, 0.5);
  prob.S = ScalarField(g, 0.01);
  DiffusionStepper stepper(prob);
  CHECK(stepper.dt() == doctest::Approx(0.25 * stepper.max_stable_dt()));
  const ScalarField C = random_field(g, 16);
  Eigen::ArrayXd x = C.values();
  stepper.step(x);
  const Eigen::ArrayXd ref = C.values() + stepper.dt() * diffusion_rate(C, prob).values();
  CHECK((x - ref).abs().maxCoeff() <= 1e-13);
}

TEST_CASE("no-flux boundary conserves the domain content") {
  const Grid g = Grid::plane(24, 24, 1.0, 1.0);
  DiffusionProblem prob;
  prob.dp = tanh_from_distance(sphere_distance(g, {11.5, 11.5, 0.0}, 7.0), 1.0);
  prob.D = ScalarField(g, 1.0);
  prob.S = ScalarField(g, 0.0);
  prob.bc = BoundarySpec::no_flux(g);
  DiffusionStepper stepper(prob);
  ScalarField C = random_field(g, 17);
  auto content = [&](const Eigen::ArrayXd& c) {
    return integrate(ScalarField(g, Eigen::ArrayXd(prob.dp.psi.values() * c)));
  };
  Eigen::ArrayXd x = C.values();
  const double before = content(x);
  for (int s = 0; s < 100000; ++s) stepper.step(x);
  CHECK(std::abs(content(x) - before) / before <= 1e-6);
  // the field relaxed, so the check is not vacuous
  CHECK((x - C.values()).abs().maxCoeff() > 0.1);
}

TEST_CASE("guard forms differ by order upsilon") {
  const Eigen::ArrayXd psi = Eigen::ArrayXd::LinSpaced(11, 0.0, 1.0);
  const Eigen::ArrayXd a = guarded(psi, 1e-3, GuardForm::additive);
  const Eigen::ArrayXd b = guarded(psi, 1e-3, GuardForm::blended);
  CHECK(((a - b) - 1e-3 * psi).abs().maxCoeff() <= 1e-15);
  CHECK(b[10] == 1.0);
  CHECK(b.minCoeff() >= 1e-3);
  CHECK(guard_form_from_string(to_string(GuardForm::additive)) == GuardForm::additive);
  CHECK_THROWS_AS(guard_form_from_string("ratio"), InvalidArgument);
}

TEST_CASE("relative error algebra") {
  const Grid g = Grid::line(50, 1.0);
  const ScalarField ref = random_field(g, 18, 0.5, 2.0);
  std::vector<unsigned char> region(50, 0);
  for (int i = 10; i < 40; ++i) region[i] = 1;
  CHECK(relative_error(ref, ref, region) == 0.0);
  const double delta = 0.03;
  const ScalarField scaled(g, Eigen::ArrayXd(ref.values() * (1.0 + delta)));
  double sq = 0.0, sum = 0.0;
  for (int i = 10; i < 40; ++i) {
    sq += ref[i] * ref[i];
    sum += ref[i];
  }
  CHECK(relative_error(scaled, ref, region) ==
        doctest::Approx(delta * std::sqrt(sq / 30.0) / (sum / 30.0)).epsilon(1e-12));
  Eigen::ArrayXd w = Eigen::ArrayXd::Ones(50);
  CHECK(relative_error(scaled, ref, region, w) ==
        doctest::Approx(relative_error(scaled, ref, region)).epsilon(1e-14));
  CHECK_THROWS_AS(relative_error(ref, ref, std::vector<unsigned char>(50, 0)), InvalidArgument);
  CHECK_THROWS_AS(relative_error(ref, ScalarField(g, 0.0), region), InvalidArgument);
}

TEST_CASE("invalid problems and unstable steps are rejected") {
  const Grid g = Grid::line(41, 0.25);
  DiffusionProblem prob = slab_problem(g, 0.5);
  const ScalarField C(g, 0.1);
  SUBCASE("stability bound") {
    const double bound = stability_bound(assemble_diffusion(prob));
    prob.dt = 1.5 * bound;
    CHECK_THROWS_AS(step_diffusion_mixed(C, prob), InvalidArgument);
    CHECK_THROWS_AS(DiffusionStepper{prob}, InvalidArgument);
    try {
      step_diffusion_mixed(C, prob);
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("use dt <=") != std::string::npos);
    }
    prob.dt = 0.5 * bound;
    CHECK_NOTHROW(step_diffusion_mixed(C, prob));
  }
  SUBCASE("non-finite concentration aborts") {
    prob.dt = 1e-3;
    ScalarField bad = C;
    bad[20] = std::nan("");
    CHECK_THROWS_AS(step_diffusion_mixed(bad, prob), SolverError);
  }
  SUBCASE("weights and parameters") {
    prob.bc.neumann_weight[3] = 1.2;
    CHECK_THROWS_AS(prob.validate(), InvalidArgument);
    prob.bc = BoundarySpec::no_flux(g);
    prob.bc.dirichlet_weight[3] = 0.5;
    CHECK_THROWS_AS(prob.validate(), InvalidArgument);
    prob.bc = BoundarySpec::no_flux(g);
    prob.upsilon = 0.5;
    CHECK_THROWS_AS(prob.validate(), InvalidArgument);
    prob.upsilon = 1e-7;
    prob.D[0] = -1.0;
    CHECK_THROWS_AS(prob.validate(), InvalidArgument);
  }
}
