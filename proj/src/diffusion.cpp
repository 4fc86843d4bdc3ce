#include "sbm/diffusion.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sbm/stencil.hpp"

namespace sbm {

BoundarySpec BoundarySpec::no_flux(const Grid& grid) {
  return {ScalarField(grid, 0.0), ScalarField(grid, 0.0), ScalarField(grid, 1.0),
          ScalarField(grid, 0.0)};
}

BoundarySpec BoundarySpec::regional(const ScalarField& neumann_region, double neumann_value,
                                    double dirichlet_value) {
  const Grid& g = neumann_region.grid();
  const Eigen::ArrayXd wn = (neumann_region.values() > 0.0).cast<double>();
  return {ScalarField(g, neumann_value), ScalarField(g, dirichlet_value), ScalarField(g, wn),
          ScalarField(g, Eigen::ArrayXd(1.0 - wn))};
}

void BoundarySpec::validate(const Grid& grid) const {
  for (const ScalarField* f : {&neumann_value, &dirichlet_value, &neumann_weight, &dirichlet_weight}) {
    require_same_grid(grid, f->grid(), "boundary spec");
    require(f->all_finite(), "boundary spec: values must be finite");
  }
  const double tol = 1e-12;
  const auto& wn = neumann_weight.values();
  const auto& wd = dirichlet_weight.values();
  require((wn >= -tol).all() && (wn <= 1.0 + tol).all() && (wd >= -tol).all() &&
              (wd <= 1.0 + tol).all(),
          "boundary spec: weights must lie in [0, 1]");
  require(((wn + wd) <= 1.0 + tol).all(), "boundary spec: W_N + W_D must not exceed 1");
}

void DiffusionProblem::validate() const {
  const Grid& g = dp.grid();
  require_same_grid(g, D.grid(), "diffusion problem: D");
  require_same_grid(g, S.grid(), "diffusion problem: S");
  require((D.values() >= 0.0).all() && D.all_finite(), "diffusion problem: D must be >= 0");
  require(S.all_finite(), "diffusion problem: S must be finite");
  require(sink_rate >= 0.0, "diffusion problem: sink rate must be >= 0");
  require(upsilon >= 1e-16 && upsilon <= 1e-2, "diffusion problem: upsilon must lie in [1e-16, 1e-2]");
  require(dt >= 0.0, "diffusion problem: dt must be positive (or 0 for automatic)");
  bc.validate(g);
}

namespace {

// grad psi completed by mirroring at box faces, matching the product
// derivative grad(psi C) in the Dirichlet term so that C = B_D cancels exactly.
struct PsiGradient {
  VectorField grad;
  Eigen::ArrayXd mag;
};
PsiGradient mirrored_gradient(const ScalarField& psi) {
  PsiGradient g{gradient(psi, BoxClosure{}), {}};
  g.mag = g.grad.norm();
  return g;
}

ScalarField flux_divergence(const ScalarField& coeff, const ScalarField& f,
                            const BoxClosure& box) {
  return f.grid().axisymmetric() ? conservative_div_rz(coeff, f, box)
                                 : conservative_div(coeff, f, box);
}

}  // namespace

ScalarField diffusion_rate(const ScalarField& C, const DiffusionProblem& prob) {
  prob.validate();
  const Grid& g = C.grid();
  require_same_grid(g, prob.dp.grid(), "diffusion_rate");
  const auto& psi = prob.dp.psi.values();
  const auto& D = prob.D.values();
  const Eigen::ArrayXd inv_g = 1.0 / guarded(psi, prob.upsilon, prob.guard);

  const ScalarField psiD(g, Eigen::ArrayXd(psi * D));
  const Eigen::ArrayXd bulk = flux_divergence(psiD, C, prob.box).values() * inv_g;

  const PsiGradient pg = mirrored_gradient(prob.dp.psi);
  const Eigen::ArrayXd& mag = pg.mag;
  const Eigen::ArrayXd neumann = mag * D * prob.bc.neumann_value.values() *
                                 prob.bc.neumann_weight.values() * inv_g;

  const ScalarField psiC(g, Eigen::ArrayXd(psi * C.values()));
  Eigen::ArrayXd dot = Eigen::ArrayXd::Zero(g.size());
  for (int a = 0; a < g.ndim(); ++a)
    dot += pg.grad(a) * partial(psiC, a, BoxClosure{}).values();
  const Eigen::ArrayXd dirichlet = D * inv_g * inv_g *
                                   (dot - prob.bc.dirichlet_value.values() * mag * mag) *
                                   prob.bc.dirichlet_weight.values();

  Eigen::ArrayXd rate = bulk + neumann - dirichlet + prob.S.values() - prob.sink_rate * C.values();
  for (Index p = 0; p < g.size(); ++p) {
    const Index3 ijk = g.unravel(p);
    for (int a = 0; a < g.ndim(); ++a) {
      if ((ijk[a] == 0 && prob.box.pinned(a, Side::lo)) ||
          (ijk[a] == g.dim(a) - 1 && prob.box.pinned(a, Side::hi)))
        rate[p] = 0.0;
    }
  }
  return ScalarField(g, rate);
}

ScalarField step_diffusion_mixed(const ScalarField& C, const DiffusionProblem& prob) {
  require(prob.dt > 0.0, "step_diffusion_mixed: dt must be set");
  const double bound = stability_bound(assemble_diffusion(prob));
  if (prob.dt > bound) {
    std::ostringstream msg;
    msg << "step_diffusion_mixed: dt = " << prob.dt << " exceeds the stability bound; use dt <= "
        << 0.25 * bound;
    throw InvalidArgument(msg.str());
  }
  ScalarField out(C.grid(), Eigen::ArrayXd(C.values() + prob.dt * diffusion_rate(C, prob).values()));
  if (!out.all_finite()) throw SolverError("step_diffusion_mixed: non-finite concentration");
  return out;
}

ScalarField step_plain_diffusion(const ScalarField& C, const ScalarField& D,
                                 const ScalarField& S, double sink_rate, double dt,
                                 const BoxClosure& box) {
  require(dt > 0.0, "step_plain_diffusion: dt must be positive");
  const Eigen::ArrayXd rate =
      flux_divergence(D, C, box).values() + S.values() - sink_rate * C.values();
  return ScalarField(C.grid(), Eigen::ArrayXd(C.values() + dt * rate));
}

StencilOperator<double> assemble_diffusion(const DiffusionProblem& prob) {
  prob.validate();
  const Grid& g = prob.dp.grid();
  StencilOperator<double> op(g);
  const auto& psi = prob.dp.psi.values();
  const auto& D = prob.D.values();
  const PsiGradient pg = mirrored_gradient(prob.dp.psi);
  const Eigen::ArrayXd& mag = pg.mag;
  const Eigen::ArrayXd inv_g = 1.0 / guarded(psi, prob.upsilon, prob.guard);
  const Eigen::ArrayXd psiD = psi * D;

  for (int a = 0; a < g.ndim(); ++a) {
    if (a == 0 && g.axisymmetric())
      add_radial_flux_div(op, inv_g, psiD, prob.box);
    else
      add_flux_div(op, inv_g, psiD, a, prob.box);
  }
  const Eigen::ArrayXd wd = D * inv_g * inv_g * prob.bc.dirichlet_weight.values();
  for (int a = 0; a < g.ndim(); ++a)
    add_central_first(op, Eigen::ArrayXd(-wd * pg.grad(a)), psi, a, BoxClosure{});
  op.rhs() += mag * D * prob.bc.neumann_value.values() * prob.bc.neumann_weight.values() * inv_g;
  op.rhs() += wd * prob.bc.dirichlet_value.values() * mag * mag;
  op.rhs() += prob.S.values();
  if (prob.sink_rate != 0.0)
    for (Index p = 0; p < g.size(); ++p) op.add_centre(p, -prob.sink_rate);
  op.pin_faces(prob.box);
  return op;
}

SteadyCoefficients analytic_1d_coefficients(const OneDimBenchmark& bench) {
  require(bench.sink_rate > 0.0, "1D benchmark: sink rate must be positive");
  const double m = std::sqrt(bench.sink_rate);
  // C(5) = 0.4 fixes a; C'(25) = m (a sinh 20m + b cosh 20m) = -0.1 fixes b.
  const double a = 0.4 - bench.source / bench.sink_rate;
  const double b = -0.1 / (m * std::cosh(20.0 * m)) - a * std::tanh(20.0 * m);
  return {a, b};
}

namespace {

// Cancellation-free form C = s/k + A e^{-m(x-5)} + B e^{m(x-25)}.
struct ExpForm {
  double m, A, B, base;
};
ExpForm exp_form(const OneDimBenchmark& bench) {
  require(bench.sink_rate > 0.0, "1D benchmark: sink rate must be positive");
  const double m = std::sqrt(bench.sink_rate);
  const double base = bench.source / bench.sink_rate;
  const double q = std::exp(-20.0 * m);
  // A + B q = 0.4 - s/k and m (B - A q) = -0.1.
  const double B = (-0.1 / m + (0.4 - base) * q) / (1.0 + q * q);
  return {m, 0.4 - base - B * q, B, base};
}

}  // namespace

double analytic_1d_steady(double x, const OneDimBenchmark& bench) {
  require(x >= 5.0 - 1e-12 && x <= 25.0 + 1e-12, "analytic_1d_steady: x outside [5, 25]");
  const ExpForm f = exp_form(bench);
  return f.base + f.A * std::exp(-f.m * (x - 5.0)) + f.B * std::exp(f.m * (x - 25.0));
}

double analytic_1d_slope(double x, const OneDimBenchmark& bench) {
  require(x >= 5.0 - 1e-12 && x <= 25.0 + 1e-12, "analytic_1d_slope: x outside [5, 25]");
  const ExpForm f = exp_form(bench);
  return f.m * (f.B * std::exp(f.m * (x - 25.0)) - f.A * std::exp(-f.m * (x - 5.0)));
}

double relative_error(const ScalarField& numeric, const ScalarField& reference,
                      const std::vector<unsigned char>& region, const Eigen::ArrayXd& weights) {
  require_same_grid(numeric.grid(), reference.grid(), "relative_error");
  require(static_cast<Index>(region.size()) == numeric.size(), "relative_error: region size");
  require(weights.size() == 0 || weights.size() == numeric.size(), "relative_error: weight size");
  double wsum = 0.0, sq = 0.0, ref = 0.0;
  for (Index p = 0; p < numeric.size(); ++p) {
    if (!region[p]) continue;
    const double w = weights.size() ? weights[p] : 1.0;
    const double d = numeric[p] - reference[p];
    wsum += w;
    sq += w * d * d;
    ref += w * reference[p];
  }
  require(wsum > 0.0, "relative_error: empty region");
  require(ref != 0.0, "relative_error: reference average is zero");
  return std::sqrt(sq / wsum) / std::abs(ref / wsum);
}

namespace {

// Linear interpolation of v at the psi = 0.5 crossing between nodes i-1 and i
// (rising) or i and i+1 (falling), searched from `start` in direction `dir`.
struct Crossing {
  int lo;
  double frac;
};
Crossing find_crossing(const Eigen::ArrayXd& psi, int start, int dir) {
  for (int i = start; i >= 1 && i < psi.size(); i += dir) {
    const double a = psi[i - 1], b = psi[i];
    if ((a - 0.5) * (b - 0.5) <= 0.0 && a != b) return {i - 1, (0.5 - a) / (b - a)};
  }
  throw SolverError("1D validation: no psi = 0.5 crossing");
}
double at(const Eigen::ArrayXd& v, const Crossing& c) {
  return v[c.lo] + c.frac * (v[c.lo + 1] - v[c.lo]);
}

}  // namespace

OneDimResult run_1d_validation(const OneDimCase& c, const OneDimOptions& options) {
  require(c.dx > 0.0 && c.zeta > 0.0, "1D validation: dx and zeta must be positive");
  const int n = static_cast<int>(std::lround(30.0 / c.dx)) + 1;
  const Grid g = Grid::line(n, c.dx);
  DiffusionProblem prob;
  prob.dp = tanh_from_distance(slab_distance(g, 0, 5.0, 25.0), c.zeta);
  prob.D = ScalarField(g, 1.0);
  prob.S = ScalarField(g, options.bench.source);
  prob.sink_rate = options.bench.sink_rate;
  prob.bc = BoundarySpec::regional(
      ScalarField::from_function(g, [](const auto& x) { return x[0] - 15.0; }), -0.1, 0.4);
  prob.upsilon = c.upsilon;
  prob.guard = options.guard;

  OneDimResult out;
  out.config = c;
  std::vector<unsigned char> region(n, 0), monitor(n, 0);
  ScalarField reference(g, 0.0);
  for (int i = 0; i < n; ++i) {
    const double x = g.coordinate(0, i);
    if (x >= 5.0 - 1e-9 && x <= 25.0 + 1e-9) {
      region[i] = 1;
      reference[i] = analytic_1d_steady(std::clamp(x, 5.0, 25.0), options.bench);
    }
    // Equilibrium is judged where the solution is physically meaningful:
    // the domain and the inner half of the diffuse band.
    monitor[i] = prob.dp.psi[i] >= 0.5 ? 1 : 0;
  }

  Eigen::ArrayXd C = Eigen::ArrayXd::Zero(n);
  try {
    DiffusionStepper stepper(prob, options.safety);
    stepper.set_monitor(monitor);
    out.dt = stepper.dt();
    double t = 0.0, next_sample = 0.0;
    while (t < options.t_max) {
      const double rate = stepper.step(C);
      t += stepper.dt();
      ++out.steps;
      if (t >= next_sample) {
        out.history.emplace_back(t, relative_error(ScalarField(g, C), reference, region));
        next_sample += options.sample_interval;
      }
      if (rate < options.equilibrium_rate) {
        out.reached_equilibrium = true;
        break;
      }
      if (options.max_steps > 0 && out.steps >= options.max_steps) {
        out.step_capped = true;
        break;
      }
    }
    out.t_end = t;
  } catch (const SolverError&) {
    out.diverged = true;
  }
  out.C = ScalarField(g, C);
  if (out.diverged || !out.C.all_finite()) {
    out.diverged = true;
    out.e = std::numeric_limits<double>::infinity();
    return out;
  }
  out.e = relative_error(out.C, reference, region);
  out.history.emplace_back(out.t_end, out.e);

  const auto& psi = prob.dp.psi.values();
  const Crossing left = find_crossing(psi, 1, 1);
  const Crossing right = find_crossing(psi, n - 1, -1);
  Eigen::ArrayXd slope = partial(out.C, 0).values();
  out.dirichlet_residual = std::abs(at(C, left) - 0.4) / 0.4;
  out.neumann_residual = std::abs(at(slope, right) + 0.1) / 0.1;
  return out;
}

}  // namespace sbm
