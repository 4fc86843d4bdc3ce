#include "sbm/surface_bulk.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>

#include "sbm/stencil.hpp"

namespace sbm {

void SurfaceBulkProblem::validate() const {
  require(D_b >= 0.0 && D_s >= 0.0 && kappa >= 0.0 && L >= 0.0,
          "surface-bulk problem: D_b, D_s, kappa and L must be >= 0");
  require(std::isfinite(D_b) && std::isfinite(D_s) && std::isfinite(kappa) &&
              std::isfinite(L) && std::isfinite(omega),
          "surface-bulk problem: parameters must be finite");
  require(upsilon >= 1e-16 && upsilon <= 1e-2,
          "surface-bulk problem: upsilon must lie in [1e-16, 1e-2]");
  require(dp.psi.size() > 0, "surface-bulk problem: domain parameter is empty");
}

namespace {

ScalarField flux_divergence(const ScalarField& coeff, const ScalarField& f,
                            const BoxClosure& box) {
  return f.grid().axisymmetric() ? conservative_div_rz(coeff, f, box)
                                 : conservative_div(coeff, f, box);
}

void zero_pinned_faces(Eigen::ArrayXd& v, const Grid& g, const BoxClosure& box) {
  for (Index p = 0; p < g.size(); ++p) {
    const Index3 ijk = g.unravel(p);
    for (int a = 0; a < g.ndim(); ++a)
      if ((ijk[a] == 0 && box.pinned(a, Side::lo)) ||
          (ijk[a] == g.dim(a) - 1 && box.pinned(a, Side::hi)))
        v[p] = 0.0;
  }
}

// Adds w[p] (D_b div(psi grad) - |grad psi| kappa + |grad psi| D_s lap_s) to
// row p.
template <typename Scalar>
void add_coupled_terms(StencilOperator<Scalar>& op, const Eigen::ArrayXd& w,
                       const SurfaceBulkProblem& prob) {
  const Grid& g = op.grid();
  const auto& psi = prob.dp.psi.values();
  const auto& mag = prob.dp.grad_mag.values();
  const Eigen::ArrayXd wb = w * prob.D_b;
  for (int a = 0; a < g.ndim(); ++a) {
    if (a == 0 && g.axisymmetric())
      add_radial_flux_div(op, wb, psi, prob.box);
    else
      add_flux_div(op, wb, psi, a, prob.box);
  }
  if (prob.kappa != 0.0)
    for (Index p = 0; p < g.size(); ++p)
      if (mag[p] != 0.0) op.add_centre(p, Scalar(-w[p] * mag[p] * prob.kappa));
  if (prob.D_s != 0.0)
    add_surface_laplacian(op, Eigen::ArrayXd(w * mag * prob.D_s), prob.dp, prob.box);
}

Eigen::ArrayXd accumulation(const SurfaceBulkProblem& prob) {
  return guarded(prob.dp.psi.values(), prob.upsilon, prob.guard) +
         prob.L * prob.dp.grad_mag.values();
}

}  // namespace

ScalarField surface_laplacian(const ScalarField& C, const DomainParameter& dp,
                              const BoxClosure& box) {
  const Grid& g = C.grid();
  require_same_grid(g, dp.grid(), "surface_laplacian");
  const int d = g.ndim();
  const SymTensorField& m = dp.projector;
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(g.size());
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Eigen::ArrayXd& mij = m(i, j);
      if ((mij == 0.0).all()) continue;
      for (int k = 0; k < d; ++k) {
        const ScalarField mik(g, m(i, k));
        ScalarField term;
        if (j != k)
          term = cross_derivative(mik, C, j, k, box);
        else if (j == 0 && g.axisymmetric())
          term = radial_flux_div(mik, C, box);
        else
          term = axis_flux_div(mik, C, j, box);
        out += mij * term.values();
      }
    }
  }
  return ScalarField(g, out);
}

ScalarField coupled_rate(const ScalarField& C, const SurfaceBulkProblem& prob) {
  prob.validate();
  const Grid& g = C.grid();
  require_same_grid(g, prob.dp.grid(), "coupled_rate");
  const auto& mag = prob.dp.grad_mag.values();
  Eigen::ArrayXd rhs = prob.D_b * flux_divergence(prob.dp.psi, C, prob.box).values() -
                       mag * prob.kappa * C.values();
  if (prob.D_s != 0.0)
    rhs += mag * prob.D_s * surface_laplacian(C, prob.dp, prob.box).values();
  Eigen::ArrayXd rate = rhs / accumulation(prob);
  zero_pinned_faces(rate, g, prob.box);
  return ScalarField(g, rate);
}

ScalarField step_coupled(const ScalarField& C, const SurfaceBulkProblem& prob, double dt) {
  require(dt > 0.0, "step_coupled: dt must be positive");
  const double bound = stability_bound(assemble_coupled(prob));
  if (dt > bound) {
    std::ostringstream msg;
    msg << "step_coupled: dt = " << dt << " exceeds the stability bound; use dt <= "
        << 0.25 * bound;
    throw InvalidArgument(msg.str());
  }
  ScalarField out(C.grid(), Eigen::ArrayXd(C.values() + dt * coupled_rate(C, prob).values()));
  if (!out.all_finite()) throw SolverError("step_coupled: non-finite concentration");
  return out;
}

StencilOperator<double> assemble_coupled(const SurfaceBulkProblem& prob) {
  prob.validate();
  StencilOperator<double> op(prob.dp.grid());
  add_coupled_terms(op, Eigen::ArrayXd(1.0 / accumulation(prob)), prob);
  op.pin_faces(prob.box);
  return op;
}

StencilOperator<std::complex<double>> assemble_helmholtz(const SurfaceBulkProblem& prob) {
  prob.validate();
  const Grid& g = prob.dp.grid();
  StencilOperator<std::complex<double>> op(g);
  add_coupled_terms(op, Eigen::ArrayXd::Ones(g.size()), prob);
  const auto& psi = prob.dp.psi.values();
  // The centre slot always exists so that every row has a diagonal.
  for (Index p = 0; p < g.size(); ++p)
    op.add_centre(p, std::complex<double>(0.0, -prob.omega * psi[p]));
  op.pin_faces(prob.box);
  return op;
}

HelmholtzResult solve_helmholtz_adlr(const SurfaceBulkProblem& prob, const AdlrOptions& options,
                                     const ComplexScalarField* initial) {
  const StencilOperator<std::complex<double>> op = assemble_helmholtz(prob);
  const Grid& g = op.grid();
  Eigen::ArrayXcd x0 = Eigen::ArrayXcd::Zero(g.size());
  if (initial) {
    require_same_grid(g, initial->grid(), "solve_helmholtz_adlr: initial guess");
    x0 = initial->values();
  }
  AdlrResult<std::complex<double>> r = solve_adlr(op, std::move(x0), options);
  return {ComplexScalarField(g, std::move(r.x)), r.residual, r.sweeps, r.converged,
          std::move(r.history)};
}

const char* to_string(CylinderResolution r) {
  switch (r) {
    case CylinderResolution::thin:
      return "thin";
    case CylinderResolution::medium:
      return "medium";
    case CylinderResolution::thick:
      return "thick";
  }
  return "thin";
}

CylinderResolution cylinder_resolution_from_string(const std::string& name) {
  if (name == "thin") return CylinderResolution::thin;
  if (name == "medium") return CylinderResolution::medium;
  if (name == "thick") return CylinderResolution::thick;
  throw InvalidArgument("unknown cylinder resolution '" + name +
                        "' (expected thin, medium or thick)");
}

CylinderSetup CylinderSetup::make(CylinderResolution res, double length) {
  require(length > 0.0, "cylinder: length must be positive");
  struct Row {
    double dr;
    int cylinder_nodes, box_nodes;
  };
  const Row row = res == CylinderResolution::thin     ? Row{1.76e-2, 57, 75}
                  : res == CylinderResolution::medium ? Row{3.49e-2, 29, 38}
                                                      : Row{6.86e-2, 15, 20};
  const double dz = 4e-2;
  const int nz = static_cast<int>(std::lround(length / dz)) + 1;
  CylinderSetup s;
  s.grid = Grid::axisymmetric(row.box_nodes, nz, row.dr, dz, 0.0);
  s.surface_index = row.cylinder_nodes - 1;
  s.R = 1.0;
  s.zeta = 1.0182 * row.dr;
  s.length = s.grid.coordinate(1, nz - 1);
  return s;
}

BoxClosure CylinderSetup::box() const {
  BoxClosure b;
  b.set(1, Side::lo, FaceClosure::fixed_value(1.0));
  b.set(1, Side::hi, FaceClosure::fixed_value(0.0));
  return b;
}

DomainParameter CylinderSetup::domain() const {
  const double r_s = R;
  const ScalarField d =
      ScalarField::from_function(grid, [r_s](const auto& x) { return r_s - x[0]; });
  return tanh_from_distance(d, zeta);
}

namespace {

ScalarField sharp_direct(const CylinderSetup& s, double D_b, double D_s, double kappa) {
  const Grid& g = s.grid;
  const int ns = s.surface_index + 1, nz = g.dim(1);
  const double dr = g.spacing(0), dz = g.spacing(1);
  require(ns >= 3, "sharp cylinder: needs at least 3 radial nodes");
  auto id = [nz](int i, int j) { return i * nz + j; };
  std::vector<Eigen::Triplet<double>> t;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ns * nz);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < nz; ++j) {
      const int row = id(i, j);
      if (j == 0 || j == nz - 1) {
        t.emplace_back(row, row, 1.0);
        b[row] = j == 0 ? 1.0 : 0.0;
        continue;
      }
      if (i < s.surface_index) {
        const double r = g.coordinate(0, i);
        const double rp = r + 0.5 * dr, rm = std::max(0.0, r - 0.5 * dr);
        const double scale = 2.0 * D_b / ((rp * rp - rm * rm) * dr);
        t.emplace_back(row, id(i + 1, j), scale * rp);
        double centre = -scale * rp;
        if (i > 0) {
          t.emplace_back(row, id(i - 1, j), scale * rm);
          centre -= scale * rm;
        }
        const double az = D_b / (dz * dz);
        t.emplace_back(row, id(i, j + 1), az);
        t.emplace_back(row, id(i, j - 1), az);
        t.emplace_back(row, row, centre - 2.0 * az);
      } else {
        const double as = D_s / (dz * dz), ar = D_b / (2.0 * dr);
        t.emplace_back(row, id(i, j + 1), as);
        t.emplace_back(row, id(i, j - 1), as);
        t.emplace_back(row, row, -2.0 * as - kappa - 3.0 * ar);
        t.emplace_back(row, id(i - 1, j), 4.0 * ar);
        t.emplace_back(row, id(i - 2, j), -ar);
      }
    }
  }
  Eigen::SparseMatrix<double> A(ns * nz, ns * nz);
  A.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw SolverError("sharp cylinder: factorization failed");
  const Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw SolverError("sharp cylinder: solve failed");
  ScalarField out(g, 0.0);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) out.at(i, j) = x[id(i, j)];
  return out;
}

// The surface row solved for C_s given the bulk, then an explicit bulk step
// with C_s as its outer value, repeated until the bulk is stationary.
ScalarField sharp_alternating(const CylinderSetup& s, double D_b, double D_s, double kappa,
                              const SharpOptions& options) {
  const Grid& g = s.grid;
  const int is = s.surface_index, nz = g.dim(1);
  const double dr = g.spacing(0), dz = g.spacing(1);
  StencilOperator<double> op(g);
  Eigen::ArrayXd bulk = Eigen::ArrayXd::Zero(g.size());
  for (Index p = 0; p < g.size(); ++p)
    if (g.unravel(p)[0] < is) bulk[p] = D_b;
  const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(g.size());
  add_radial_flux_div(op, bulk, ones, BoxClosure{});
  add_flux_div(op, bulk, ones, 1, BoxClosure{});
  for (Index p = 0; p < g.size(); ++p) {
    const Index3 ijk = g.unravel(p);
    if (ijk[0] >= is || ijk[1] == 0 || ijk[1] == nz - 1)
      op.pin(p, ijk[0] <= is && ijk[1] == 0 ? 1.0 : 0.0);
  }
  ExplicitStepper stepper(op, 0.0, 0.9);
  std::vector<unsigned char> monitor(g.size(), 0);
  for (Index p = 0; p < g.size(); ++p) monitor[p] = bulk[p] != 0.0;
  stepper.set_monitor(monitor);

  Eigen::ArrayXd C = Eigen::ArrayXd::Zero(g.size());
  for (int i = 0; i <= is; ++i) C[g.ravel({i, 0, 0})] = 1.0;
  std::vector<double> lo(nz), di(nz), up(nz), rhs(nz), work(nz);
  const double as = D_s / (dz * dz), ar = D_b / (2.0 * dr);
  for (long step = 0; step < options.max_steps; ++step) {
    for (int j = 0; j < nz; ++j) {
      if (j == 0 || j == nz - 1) {
        lo[j] = up[j] = 0.0;
        di[j] = 1.0;
        rhs[j] = j == 0 ? 1.0 : 0.0;
        continue;
      }
      lo[j] = up[j] = as;
      di[j] = -2.0 * as - kappa - 3.0 * ar;
      rhs[j] = -ar * (4.0 * C[g.ravel({is - 1, j, 0})] - C[g.ravel({is - 2, j, 0})]);
    }
    solve_tridiagonal(lo.data(), di.data(), up.data(), rhs.data(), work.data(), nz);
    for (int j = 0; j < nz; ++j) C[g.ravel({is, j, 0})] = rhs[j];
    if (stepper.step(C) < options.tol) {
      ScalarField out(g, C);
      for (Index p = 0; p < g.size(); ++p)
        if (g.unravel(p)[0] > is) out[p] = 0.0;
      return out;
    }
  }
  throw SolverError("sharp cylinder: alternating update did not converge");
}

}  // namespace

ScalarField solve_sharp_cylinder(const CylinderSetup& setup, double D_b, double D_s,
                                 double kappa, const SharpOptions& options) {
  require(setup.grid.axisymmetric(), "sharp cylinder: needs an axisymmetric grid");
  require(D_b > 0.0 && D_s >= 0.0 && kappa >= 0.0, "sharp cylinder: bad coefficients");
  require(setup.surface_index >= 2 && setup.surface_index < setup.grid.dim(0),
          "sharp cylinder: surface index out of range");
  return options.method == SharpMethod::direct
             ? sharp_direct(setup, D_b, D_s, kappa)
             : sharp_alternating(setup, D_b, D_s, kappa, options);
}

CylinderErrors cylinder_error_report(const ScalarField& sbm, const ScalarField& sharp,
                                     const DomainParameter& dp) {
  const Grid& g = sbm.grid();
  require_same_grid(g, sharp.grid(), "cylinder_error_report");
  require_same_grid(g, dp.grid(), "cylinder_error_report: domain parameter");
  require(g.ndim() == 2, "cylinder_error_report: needs a 2D (r, z) grid");
  const auto& psi = dp.psi.values();
  const int nr = g.dim(0), nz = g.dim(1);

  CylinderErrors out;
  int planes = 0;
  for (int j = 0; j < nz; ++j) {
    ++planes;
    double peak = -1.0;
    for (int i = 0; i < nr; ++i)
      if (psi[g.ravel({i, j, 0})] >= 0.5) peak = std::max(peak, sharp.at(i, j));
    if (peak >= 0.0 && peak <= 0.01) break;
  }
  out.active_planes = planes;

  double vol = 0.0, ref = 0.0, sq = 0.0, vol_b = 0.0, sq_b = 0.0, vol_s = 0.0, sq_s = 0.0;
  for (int j = 0; j < planes; ++j) {
    for (int i = 0; i < nr; ++i) {
      const Index p = g.ravel({i, j, 0});
      if (psi[p] < 0.5) continue;
      const bool surface = i == nr - 1 || psi[p + g.stride(0)] < 0.5;
      const double w = g.node_volume(p);
      const double d = sbm[p] - sharp[p];
      vol += w;
      ref += w * sharp[p];
      sq += w * d * d;
      (surface ? vol_s : vol_b) += w;
      (surface ? sq_s : sq_b) += w * d * d;
    }
  }
  require(vol > 0.0, "cylinder_error_report: empty active region");
  require(ref != 0.0, "cylinder_error_report: zero mean concentration");
  const double mean = std::abs(ref / vol);
  out.e = std::sqrt(sq / vol) / mean;
  out.e_b = vol_b > 0.0 ? std::sqrt(sq_b / vol_b) / mean : 0.0;
  out.e_s = vol_s > 0.0 ? std::sqrt(sq_s / vol_s) / mean : 0.0;
  return out;
}

}  // namespace sbm
