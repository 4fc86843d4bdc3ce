#include "sbm/elasticity.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "sbm/adlr.hpp"
#include "sbm/stencil.hpp"
#include "sbm/stencil_operator.hpp"

namespace sbm {

void IsotropicMaterial::validate() const {
  require(std::isfinite(lambda11) && std::isfinite(lambda12) && std::isfinite(lambda44) &&
              std::isfinite(rho),
          "material: non-finite constant");
  require(lambda44 > 0.0, "material: lambda44 must be positive");
  require(lambda11 > std::abs(lambda12), "material: need lambda11 > |lambda12|");
  require(std::abs(lambda11 - lambda12 - 2.0 * lambda44) <= 1e-9 * std::abs(lambda11),
          "material: isotropy needs lambda11 = lambda12 + 2 lambda44");
}

IsotropicMaterial lame_from_engineering(double E, double nu, double rho) {
  require(E > 0.0 && std::isfinite(E), "lame: Young's modulus must be positive");
  require(nu > 0.0 && nu < 0.5, "lame: Poisson ratio must lie in (0, 0.5)");
  IsotropicMaterial m;
  m.lambda12 = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  m.lambda44 = m.lambda12 * (1.0 - 2.0 * nu) / (2.0 * nu);
  m.lambda11 = m.lambda12 + 2.0 * m.lambda44;
  m.rho = rho;
  return m;
}

Eigen::ArrayXd ElasticProblem::psi2() const {
  if (dp2.psi.size() == 0) return Eigen::ArrayXd::Zero(grid().size());
  return dp2.psi.values();
}

void ElasticProblem::validate() const {
  require(dp1.psi.size() > 0, "elastic problem: empty domain parameter");
  const Grid& g = grid();
  require(g.ndim() >= 2, "elastic problem: needs a 2D or 3D grid");
  require(!g.axisymmetric(), "elastic problem: cartesian grids only");
  if (dp2.psi.size() != 0) require_same_grid(g, dp2.grid(), "elastic problem");
  const Eigen::ArrayXd total = dp1.psi.values() + psi2();
  require(dp1.psi.values().minCoeff() >= 0.0 && psi2().minCoeff() >= 0.0 &&
              total.maxCoeff() <= 1.0 + 1e-12,
          "elastic problem: need psi1, psi2 >= 0 and psi1 + psi2 <= 1");
  mat1.validate();
  mat2.validate();
  require(upsilon >= 1e-16 && upsilon <= 1e-2, "elastic problem: upsilon outside [1e-16, 1e-2]");
  for (int c = 0; c < g.ndim(); ++c)
    require(box_bcs[c].pinned(c, Side::lo) || box_bcs[c].pinned(c, Side::hi),
            "elastic problem: displacement " + std::to_string(c) +
                " needs a fixed-value face normal to its axis");
}

std::array<BoxClosure, 3> rigid_frictionless_box() {
  std::array<BoxClosure, 3> out;
  for (int c = 0; c < 3; ++c) out[c].set_axis(c, FaceClosure::fixed_value(0.0));
  return out;
}

namespace {

// Phase-weighted constants a1 psi_t + (a2 - a1) psi2, where psi_t is the
// total solid weight. Equal constants give a1 psi_t exactly.
struct Mixture {
  Eigen::ArrayXd total, l11, l12, l44, body;
};

Mixture mixture(const ElasticProblem& prob, bool regularise) {
  Mixture m;
  const Eigen::ArrayXd psi2 = prob.psi2();
  m.total = prob.dp1.psi.values() + psi2;
  if (regularise) m.total += prob.upsilon * (1.0 - m.total);
  const IsotropicMaterial &a = prob.mat1, &b = prob.mat2;
  auto mix = [&](double v1, double v2) -> Eigen::ArrayXd {
    return v1 * m.total + (v2 - v1) * psi2;
  };
  m.l11 = mix(a.lambda11, b.lambda11);
  m.l12 = mix(a.lambda12, b.lambda12);
  m.l44 = mix(a.lambda44, b.lambda44);
  m.body = mix(a.rho * a.dilatation_modulus(), b.rho * b.dilatation_modulus());
  return m;
}

// Row c of div(sigma): the diagonal block acting on u_c (with the body force
// and closure constants) and the couplings to the other components.
struct ElasticOperator {
  int ndim = 0;
  std::vector<StencilOperator<double>> diag;
  std::vector<std::vector<std::unique_ptr<StencilOperator<double>>>> couple;
  Eigen::ArrayXd body_norm2;  // per component squared norm of the body force
};

ElasticOperator assemble(const ElasticProblem& prob) {
  prob.validate();
  const Grid& g = prob.grid();
  const int d = g.ndim();
  const Mixture m = mixture(prob, true);
  const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(g.size());
  const ScalarField body(g, m.body);
  ElasticOperator E;
  E.ndim = d;
  E.body_norm2 = Eigen::ArrayXd::Zero(d);
  E.couple.resize(d);
  for (int c = 0; c < d; ++c) {
    const BoxClosure& bc = prob.box_bcs[c];
    StencilOperator<double> A(g);
    for (int j = 0; j < d; ++j) add_flux_div(A, ones, j == c ? m.l11 : m.l44, j, bc);
    const Eigen::ArrayXd force = -partial(body, c, BoxClosure()).values();
    A.rhs() += force;
    A.pin_faces(bc);
    for (Index p = 0; p < g.size(); ++p)
      if (!A.pinned(p)) E.body_norm2[c] += force[p] * force[p];
    E.diag.push_back(std::move(A));
    E.couple[c].resize(d);
    for (int k = 0; k < d; ++k) {
      if (k == c) continue;
      auto X = std::make_unique<StencilOperator<double>>(g);
      add_cross(*X, ones, m.l12, c, k, prob.box_bcs[k]);
      add_cross(*X, ones, m.l44, k, c, prob.box_bcs[k]);
      X->pin_faces(bc);
      E.couple[c][k] = std::move(X);
    }
  }
  return E;
}

Eigen::ArrayXd coupling(const ElasticOperator& E, int c, const VectorField& u) {
  Eigen::ArrayXd y = Eigen::ArrayXd::Zero(u.grid().size());
  for (int k = 0; k < E.ndim; ++k)
    if (E.couple[c][k]) y += E.couple[c][k]->apply(u(k));
  return y;
}

VectorField residual_of(const ElasticOperator& E, const VectorField& u) {
  VectorField r(u.grid());
  // Coupling rows are zeroed where the component is pinned.
  for (int c = 0; c < E.ndim; ++c) r(c) = E.diag[c].residual(u(c)) + coupling(E, c, u);
  return r;
}

double relative_residual(const ElasticOperator& E, const VectorField& u) {
  const VectorField r = residual_of(E, u);
  double num = 0.0, den = E.body_norm2.sum();
  for (int c = 0; c < E.ndim; ++c) num += r(c).square().sum();
  if (den == 0.0) {
    for (int c = 0; c < E.ndim; ++c)
      den += (E.diag[c].coeff(StencilOperator<double>::kCentre) * u(c)).square().sum();
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

VectorField elastic_residual(const ElasticProblem& prob, const VectorField& u) {
  const ElasticOperator E = assemble(prob);
  require(u.grid() == prob.grid() && u.ncomp() == E.ndim, "elastic residual: bad displacement");
  return residual_of(E, u);
}

ElasticResult solve_displacements_adlr(const ElasticProblem& prob,
                                       const ElasticOptions& options) {
  require(options.tol > 0.0 && options.change_tol > 0.0 && options.max_sweeps > 0,
          "elastic solve: bad options");
  ElasticOperator E = assemble(prob);
  const Grid& g = prob.grid();
  const int d = E.ndim;
  const Index n = g.size();

  double box = 0.0;
  for (int a = 0; a < d; ++a) box = std::max(box, (g.dim(a) - 1) * g.spacing(a));
  const Eigen::ArrayXd solid = prob.dp1.psi.values() + prob.psi2();

  std::vector<Eigen::ArrayXd> base(d);
  std::vector<std::unique_ptr<LineRelaxation<double>>> relax;
  for (int c = 0; c < d; ++c) {
    base[c] = E.diag[c].rhs();
    relax.push_back(std::make_unique<LineRelaxation<double>>(E.diag[c]));
  }

  ElasticResult out;
  out.u = VectorField(g);
  for (int c = 0; c < d; ++c) relax[c]->hold_fixed(out.u(c));
  out.residual = relative_residual(E, out.u);
  if (out.residual <= options.tol) {
    out.converged = true;
    return out;
  }

  VectorField previous(g);
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    previous = out.u;
    for (int c = 0; c < d; ++c) E.diag[c].rhs() = base[c] + coupling(E, c, previous);
    for (int c = 0; c < d; ++c) relax[c]->sweep(out.u(c));
    for (int c = 0; c < d; ++c) E.diag[c].rhs() = base[c];

    double change = 0.0;
    for (int c = 0; c < d; ++c)
      for (Index p = 0; p < n; ++p)
        if (solid[p] >= 0.5) change = std::max(change, std::abs(out.u(c)[p] - previous(c)[p]));
    out.change = change / box;
    out.residual = relative_residual(E, out.u);
    out.history.push_back(out.residual);
    out.sweeps = sweep;
    if (out.residual <= options.tol && out.change <= options.change_tol) {
      out.converged = true;
      return out;
    }
  }
  throw SolverError("elastic solve: not converged after " + std::to_string(out.sweeps) +
                    " sweeps (residual " + std::to_string(out.residual) + ")");
}

namespace {

// eps_kl from central differences with each component's own closure.
SymTensorField strain(const VectorField& u, const ElasticProblem& prob) {
  const Grid& g = prob.grid();
  const int d = g.ndim();
  require(u.grid() == g && u.ncomp() == d, "stress: displacement on the wrong grid");
  std::vector<VectorField> grad;
  for (int k = 0; k < d; ++k) grad.push_back(gradient(u.component(k), prob.box_bcs[k]));
  SymTensorField e(g);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) e(i, j) = 0.5 * (grad[i](j) + grad[j](i));
  return e;
}

SymTensorField hooke(const SymTensorField& e, const Eigen::ArrayXd& l11,
                     const Eigen::ArrayXd& l12, const Eigen::ArrayXd& l44,
                     const Eigen::ArrayXd& body) {
  const int d = e.dim();
  SymTensorField s(e.grid());
  const Eigen::ArrayXd tr = e.trace();
  for (int i = 0; i < d; ++i) {
    s(i, i) = l11 * e(i, i) + l12 * (tr - e(i, i)) - body;
    for (int j = i + 1; j < d; ++j) s(i, j) = 2.0 * l44 * e(i, j);
  }
  return s;
}

}  // namespace

SymTensorField compute_stress(const VectorField& u, const ElasticProblem& prob) {
  prob.validate();
  const Mixture m = mixture(prob, false);
  return hooke(strain(u, prob), m.l11, m.l12, m.l44, m.body);
}

ScalarField mean_stress(const SymTensorField& sigma) {
  require(sigma.dim() == 3, "mean stress: needs a 3D tensor field");
  return ScalarField(sigma.grid(), sigma.trace() / 3.0);
}

VectorField surface_traction(const VectorField& u, const ElasticProblem& prob) {
  prob.validate();
  const Grid& g = prob.grid();
  const int d = g.ndim();
  Mixture m = mixture(prob, false);
  const Eigen::ArrayXd inv =
      (m.total > 0.0).select(1.0 / m.total.max(1e-300), Eigen::ArrayXd::Zero(g.size()));
  const SymTensorField s = hooke(strain(u, prob), m.l11 * inv, m.l12 * inv, m.l44 * inv,
                                 m.body * inv);
  const VectorField grad = gradient(ScalarField(g, m.total));
  const Eigen::ArrayXd mag = grad.norm();
  const double floor = 1e-8 * mag.maxCoeff();
  VectorField N(g);
  for (Index p = 0; p < g.size(); ++p) {
    if (!(mag[p] > floor)) continue;
    for (int i = 0; i < d; ++i) {
      double t = 0.0;
      for (int j = 0; j < d; ++j) t += s(i, j)[p] * grad(j)[p] / mag[p];
      N(i)[p] = -t;
    }
  }
  return N;
}

}  // namespace sbm
