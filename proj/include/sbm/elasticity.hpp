#pragma once

#include <array>
#include <vector>

#include "sbm/closure.hpp"
#include "sbm/domain_parameter.hpp"
#include "sbm/field.hpp"

namespace sbm {

// Isotropic stiffness in Voigt notation (lambda11 = C11, lambda12 = C12,
// lambda44 = C44) and a dilatational eigenstrain rho (alpha dT).
struct IsotropicMaterial {
  double lambda11 = 0.0, lambda12 = 0.0, lambda44 = 0.0;
  double rho = 0.0;

  // Stress of the eigenstrain at zero total strain, per unit rho.
  double dilatation_modulus() const { return lambda11 + 2.0 * lambda12; }
  void validate() const;
  bool operator==(const IsotropicMaterial&) const = default;
};

// lambda12 = E nu / ((1 + nu)(1 - 2 nu)), lambda44 = lambda12 (1 - 2 nu) / (2 nu),
// lambda11 = lambda12 + 2 lambda44.
IsotropicMaterial lame_from_engineering(double E, double nu, double rho = 0.0);

// Traction-free solid made of up to two phases with psi1 + psi2 <= 1. An
// empty dp2 means a single phase. On a 2D grid the problem is plane strain.
struct ElasticProblem {
  DomainParameter dp1, dp2;
  IsotropicMaterial mat1, mat2;
  // Closure of each displacement component; fixed-value faces are pinned.
  std::array<BoxClosure, 3> box_bcs;
  // Weight of material 1 filling the void, which keeps exterior lines solvable.
  double upsilon = 1e-16;

  const Grid& grid() const { return dp1.grid(); }
  Eigen::ArrayXd psi2() const;
  void validate() const;
};

// u_a = 0 on the two faces normal to axis a, zero gradient on the others.
std::array<BoxClosure, 3> rigid_frictionless_box();

struct ElasticOptions {
  double tol = 1e-6;          // residual relative to the body-force norm
  double change_tol = 1e-8;   // max displacement change per sweep / box size
  int max_sweeps = 20000;
};

struct ElasticResult {
  VectorField u;
  double residual = 0.0;
  double change = 0.0;  // last max change over psi >= 0.5, per box size
  int sweeps = 0;
  bool converged = false;
  std::vector<double> history;
};

// Residual of div(sigma) = 0 for each component, zero on pinned rows.
VectorField elastic_residual(const ElasticProblem& prob, const VectorField& u);

// Block line relaxation: each sweep updates every component with one line
// relaxation pass of its diagonal operator, coupling to the other components
// lagged from the displacement at the start of the sweep. Throws SolverError
// when not converged within max_sweeps.
ElasticResult solve_displacements_adlr(const ElasticProblem& prob,
                                       const ElasticOptions& options = {});

// sigma_ij = (psi1 C1 + psi2 C2) eps_kl - (psi1 rho1 C1 + psi2 rho2 C2) delta_kl.
SymTensorField compute_stress(const VectorField& u, const ElasticProblem& prob);

// Trace / 3 of a 3D stress field.
ScalarField mean_stress(const SymTensorField& sigma);

// N_i = -C (eps - rho I)_ij n_j with n = grad psi / |grad psi| and the mixture
// stiffness of the solid. Zero where |grad psi| vanishes.
VectorField surface_traction(const VectorField& u, const ElasticProblem& prob);

}  // namespace sbm
