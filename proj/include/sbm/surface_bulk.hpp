#pragma once

#include <complex>
#include <string>
#include <vector>

#include "sbm/adlr.hpp"
#include "sbm/closure.hpp"
#include "sbm/domain_parameter.hpp"
#include "sbm/explicit_stepper.hpp"

namespace sbm {

// Bulk diffusion inside psi = 1 coupled to reaction, diffusion and
// accumulation on the diffuse surface:
// (g + L|grad psi|) dC/dt = D_b div(psi grad C) - |grad psi| (kappa C - D_s lap_s C)
// with g = guarded(psi, upsilon). omega is the angular frequency of the
// steady periodic problem.
struct SurfaceBulkProblem {
  DomainParameter dp;
  double D_b = 1.0;
  double D_s = 0.0;
  double kappa = 0.0;
  double L = 0.0;
  double omega = 0.0;
  double upsilon = 1e-7;
  GuardForm guard = GuardForm::blended;
  BoxClosure box;

  void validate() const;
};

// Surface Laplacian m_ij d_j (m_ik d_k C) with the tangential projector of dp.
// On axisymmetric grids the (r, r) term uses the annulus radial operator.
ScalarField surface_laplacian(const ScalarField& C, const DomainParameter& dp,
                              const BoxClosure& box = {});

// Adds w[p] times the surface Laplacian to row p.
template <typename Scalar>
void add_surface_laplacian(StencilOperator<Scalar>& op, const Eigen::ArrayXd& w,
                           const DomainParameter& dp, const BoxClosure& box) {
  const Grid& g = op.grid();
  const int d = g.ndim();
  const SymTensorField& m = dp.projector;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Eigen::ArrayXd wij = w * m(i, j);
      if ((wij == 0.0).all()) continue;
      for (int k = 0; k < d; ++k) {
        if (j != k) {
          add_cross(op, wij, m(i, k), j, k, box);
        } else if (j == 0 && g.axisymmetric()) {
          add_radial_flux_div(op, wij, m(i, j), box);
        } else {
          add_flux_div(op, wij, m(i, j), j, box);
        }
      }
    }
  }
}

// Right-hand side of the coupled equation divided by (g + L|grad psi|);
// zero on fixed-value box faces.
ScalarField coupled_rate(const ScalarField& C, const SurfaceBulkProblem& prob);

// One explicit step through the field operators. Throws InvalidArgument when
// dt exceeds the stability bound and SolverError on non-finite values.
ScalarField step_coupled(const ScalarField& C, const SurfaceBulkProblem& prob, double dt);

// Rate operator of the coupled equation (fixed-value box faces pinned).
StencilOperator<double> assemble_coupled(const SurfaceBulkProblem& prob);

class CoupledStepper : public ExplicitStepper {
 public:
  CoupledStepper(const SurfaceBulkProblem& prob, double dt = 0.0, double safety = 0.25)
      : ExplicitStepper(assemble_coupled(prob), dt, safety) {}
};

// Steady periodic amplitude: [D_b div(psi grad) - |grad psi| (kappa - D_s lap_s)
// - i omega psi] C = 0 with the box closures of prob. Fixed-value faces are
// pinned.
StencilOperator<std::complex<double>> assemble_helmholtz(const SurfaceBulkProblem& prob);

struct HelmholtzResult {
  ComplexScalarField C;
  double residual = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> history;
};

// Alternating line relaxation of the steady amplitude equation. Starts from
// `initial` when given, else from zero.
HelmholtzResult solve_helmholtz_adlr(const SurfaceBulkProblem& prob,
                                     const AdlrOptions& options = {},
                                     const ComplexScalarField* initial = nullptr);

// The three cylinder resolutions: radius 1, length 12, dz = 0.04, radial nodes
// r_i = i dr from the axis. The sharp surface is the outermost node inside
// r = R (the last node with psi >= 0.5), which lies 0.6 to 0.8 dr below R.
enum class CylinderResolution { thin, medium, thick };
const char* to_string(CylinderResolution r);
CylinderResolution cylinder_resolution_from_string(const std::string& name);

struct CylinderSetup {
  Grid grid;
  int surface_index = 0;  // radial index of the sharp surface node
  double R = 0.0;
  double zeta = 0.0;
  double length = 12.0;

  static CylinderSetup make(CylinderResolution res, double length = 12.0);
  // C = 1 at z = 0, C = 0 at z = length, zero gradient on the radial faces.
  BoxClosure box() const;
  // psi = (1 + tanh((R - r) / zeta)) / 2.
  DomainParameter domain() const;
};

enum class SharpMethod { direct, alternating };

struct SharpOptions {
  SharpMethod method = SharpMethod::direct;
  double tol = 1e-11;     // alternating: max |dC/dt| at convergence
  long max_steps = 5000000;
};

// Sharp-interface reference on the cylinder nodes r <= R: bulk diffusion for
// r < R and D_s C_zz - kappa C = D_b dC/dr (one-sided) on r = R. Nodes outside
// the cylinder are returned as zero.
ScalarField solve_sharp_cylinder(const CylinderSetup& setup, double D_b, double D_s,
                                 double kappa, const SharpOptions& options = {});

struct CylinderErrors {
  double e = 0.0;    // all nodes with psi >= 0.5
  double e_b = 0.0;  // excluding the surface nodes
  double e_s = 0.0;  // surface nodes only
  int active_planes = 0;
};

// Volume-weighted RMS deviations over the active region (from z = 0 to the
// first plane where the sharp maximum drops to 0.01), each divided by the
// volume-weighted mean sharp concentration over the whole region.
CylinderErrors cylinder_error_report(const ScalarField& sbm, const ScalarField& sharp,
                                     const DomainParameter& dp);

}  // namespace sbm
