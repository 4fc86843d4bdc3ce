#pragma once

#include <array>
#include <string>
#include <vector>

#include "sbm/field.hpp"

namespace sbm {

// The domain parameter psi (1 inside, 0 outside) with its cached geometry.
// Normals and the tangential projector m = I - n n are evaluated where
// |grad psi| exceeds eps_n = 1e-8 max|grad psi|; elsewhere both are zero.
struct DomainParameter {
  ScalarField psi;
  VectorField grad_psi;
  ScalarField grad_mag;
  VectorField normal;
  SymTensorField projector;
  double zeta = 1.0;
  double eps_n = 0.0;

  static DomainParameter from_psi(ScalarField psi, double zeta);
  static DomainParameter uniform(const Grid& grid, double value = 1.0);

  const Grid& grid() const { return psi.grid(); }
};

// Denominator guard for psi. `additive` is psi + upsilon. `blended` is
// psi + upsilon (1 - psi): it differs from the additive form by upsilon psi,
// never drops below upsilon, and is exactly 1 where psi = 1, so bulk nodes
// see the unmodified equation.
enum class GuardForm { blended, additive };
Eigen::ArrayXd guarded(const Eigen::ArrayXd& psi, double upsilon,
                       GuardForm form = GuardForm::blended);
const char* to_string(GuardForm form);
GuardForm guard_form_from_string(const std::string& name);

// Interface thickness xi0 = 2 atanh(0.97) zeta = 4.185 zeta spans the band
// 0.015 < psi < 0.985 of a tanh profile.
double nominal_thickness(double zeta);

// psi = (1 + tanh(distance / zeta)) / 2.
ScalarField tanh_profile(const ScalarField& distance, double zeta);

struct SignedDistance {
  ScalarField phi;        // positive inside
  double residual = 0.0;  // max | |grad phi| - 1 | over the band
  int steps = 0;
  bool converged = false;
};

DomainParameter tanh_from_distance(const ScalarField& distance, double zeta);
DomainParameter tanh_from_distance(const SignedDistance& distance, double zeta);

// Signed distances of simple shapes, positive inside.
ScalarField halfspace_distance(const Grid& grid, int axis, double position,
                               bool inside_above = true);
ScalarField slab_distance(const Grid& grid, int axis, double lo, double hi);
ScalarField sphere_distance(const Grid& grid, const std::array<double, 3>& centre,
                            double radius);

struct ReinitOptions {
  int steps = 400;
  double band_width = 5.0;  // grid units (length)
  double dtau = 0.0;        // 0 selects 0.5 * min spacing
  double tolerance = 0.05;
};

// Evolves d phi/d tau = Sgn (1 - |grad phi|) from phi = Sgn h/2 with Godunov
// upwinding, where Sgn = +1 for mask > 0 and -1 otherwise. A node whose sign
// would flip moves by Sgn * 1e-3 h instead, so the sign map is preserved.
SignedDistance reinitialize_distance(const ScalarField& mask,
                                     const ReinitOptions& options = {});

// +1 where the label is one of `inside`, -1 elsewhere.
ScalarField sign_from_labels(const ScalarField& labels,
                             const std::vector<int>& inside);

struct InterfaceMetrics {
  double max_grad = 0.0;
  double thickness = 0.0;  // mean 0.015..0.985 width along normal probes
  double area = 0.0;       // integral of |grad psi| (2 pi r weighted for r-z)
  int probes = 0;
};

InterfaceMetrics interface_metrics(const DomainParameter& dp);

struct BoundaryWeights {
  ScalarField neumann;
  ScalarField dirichlet;
};

// Three-phase weights for the phase-2 equation: Neumann on the 2|3 boundary
// and Dirichlet on the 1|2 boundary,
// W_N = (g2 g3 / S)^beta, W_D = (g1 g2 / S)^beta, S = g1 g2 + g2 g3 + g3 g1,
// with gi = |grad psi_i| and S floored at upsilon.
BoundaryWeights three_phase_weights(const DomainParameter& psi1,
                                    const DomainParameter& psi2,
                                    const DomainParameter& psi3, double beta,
                                    double upsilon = 1e-12);

}  // namespace sbm
