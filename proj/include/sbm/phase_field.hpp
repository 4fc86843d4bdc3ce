#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sbm/closure.hpp"
#include "sbm/domain_parameter.hpp"
#include "sbm/stencil_operator.hpp"

namespace sbm {

// Order parameter phi (1 in phase 1, 0 in phase 0) on a diffuse substrate psi
// with the double well f = w phi^2 (1 - phi)^2. theta is the contact angle
// measured through phase 1: the substrate normal n = grad psi/|grad psi| and
// the phase normal grad phi/|grad phi| satisfy n . grad phi/|grad phi| = -cos theta.
struct PhaseFieldState {
  ScalarField phi;
  DomainParameter dp;
  double w = 1.0;
  double epsilon = 1.0;
  double M = 1.0;
  double theta = 1.5707963267948966;  // radians
  double J_n = 0.0;                    // boundary flux for Cahn-Hilliard
  double upsilon = 1e-7;
  GuardForm guard = GuardForm::blended;
  BoxClosure box;             // closure of phi; mu sees zero-gradient faces
  Eigen::ArrayXd theta_map;   // per-node angle overriding theta when non-empty

  // Phase-boundary width epsilon sqrt(2 / w).
  double delta_phi() const;
  void validate() const;
};

enum class PhaseDynamics { allen_cahn, cahn_hilliard };
const char* to_string(PhaseDynamics d);
PhaseDynamics phase_dynamics_from_string(const std::string& name);

// Parameters with epsilon = 1/sqrt(w), so delta_phi = sqrt(2)/w and the
// interfacial energy stays sqrt(2)/6.
inline std::pair<double, double> well_for_width(double delta_phi) {
  const double w = 1.4142135623730951 / delta_phi;
  return {w, 1.0 / std::sqrt(w)};
}

// Flat equilibrium profile (1 - tanh(sqrt(w) x / (sqrt(2) epsilon))) / 2
// at signed distance x from the phase boundary (phase 1 for x < 0).
double equilibrium_profile(double x, double w, double epsilon);

// mu = f'(phi) - (epsilon^2 / g) div(psi grad phi)
//      - (epsilon |grad psi| / g) sqrt(2 f) cos theta,  g = guarded psi.
ScalarField sbm_chemical_potential(const PhaseFieldState& s);

// -M mu.
ScalarField allen_cahn_rate(const PhaseFieldState& s);
// (1/g) div(psi M grad mu) + (|grad psi| / g) J_n.
ScalarField cahn_hilliard_rate(const PhaseFieldState& s);

// Forward-Euler bounds from Gershgorin estimates of the linearised rates.
double allen_cahn_stable_dt(const PhaseFieldState& s);
double cahn_hilliard_stable_dt(const PhaseFieldState& s);

// One explicit step through the field operators. Throws InvalidArgument when
// dt exceeds the stability bound and SolverError on non-finite values.
ScalarField step_allen_cahn(const PhaseFieldState& s, double dt);
ScalarField step_cahn_hilliard(const PhaseFieldState& s, double dt);

// The same updates with (1/g) div(psi grad) assembled once.
class PhaseFieldStepper {
 public:
  // dt = 0 selects safety times the stability bound.
  PhaseFieldStepper(const PhaseFieldState& s, PhaseDynamics dynamics, double dt = 0.0,
                    double safety = 0.5);

  double dt() const { return dt_; }
  double max_stable_dt() const { return dt_max_; }
  long steps() const { return steps_; }
  PhaseDynamics dynamics() const { return dynamics_; }

  // Advances phi by one step and returns max |d phi/dt|.
  double step(Eigen::ArrayXd& phi);

 private:
  void chemical_potential(const Eigen::ArrayXd& phi, Eigen::ArrayXd& mu);

  PhaseDynamics dynamics_;
  StencilOperator<double> lap_phi_, lap_mu_;
  Eigen::ArrayXd wall_;   // epsilon |grad psi| cos theta / g
  Eigen::ArrayXd inflow_; // |grad psi| J_n / g
  Eigen::ArrayXd lap_, mu_, rate_;
  double w_, eps2_, M_, root_two_w_;
  double dt_ = 0.0, dt_max_ = 0.0;
  long steps_ = 0;
};

struct ContactAngle {
  double mean_cos = 0.0;  // mean of grad psi . grad phi / (|grad psi| |grad phi|)
  double angle = 0.0;     // arccos(mean_cos), radians
  int count = 0;          // nodes in the band
};

// Averages over nodes with 0.1 < psi < 0.9 and 0.1 < phi < 0.9. Throws
// InvalidArgument when the band is empty. Because grad phi points into phase
// 1, a contact angle theta reads as mean_cos = -cos theta.
ContactAngle measure_contact_angle(const ScalarField& phi, const DomainParameter& dp);

// integral(psi phi_t) / integral(psi phi_0).
double conservation_metric(const ScalarField& phi_t, const ScalarField& phi_0,
                           const DomainParameter& dp);

struct CircleFit {
  double cx = 0.0, cy = 0.0, radius = 0.0;
  double rms = 0.0;  // RMS radial residual
  int points = 0;
};

// Algebraic least-squares circle through the points.
CircleFit fit_circle(const std::vector<std::array<double, 2>>& points);

// phi = 0.5 crossings along axis-0 rows of a 2D field, one per row with
// psi >= min_psi at the crossing, linearly interpolated.
std::vector<std::array<double, 2>> phase_contour(const ScalarField& phi,
                                                 const DomainParameter& dp,
                                                 double min_psi = 0.5);

// The flat-substrate contact-angle benchmark: 100 x 100 box with dx = 1
// (101 x 101 nodes), psi = (1 + tanh((y - 30) / zeta)) / 2, phase 1 left of
// a vertical boundary at x = 50, zero-gradient faces, M = 1.
struct ContactAngleCase {
  PhaseDynamics dynamics = PhaseDynamics::allen_cahn;
  double zeta = 1.0;
  double delta_phi = 1.4142;
  double theta_deg = 60.0;
  double printed_cos = 0.0;      // printed value, 0 when absent
  double printed_conservation = 0.0;
};

PhaseFieldState contact_angle_setup(const ContactAngleCase& c);

// The reported angle is the mean over the last window of samples. A run is
// steady when two consecutive window means agree within steady_tol and the
// fitted arc radius changed by at most radius_tol (relative) between them.
// It also stops at t_max or when the contact line comes within edge_margin
// nodes of the far box face.
struct ContactAngleOptions {
  double safety = 0.9;
  double sample_interval = 10.0;
  double min_time = 1000.0;
  double window = 500.0;
  double steady_tol = 2e-3;
  double radius_tol = 2e-3;
  double t_max = 2500.0;
  int edge_margin = 10;
};

enum class ContactAngleStop { steady, t_max, box_face };
const char* to_string(ContactAngleStop s);

struct ContactAngleResult {
  ContactAngleCase config;
  double cos_theta = 0.0;  // window mean of -mean_cos, the angle through phase 1
  double angle_deg = 0.0;
  double conservation = 0.0;
  double arc_rms = 0.0;
  double arc_radius = 0.0;
  double t_end = 0.0;
  long steps = 0;
  double dt = 0.0;
  bool steady = false;
  ContactAngleStop stop = ContactAngleStop::t_max;
  std::vector<std::pair<double, double>> history;  // (t, cos_theta)
  ScalarField phi;
};

ContactAngleResult run_contact_angle_case(const ContactAngleCase& c,
                                          const ContactAngleOptions& options = {});

}  // namespace sbm
