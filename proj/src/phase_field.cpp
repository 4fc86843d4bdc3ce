#include "sbm/phase_field.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sbm/stencil.hpp"

namespace sbm {

double PhaseFieldState::delta_phi() const { return epsilon * std::sqrt(2.0 / w); }

void PhaseFieldState::validate() const {
  require(w > 0.0 && epsilon > 0.0 && M > 0.0,
          "phase field: w, epsilon and M must be positive");
  require(std::isfinite(w) && std::isfinite(epsilon) && std::isfinite(M) && std::isfinite(J_n),
          "phase field: parameters must be finite");
  require(theta > 0.0 && theta < std::numbers::pi,
          "phase field: contact angle must lie in (0, pi)");
  require(upsilon >= 1e-16 && upsilon <= 1e-2,
          "phase field: upsilon must lie in [1e-16, 1e-2]");
  require(dp.psi.size() > 0, "phase field: domain parameter is empty");
  require_same_grid(phi.grid(), dp.grid(), "phase field");
  if (theta_map.size()) {
    require(theta_map.size() == phi.size(), "phase field: theta map has the wrong size");
    require((theta_map > 0.0).all() && (theta_map < std::numbers::pi).all(),
            "phase field: contact angles must lie in (0, pi)");
  }
  for (int a = 0; a < phi.grid().ndim(); ++a)
    for (Side side : {Side::lo, Side::hi})
      require(!box.pinned(a, side), "phase field: fixed-value box faces are not supported");
}

const char* to_string(PhaseDynamics d) {
  return d == PhaseDynamics::allen_cahn ? "allen_cahn" : "cahn_hilliard";
}

PhaseDynamics phase_dynamics_from_string(const std::string& name) {
  if (name == "allen_cahn") return PhaseDynamics::allen_cahn;
  if (name == "cahn_hilliard") return PhaseDynamics::cahn_hilliard;
  throw InvalidArgument("unknown phase dynamics '" + name +
                        "' (expected allen_cahn or cahn_hilliard)");
}

double equilibrium_profile(double x, double w, double epsilon) {
  return 0.5 * (1.0 - std::tanh(std::sqrt(w) * x / (std::sqrt(2.0) * epsilon)));
}

namespace {

ScalarField flux_divergence(const ScalarField& coeff, const ScalarField& f,
                            const BoxClosure& box) {
  return f.grid().axisymmetric() ? conservative_div_rz(coeff, f, box)
                                 : conservative_div(coeff, f, box);
}

Eigen::ArrayXd well_slope(const Eigen::ArrayXd& phi, double w) {
  return 2.0 * w * phi * (1.0 - phi) * (1.0 - 2.0 * phi);
}

// sqrt(2 f) with f clamped at zero.
Eigen::ArrayXd root_two_f(const Eigen::ArrayXd& phi, double w) {
  const Eigen::ArrayXd f = w * phi.square() * (1.0 - phi).square();
  return (2.0 * f.max(0.0)).sqrt();
}

Eigen::ArrayXd cos_theta(const PhaseFieldState& s) {
  if (s.theta_map.size()) return s.theta_map.cos();
  return Eigen::ArrayXd::Constant(s.phi.size(), std::cos(s.theta));
}

Eigen::ArrayXd guard_of(const PhaseFieldState& s) {
  return guarded(s.dp.psi.values(), s.upsilon, s.guard);
}

// (1/g) div(psi grad) as an operator.
StencilOperator<double> assemble_sbm_laplacian(const PhaseFieldState& s, const BoxClosure& box) {
  const Grid& g = s.dp.grid();
  StencilOperator<double> op(g);
  const Eigen::ArrayXd w = 1.0 / guard_of(s);
  for (int a = 0; a < g.ndim(); ++a) {
    if (a == 0 && g.axisymmetric())
      add_radial_flux_div(op, w, s.dp.psi.values(), box);
    else
      add_flux_div(op, w, s.dp.psi.values(), a, box);
  }
  op.coeff(StencilOperator<double>::kCentre);
  return op;
}

struct RateBounds {
  double lap;   // max abs row sum of (1/g) div(psi grad)
  double wall;  // max epsilon |grad psi| |cos theta| / g
};

RateBounds rate_bounds(const PhaseFieldState& s) {
  const RateBounds b{assemble_sbm_laplacian(s, s.box).abs_row_sum().maxCoeff(),
                     (s.epsilon * s.dp.grad_mag.values() * cos_theta(s).abs() / guard_of(s))
                         .maxCoeff()};
  return b;
}

// Linearised chemical potential: |f''| <= 2w on [0, 1] and
// |d sqrt(2f)/d phi| <= sqrt(2w).
double mu_bound(const PhaseFieldState& s, const RateBounds& b) {
  return s.epsilon * s.epsilon * b.lap + 2.0 * s.w + std::sqrt(2.0 * s.w) * b.wall;
}

void check_dt(double dt, double bound, const char* who) {
  require(dt > 0.0, std::string(who) + ": dt must be positive");
  if (dt > bound) {
    std::ostringstream msg;
    msg << who << ": dt = " << dt << " exceeds the stability bound " << bound;
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

ScalarField sbm_chemical_potential(const PhaseFieldState& s) {
  s.validate();
  const Eigen::ArrayXd& phi = s.phi.values();
  const Eigen::ArrayXd g = guard_of(s);
  const Eigen::ArrayXd div = flux_divergence(s.dp.psi, s.phi, s.box).values();
  const Eigen::ArrayXd mu = well_slope(phi, s.w) - s.epsilon * s.epsilon * div / g -
                            s.epsilon * s.dp.grad_mag.values() / g * root_two_f(phi, s.w) *
                                cos_theta(s);
  return ScalarField(s.phi.grid(), mu);
}

ScalarField allen_cahn_rate(const PhaseFieldState& s) {
  return ScalarField(s.phi.grid(), Eigen::ArrayXd(-s.M * sbm_chemical_potential(s).values()));
}

ScalarField cahn_hilliard_rate(const PhaseFieldState& s) {
  const ScalarField mu = sbm_chemical_potential(s);
  const Eigen::ArrayXd g = guard_of(s);
  const Eigen::ArrayXd rate = s.M * flux_divergence(s.dp.psi, mu, BoxClosure{}).values() / g +
                              s.dp.grad_mag.values() / g * s.J_n;
  return ScalarField(s.phi.grid(), rate);
}

double allen_cahn_stable_dt(const PhaseFieldState& s) {
  s.validate();
  return 2.0 / (s.M * mu_bound(s, rate_bounds(s)));
}

double cahn_hilliard_stable_dt(const PhaseFieldState& s) {
  s.validate();
  const RateBounds b = rate_bounds(s);
  return 2.0 / (s.M * b.lap * mu_bound(s, b));
}

ScalarField step_allen_cahn(const PhaseFieldState& s, double dt) {
  check_dt(dt, allen_cahn_stable_dt(s), "step_allen_cahn");
  ScalarField out(s.phi.grid(), Eigen::ArrayXd(s.phi.values() + dt * allen_cahn_rate(s).values()));
  if (!out.all_finite()) throw SolverError("step_allen_cahn: non-finite order parameter");
  return out;
}

ScalarField step_cahn_hilliard(const PhaseFieldState& s, double dt) {
  check_dt(dt, cahn_hilliard_stable_dt(s), "step_cahn_hilliard");
  ScalarField out(s.phi.grid(),
                  Eigen::ArrayXd(s.phi.values() + dt * cahn_hilliard_rate(s).values()));
  if (!out.all_finite()) throw SolverError("step_cahn_hilliard: non-finite order parameter");
  return out;
}

PhaseFieldStepper::PhaseFieldStepper(const PhaseFieldState& s, PhaseDynamics dynamics,
                                     double dt, double safety)
    : dynamics_(dynamics),
      lap_phi_(assemble_sbm_laplacian(s, s.box)),
      lap_mu_(assemble_sbm_laplacian(s, BoxClosure{})),
      w_(s.w),
      eps2_(s.epsilon * s.epsilon),
      M_(s.M),
      root_two_w_(std::sqrt(2.0 * s.w)) {
  s.validate();
  require(safety > 0.0 && safety <= 1.0, "phase-field stepper: safety must lie in (0, 1]");
  require(dt >= 0.0, "phase-field stepper: dt must be positive (or 0 for automatic)");
  const Eigen::ArrayXd g = guard_of(s);
  wall_ = s.epsilon * s.dp.grad_mag.values() * cos_theta(s) / g;
  inflow_ = s.dp.grad_mag.values() * s.J_n / g;
  dt_max_ = dynamics == PhaseDynamics::allen_cahn ? allen_cahn_stable_dt(s)
                                                  : cahn_hilliard_stable_dt(s);
  if (dt > 0.0) {
    check_dt(dt, dt_max_, "phase-field stepper");
    dt_ = dt;
  } else {
    dt_ = safety * dt_max_;
  }
}

void PhaseFieldStepper::chemical_potential(const Eigen::ArrayXd& phi, Eigen::ArrayXd& mu) {
  lap_ = lap_phi_.rhs();
  lap_phi_.accumulate(phi, lap_, [](int) { return true; });
  const Index n = phi.size();
  for (Index p = 0; p < n; ++p) {
    const double v = phi[p], u = 1.0 - v;
    const double root = std::abs(v * u) * root_two_w_;  // sqrt(2 f)
    mu[p] = 2.0 * w_ * v * u * (u - v) - eps2_ * lap_[p] - wall_[p] * root;
  }
}

double PhaseFieldStepper::step(Eigen::ArrayXd& phi) {
  const Index n = lap_phi_.grid().size();
  require(phi.size() == n, "phase-field stepper: field size mismatch");
  mu_.resize(n);
  lap_.resize(n);
  chemical_potential(phi, mu_);
  if (dynamics_ == PhaseDynamics::allen_cahn) {
    rate_ = -M_ * mu_;
  } else {
    rate_ = lap_mu_.rhs() + inflow_;
    lap_mu_.accumulate(mu_, rate_, [](int) { return true; });
  }
  double m = 0.0, sum = 0.0;
  for (Index p = 0; p < n; ++p) {
    phi[p] += dt_ * rate_[p];
    m = std::max(m, std::abs(rate_[p]));
    sum += rate_[p];
  }
  ++steps_;
  if (!std::isfinite(m) || !std::isfinite(sum)) {
    std::ostringstream msg;
    msg << "phase-field stepper: non-finite value at step " << steps_;
    throw SolverError(msg.str());
  }
  return m;
}

ContactAngle measure_contact_angle(const ScalarField& phi, const DomainParameter& dp) {
  const Grid& g = phi.grid();
  require_same_grid(g, dp.grid(), "measure_contact_angle");
  const VectorField gphi = gradient(phi);
  const int d = g.ndim();
  double sum = 0.0;
  int count = 0;
  for (Index p = 0; p < g.size(); ++p) {
    const double psi = dp.psi[p], f = phi[p];
    if (!(psi > 0.1 && psi < 0.9 && f > 0.1 && f < 0.9)) continue;
    double dot = 0.0, a2 = 0.0, b2 = 0.0;
    for (int a = 0; a < d; ++a) {
      dot += dp.grad_psi(a)[p] * gphi(a)[p];
      a2 += dp.grad_psi(a)[p] * dp.grad_psi(a)[p];
      b2 += gphi(a)[p] * gphi(a)[p];
    }
    if (a2 == 0.0 || b2 == 0.0) continue;
    sum += dot / std::sqrt(a2 * b2);
    ++count;
  }
  require(count > 0, "measure_contact_angle: no nodes with 0.1 < psi, phi < 0.9 "
                     "(the phase boundary does not meet the substrate)");
  ContactAngle out;
  out.mean_cos = std::clamp(sum / count, -1.0, 1.0);
  out.angle = std::acos(out.mean_cos);
  out.count = count;
  return out;
}

double conservation_metric(const ScalarField& phi_t, const ScalarField& phi_0,
                           const DomainParameter& dp) {
  require_same_grid(phi_t.grid(), phi_0.grid(), "conservation_metric");
  require_same_grid(phi_t.grid(), dp.grid(), "conservation_metric");
  const Grid& g = phi_t.grid();
  const double m0 = integrate(ScalarField(g, Eigen::ArrayXd(dp.psi.values() * phi_0.values())));
  require(m0 != 0.0, "conservation_metric: initial integral of psi phi is zero");
  return integrate(ScalarField(g, Eigen::ArrayXd(dp.psi.values() * phi_t.values()))) / m0;
}

CircleFit fit_circle(const std::vector<std::array<double, 2>>& points) {
  const Index n = static_cast<Index>(points.size());
  require(n >= 3, "fit_circle: needs at least three points");
  // x^2 + y^2 = 2 a x + 2 b y + c, least squares in (a, b, c).
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd rhs(n);
  for (Index k = 0; k < n; ++k) {
    const auto& q = points[k];
    A.row(k) << 2.0 * q[0], 2.0 * q[1], 1.0;
    rhs[k] = q[0] * q[0] + q[1] * q[1];
  }
  const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(rhs);
  CircleFit c;
  c.cx = sol[0];
  c.cy = sol[1];
  c.radius = std::sqrt(std::max(sol[2] + sol[0] * sol[0] + sol[1] * sol[1], 0.0));
  double ss = 0.0;
  for (const auto& q : points) {
    const double r = std::hypot(q[0] - c.cx, q[1] - c.cy) - c.radius;
    ss += r * r;
  }
  c.rms = std::sqrt(ss / n);
  c.points = static_cast<int>(n);
  return c;
}

std::vector<std::array<double, 2>> phase_contour(const ScalarField& phi,
                                                 const DomainParameter& dp, double min_psi) {
  const Grid& g = phi.grid();
  require(g.ndim() == 2, "phase_contour: needs a 2D field");
  require_same_grid(g, dp.grid(), "phase_contour");
  std::vector<std::array<double, 2>> out;
  for (int j = 0; j < g.dim(1); ++j) {
    if (dp.psi.at(0, j) < min_psi && dp.psi.at(g.dim(0) - 1, j) < min_psi) continue;
    for (int i = 0; i + 1 < g.dim(0); ++i) {
      const double a = phi.at(i, j), b = phi.at(i + 1, j);
      if ((a - 0.5) * (b - 0.5) > 0.0 || a == b) continue;
      const double t = (a - 0.5) / (a - b);
      const double psi = dp.psi.at(i, j) + t * (dp.psi.at(i + 1, j) - dp.psi.at(i, j));
      if (psi >= min_psi)
        out.push_back({g.coordinate(0, i) + t * g.spacing(0), g.coordinate(1, j)});
      break;
    }
  }
  return out;
}

PhaseFieldState contact_angle_setup(const ContactAngleCase& c) {
  require(c.zeta > 0.0 && c.delta_phi > 0.0, "contact-angle case: zeta and delta_phi must be positive");
  const Grid g = Grid::plane(101, 101, 1.0, 1.0);
  PhaseFieldState s;
  s.dp = tanh_from_distance(halfspace_distance(g, 1, 30.0, true), c.zeta);
  std::tie(s.w, s.epsilon) = well_for_width(c.delta_phi);
  s.M = 1.0;
  s.theta = c.theta_deg * std::numbers::pi / 180.0;
  s.phi = ScalarField(g);
  for (Index p = 0; p < g.size(); ++p)
    s.phi[p] = equilibrium_profile(g.position(p)[0] - 50.0, s.w, s.epsilon);
  s.validate();
  return s;
}

ContactAngleResult run_contact_angle_case(const ContactAngleCase& c,
                                          const ContactAngleOptions& options) {
  require(options.sample_interval > 0.0 && options.window > 0.0 && options.t_max > 0.0 &&
              options.steady_tol > 0.0 && options.edge_margin >= 0,
          "contact-angle run: bad options");
  const PhaseFieldState s = contact_angle_setup(c);
  PhaseFieldStepper stepper(s, c.dynamics, 0.0, options.safety);
  const Grid& g = s.phi.grid();
  const Eigen::ArrayXd& psi = s.dp.psi.values();
  Eigen::ArrayXd x = s.phi.values();
  ContactAngleResult out;
  out.config = c;
  out.dt = stepper.dt();
  const long per_sample = std::max<long>(1, std::lround(options.sample_interval / stepper.dt()));
  const std::size_t window =
      std::max<std::size_t>(2, std::lround(options.window / (per_sample * stepper.dt())));
  auto window_mean = [&](std::size_t end) {
    double sum = 0.0;
    for (std::size_t k = end - window; k < end; ++k) sum += out.history[k].second;
    return sum / static_cast<double>(window);
  };
  // Largest axis-0 index of a band node, which tracks the contact line.
  auto contact_index = [&] {
    int far = 0;
    for (Index p = 0; p < g.size(); ++p)
      if (psi[p] > 0.1 && psi[p] < 0.9 && x[p] > 0.1 && x[p] < 0.9)
        far = std::max(far, g.unravel(p)[0]);
    return far;
  };

  double t = 0.0, last_radius = 0.0;
  out.stop = ContactAngleStop::t_max;
  while (t < options.t_max) {
    for (long k = 0; k < per_sample; ++k) stepper.step(x);
    t = static_cast<double>(stepper.steps()) * stepper.dt();
    if (contact_index() >= g.dim(0) - 1 - options.edge_margin) {
      out.stop = ContactAngleStop::box_face;
      break;
    }
    const ContactAngle a = measure_contact_angle(ScalarField(g, x), s.dp);
    out.history.emplace_back(t, -a.mean_cos);
    const std::size_t n = out.history.size();
    if (n % window != 0) continue;
    const auto contour = phase_contour(ScalarField(g, x), s.dp);
    const double radius = contour.size() >= 3 ? fit_circle(contour).radius : 0.0;
    const bool arc_still = radius > 0.0 && last_radius > 0.0 &&
                           std::abs(radius - last_radius) <= options.radius_tol * radius;
    last_radius = radius;
    if (t < options.min_time || n < 2 * window) continue;
    if (arc_still && std::abs(window_mean(n) - window_mean(n - window)) <= options.steady_tol) {
      out.stop = ContactAngleStop::steady;
      break;
    }
  }
  require(!out.history.empty(), "contact-angle run: no sample before stopping");
  const std::size_t n = out.history.size();
  const std::size_t used = std::min(n, window);
  double sum = 0.0;
  for (std::size_t k = n - used; k < n; ++k) sum += out.history[k].second;
  out.cos_theta = sum / static_cast<double>(used);
  out.steady = out.stop == ContactAngleStop::steady;
  out.phi = ScalarField(g, x);
  out.t_end = t;
  out.steps = stepper.steps();
  out.angle_deg = std::acos(std::clamp(out.cos_theta, -1.0, 1.0)) * 180.0 / std::numbers::pi;
  out.conservation = conservation_metric(out.phi, s.phi, s.dp);
  const auto contour = phase_contour(out.phi, s.dp);
  if (contour.size() >= 3) {
    const CircleFit f = fit_circle(contour);
    out.arc_rms = f.rms;
    out.arc_radius = f.radius;
  }
  return out;
}

const char* to_string(ContactAngleStop s) {
  switch (s) {
    case ContactAngleStop::steady:
      return "steady";
    case ContactAngleStop::t_max:
      return "t_max";
    case ContactAngleStop::box_face:
      return "box_face";
  }
  return "unknown";
}

}  // namespace sbm
