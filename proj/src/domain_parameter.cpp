#include "sbm/domain_parameter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sbm/stencil.hpp"

namespace sbm {

DomainParameter DomainParameter::from_psi(ScalarField psi, double zeta) {
  require(zeta > 0.0, "domain parameter: zeta must be positive");
  require(psi.all_finite(), "domain parameter: psi must be finite");
  require((psi.values() >= -1e-12).all() && (psi.values() <= 1.0 + 1e-12).all(),
          "domain parameter: psi must lie in [0, 1]");
  DomainParameter dp;
  dp.zeta = zeta;
  const Grid& g = psi.grid();
  const int d = g.ndim();
  dp.grad_psi = gradient(psi);
  dp.grad_mag = ScalarField(g, dp.grad_psi.norm());
  dp.eps_n = 1e-8 * dp.grad_mag.values().maxCoeff();
  dp.normal = VectorField(g);
  dp.projector = SymTensorField(g);
  for (Index p = 0; p < g.size(); ++p) {
    const double m = dp.grad_mag[p];
    if (!(m > dp.eps_n) || m == 0.0) continue;
    for (int a = 0; a < d; ++a) dp.normal(a)[p] = dp.grad_psi(a)[p] / m;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        dp.projector(i, j)[p] =
            (i == j ? 1.0 : 0.0) - dp.normal(i)[p] * dp.normal(j)[p];
  }
  dp.psi = std::move(psi);
  return dp;
}

DomainParameter DomainParameter::uniform(const Grid& grid, double value) {
  return from_psi(ScalarField(grid, value), 1.0);
}

Eigen::ArrayXd guarded(const Eigen::ArrayXd& psi, double upsilon, GuardForm form) {
  if (form == GuardForm::additive) return psi + upsilon;
  return psi + upsilon * (1.0 - psi);
}

const char* to_string(GuardForm form) {
  return form == GuardForm::additive ? "additive" : "blended";
}

GuardForm guard_form_from_string(const std::string& name) {
  if (name == "additive") return GuardForm::additive;
  if (name == "blended") return GuardForm::blended;
  throw InvalidArgument("unknown guard form '" + name + "' (expected additive or blended)");
}

double nominal_thickness(double zeta) { return 2.0 * std::atanh(0.97) * zeta; }

ScalarField tanh_profile(const ScalarField& distance, double zeta) {
  require(zeta > 0.0, "tanh profile: zeta must be positive");
  return ScalarField(distance.grid(),
                     Eigen::ArrayXd(0.5 * (1.0 + (distance.values() / zeta).tanh())));
}

DomainParameter tanh_from_distance(const ScalarField& distance, double zeta) {
  return DomainParameter::from_psi(tanh_profile(distance, zeta), zeta);
}

DomainParameter tanh_from_distance(const SignedDistance& distance, double zeta) {
  return tanh_from_distance(distance.phi, zeta);
}

ScalarField halfspace_distance(const Grid& grid, int axis, double position,
                               bool inside_above) {
  require(axis >= 0 && axis < grid.ndim(), "halfspace: axis out of range");
  return ScalarField::from_function(grid, [&](const auto& x) {
    return inside_above ? x[axis] - position : position - x[axis];
  });
}

ScalarField slab_distance(const Grid& grid, int axis, double lo, double hi) {
  require(axis >= 0 && axis < grid.ndim() && lo < hi, "slab: bad bounds");
  return ScalarField::from_function(
      grid, [&](const auto& x) { return std::min(x[axis] - lo, hi - x[axis]); });
}

ScalarField sphere_distance(const Grid& grid, const std::array<double, 3>& centre,
                            double radius) {
  return ScalarField::from_function(grid, [&](const auto& x) {
    double r2 = 0.0;
    for (int a = 0; a < grid.ndim(); ++a) r2 += (x[a] - centre[a]) * (x[a] - centre[a]);
    return radius - std::sqrt(r2);
  });
}

ScalarField sign_from_labels(const ScalarField& labels, const std::vector<int>& inside) {
  ScalarField s(labels.grid(), -1.0);
  for (Index p = 0; p < labels.size(); ++p) {
    const int label = static_cast<int>(std::lround(labels[p]));
    if (std::find(inside.begin(), inside.end(), label) != inside.end()) s[p] = 1.0;
  }
  return s;
}

namespace {

// Godunov upwind |grad phi| for the given sign; box faces mirror.
void godunov_norm(const Grid& g, const Eigen::ArrayXd& phi, const Eigen::ArrayXd& sgn,
                  Eigen::ArrayXd& out) {
  const int d = g.ndim();
  out.setZero(g.size());
  for (int a = 0; a < d; ++a) {
    const Index s = g.stride(a);
    const int n = g.dim(a);
    const double inv_h = 1.0 / g.spacing(a);
    for (Index p = 0; p < g.size(); ++p) {
      const int i = static_cast<int>((p / s) % n);
      const double fm = i > 0 ? phi[p - s] : phi[p + s];
      const double fp = i < n - 1 ? phi[p + s] : phi[p - s];
      const double back = (phi[p] - fm) * inv_h;
      const double fwd = (fp - phi[p]) * inv_h;
      double t;
      if (sgn[p] > 0.0) {
        const double u = std::max(back, 0.0), v = std::min(fwd, 0.0);
        t = std::max(u * u, v * v);
      } else {
        const double u = std::min(back, 0.0), v = std::max(fwd, 0.0);
        t = std::max(u * u, v * v);
      }
      out[p] += t;
    }
  }
  out = out.sqrt();
}

}  // namespace

SignedDistance reinitialize_distance(const ScalarField& mask, const ReinitOptions& options) {
  const Grid& g = mask.grid();
  Eigen::ArrayXd sgn = (mask.values() > 0.0).select(Eigen::ArrayXd::Ones(g.size()),
                                                   -Eigen::ArrayXd::Ones(g.size()));
  require((sgn > 0.0).any() && (sgn < 0.0).any(),
          "reinitialize_distance: mask has no interface");
  const double h = g.min_spacing();
  const double dtau = options.dtau > 0.0 ? options.dtau : 0.5 * h;
  require(dtau <= 0.5 * h * (1.0 + 1e-12),
          "reinitialize_distance: pseudo-timestep exceeds half the spacing");
  const double nudge = 1e-3 * h;  // dtau times the clamp value 1e-3 h / dtau

  SignedDistance out;
  Eigen::ArrayXd phi = 0.5 * h * sgn;
  Eigen::ArrayXd norm(g.size());
  auto band_residual = [&]() {
    double r = 0.0;
    for (Index p = 0; p < g.size(); ++p)
      if (std::abs(phi[p]) <= options.band_width) r = std::max(r, std::abs(norm[p] - 1.0));
    return r;
  };
  // Iterate until the field stops changing or the step budget runs out; the
  // band residual is then reported against the tolerance.
  int step = 0;
  for (; step < options.steps; ++step) {
    godunov_norm(g, phi, sgn, norm);
    Eigen::ArrayXd next = phi + dtau * sgn * (1.0 - norm);
    for (Index p = 0; p < g.size(); ++p)
      if (next[p] * sgn[p] <= 0.0) next[p] = phi[p] + sgn[p] * nudge;
    const double change = (next - phi).abs().maxCoeff();
    phi.swap(next);
    if (change <= 1e-12 * h) break;
  }
  godunov_norm(g, phi, sgn, norm);
  out.residual = band_residual();
  out.steps = step;
  out.converged = out.residual <= options.tolerance;
  out.phi = ScalarField(g, phi);
  return out;
}

namespace {

// Multilinear interpolation of nodal values at a physical point; false when
// the point leaves the box.
bool interpolate(const Grid& g, const Eigen::ArrayXd& v, const std::array<double, 3>& x,
                 double& out) {
  const int d = g.ndim();
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (int a = 0; a < d; ++a) {
    const double t = (x[a] - g.origin(a)) / g.spacing(a);
    if (t < 0.0 || t > g.dim(a) - 1) return false;
    int i = static_cast<int>(std::floor(t));
    if (i >= g.dim(a) - 1) i = g.dim(a) - 2;
    base[a] = i;
    frac[a] = t - i;
  }
  out = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    Index3 ijk{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      const int bit = (corner >> a) & 1;
      ijk[a] = base[a] + bit;
      w *= bit ? frac[a] : 1.0 - frac[a];
    }
    out += w * v[g.ravel(ijk)];
  }
  return true;
}

}  // namespace

InterfaceMetrics interface_metrics(const DomainParameter& dp) {
  const Grid& g = dp.grid();
  InterfaceMetrics m;
  m.max_grad = dp.grad_mag.values().maxCoeff();
  double area = 0.0;
  for (Index p = 0; p < g.size(); ++p) area += dp.grad_mag[p] * g.node_volume(p);
  m.area = g.axisymmetric() ? 2.0 * std::numbers::pi * area : area;
  if (m.max_grad == 0.0) return m;

  // Distance-like variable atanh(2 psi - 1) varies linearly across a tanh
  // profile, so interpolating it locates the band edges to sub-cell accuracy.
  const double clip = 1e-15;
  Eigen::ArrayXd level =
      (2.0 * dp.psi.values().max(clip).min(1.0 - clip) - 1.0).unaryExpr(
          [](double v) { return std::atanh(v); });
  const double edge = std::atanh(0.97);
  const double step = 0.05 * g.min_spacing();
  double total = 0.0;
  for (Index p = 0; p < g.size(); ++p) {
    if (dp.psi[p] < 0.5 || dp.grad_mag[p] <= dp.eps_n) continue;
    // A probe starts at each psi = 0.5 crossing between p and a lower neighbour.
    const Index3 ijk = g.unravel(p);
    for (int a = 0; a < g.ndim(); ++a) {
      for (int dir : {-1, 1}) {
        const int t = ijk[a] + dir;
        if (t < 0 || t >= g.dim(a)) continue;
        const Index q = p + dir * g.stride(a);
        if (dp.psi[q] >= 0.5) continue;
        const double f = level[p] / (level[p] - level[q]);
        std::array<double, 3> x0 = g.position(p);
        x0[a] += dir * f * g.spacing(a);
        std::array<double, 3> n{0.0, 0.0, 0.0};
        for (int b = 0; b < g.ndim(); ++b) n[b] = dp.normal(b)[p];
        auto march = [&](double sign, double target, double& dist) {
          double prev = 0.0, s = 0.0;
          for (int k = 0; k < 100000; ++k) {
            s += step;
            std::array<double, 3> x = x0;
            for (int b = 0; b < g.ndim(); ++b) x[b] += sign * s * n[b];
            double v;
            if (!interpolate(g, level, x, v)) return false;
            if (sign * v >= target) {
              dist = s - step * (sign * v - target) / (sign * v - prev);
              return true;
            }
            prev = sign * v;
          }
          return false;
        };
        double up, down;
        if (march(1.0, edge, up) && march(-1.0, edge, down)) {
          total += up + down;
          ++m.probes;
        }
      }
    }
  }
  if (m.probes > 0) m.thickness = total / m.probes;
  return m;
}

BoundaryWeights three_phase_weights(const DomainParameter& psi1,
                                    const DomainParameter& psi2,
                                    const DomainParameter& psi3, double beta,
                                    double upsilon) {
  require(beta > 0.0, "three_phase_weights: beta must be positive");
  const Grid& g = psi1.grid();
  require_same_grid(g, psi2.grid(), "three_phase_weights");
  require_same_grid(g, psi3.grid(), "three_phase_weights");
  const Eigen::ArrayXd sum = psi1.psi.values() + psi2.psi.values() + psi3.psi.values();
  require(((sum - 1.0).abs() <= 1e-6).all(),
          "three_phase_weights: psi1 + psi2 + psi3 must equal 1");
  const auto& g1 = psi1.grad_mag.values();
  const auto& g2 = psi2.grad_mag.values();
  const auto& g3 = psi3.grad_mag.values();
  const Eigen::ArrayXd denom = (g1 * g2 + g2 * g3 + g3 * g1).max(upsilon);
  BoundaryWeights w{ScalarField(g, Eigen::ArrayXd((g2 * g3 / denom).pow(beta))),
                    ScalarField(g, Eigen::ArrayXd((g1 * g2 / denom).pow(beta)))};
  return w;
}

}  // namespace sbm
