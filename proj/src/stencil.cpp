#include "sbm/stencil.hpp"

#include <cmath>

namespace sbm {
namespace {

// Position of node p along one axis.
inline int axis_index(const Grid& g, Index p, int axis) {
  return static_cast<int>((p / g.stride(axis)) % g.dim(axis));
}

// f one node below p along the axis, synthesizing a ghost at the low face.
inline double below(const Eigen::ArrayXd& f, Index p, Index s, int i,
                    const GhostRule& lo) {
  return i > 0 ? f[p - s] : lo.weight * f[p + s] + lo.constant.real();
}
inline double above(const Eigen::ArrayXd& f, Index p, Index s, int i, int n,
                    const GhostRule& hi) {
  return i < n - 1 ? f[p + s] : hi.weight * f[p - s] + hi.constant.real();
}
// Coefficients are mirrored evenly across a face.
inline double coeff_below(const Eigen::ArrayXd& c, Index p, Index s, int i) {
  return i > 0 ? c[p - s] : c[p + s];
}
inline double coeff_above(const Eigen::ArrayXd& c, Index p, Index s, int i,
                          int n) {
  return i < n - 1 ? c[p + s] : c[p - s];
}

struct AxisGhosts {
  GhostRule lo, hi;
};
AxisGhosts ghosts(const Grid& g, const BoxClosure& closure, int axis) {
  const double h = g.spacing(axis);
  return {ghost_rule(closure.get(axis, Side::lo), h),
          ghost_rule(closure.get(axis, Side::hi), h)};
}
// Ghost rule with the constant dropped, for differences of a ghost row.
AxisGhosts homogeneous(AxisGhosts a) {
  a.lo.constant = 0.0;
  a.hi.constant = 0.0;
  return a;
}

Eigen::ArrayXd one_sided_partial(const Eigen::ArrayXd& f, const Grid& g,
                                 int axis) {
  g.require_stencil_axis(axis);
  const Index s = g.stride(axis);
  const int n = g.dim(axis);
  const double inv2h = 1.0 / (2.0 * g.spacing(axis));
  Eigen::ArrayXd out(g.size());
  for (Index p = 0; p < g.size(); ++p) {
    const int i = axis_index(g, p, axis);
    if (i == 0)
      out[p] = (-3.0 * f[p] + 4.0 * f[p + s] - f[p + 2 * s]) * inv2h;
    else if (i == n - 1)
      out[p] = (3.0 * f[p] - 4.0 * f[p - s] + f[p - 2 * s]) * inv2h;
    else
      out[p] = (f[p + s] - f[p - s]) * inv2h;
  }
  return out;
}

Eigen::ArrayXd ghost_partial(const Eigen::ArrayXd& f, const Grid& g, int axis,
                             const AxisGhosts& gh) {
  g.require_stencil_axis(axis);
  const Index s = g.stride(axis);
  const int n = g.dim(axis);
  const double inv2h = 1.0 / (2.0 * g.spacing(axis));
  Eigen::ArrayXd out(g.size());
  for (Index p = 0; p < g.size(); ++p) {
    const int i = axis_index(g, p, axis);
    out[p] = (above(f, p, s, i, n, gh.hi) - below(f, p, s, i, gh.lo)) * inv2h;
  }
  return out;
}

}  // namespace

ScalarField partial(const ScalarField& f, int axis) {
  return ScalarField(f.grid(), one_sided_partial(f.values(), f.grid(), axis));
}

ScalarField partial(const ScalarField& f, int axis, const BoxClosure& closure) {
  return ScalarField(f.grid(), ghost_partial(f.values(), f.grid(), axis,
                                             ghosts(f.grid(), closure, axis)));
}

VectorField gradient(const ScalarField& f) {
  VectorField g(f.grid());
  for (int a = 0; a < f.grid().ndim(); ++a)
    g(a) = one_sided_partial(f.values(), f.grid(), a);
  return g;
}

VectorField gradient(const ScalarField& f, const BoxClosure& closure) {
  VectorField g(f.grid());
  for (int a = 0; a < f.grid().ndim(); ++a)
    g(a) = ghost_partial(f.values(), f.grid(), a, ghosts(f.grid(), closure, a));
  return g;
}

ScalarField axis_flux_div(const ScalarField& coeff, const ScalarField& f,
                          int axis, const BoxClosure& closure) {
  require_same_grid(coeff.grid(), f.grid(), "axis_flux_div");
  const Grid& g = f.grid();
  g.require_stencil_axis(axis);
  const Index s = g.stride(axis);
  const int n = g.dim(axis);
  const double inv_h2 = 1.0 / (g.spacing(axis) * g.spacing(axis));
  const AxisGhosts gh = ghosts(g, closure, axis);
  const auto& c = coeff.values();
  const auto& v = f.values();
  ScalarField out(g);
  for (Index p = 0; p < g.size(); ++p) {
    const int i = axis_index(g, p, axis);
    const double cp = 0.5 * (c[p] + coeff_above(c, p, s, i, n));
    const double cm = 0.5 * (c[p] + coeff_below(c, p, s, i));
    const double fp = above(v, p, s, i, n, gh.hi);
    const double fm = below(v, p, s, i, gh.lo);
    out[p] = (cp * (fp - v[p]) - cm * (v[p] - fm)) * inv_h2;
  }
  return out;
}

ScalarField conservative_div(const ScalarField& coeff, const ScalarField& f,
                             const BoxClosure& closure) {
  require((coeff.values() >= 0.0).all(),
          "conservative_div: coefficient must be non-negative");
  ScalarField out(f.grid());
  for (int a = 0; a < f.grid().ndim(); ++a)
    out.values() += axis_flux_div(coeff, f, a, closure).values();
  return out;
}

ScalarField cross_derivative(const ScalarField& coeff, const ScalarField& f,
                             int outer, int inner) {
  require(outer != inner, "cross_derivative: outer and inner axes must differ");
  require_same_grid(coeff.grid(), f.grid(), "cross_derivative");
  const Grid& g = f.grid();
  Eigen::ArrayXd flux = coeff.values() * one_sided_partial(f.values(), g, inner);
  return ScalarField(g, one_sided_partial(flux, g, outer));
}

ScalarField cross_derivative(const ScalarField& coeff, const ScalarField& f,
                             int outer, int inner, const BoxClosure& closure) {
  require(outer != inner, "cross_derivative: outer and inner axes must differ");
  require_same_grid(coeff.grid(), f.grid(), "cross_derivative");
  const Grid& g = f.grid();
  Eigen::ArrayXd flux =
      coeff.values() * ghost_partial(f.values(), g, inner, ghosts(g, closure, inner));
  // A ghost row of f differs from its mirror row by a constant, so the inner
  // difference of the ghost row is weight times that of the mirror row.
  return ScalarField(
      g, ghost_partial(flux, g, outer, homogeneous(ghosts(g, closure, outer))));
}

ScalarField radial_flux_div(const ScalarField& coeff, const ScalarField& f,
                            const BoxClosure& closure) {
  require_same_grid(coeff.grid(), f.grid(), "radial_flux_div");
  const Grid& g = f.grid();
  require(g.axisymmetric(), "radial operator needs an axisymmetric grid");
  g.require_stencil_axis(0);
  const Index s = g.stride(0);
  const int n = g.dim(0);
  const double dr = g.spacing(0);
  const bool axis_lo = g.radial_axis_at_lower_face();
  const AxisGhosts gh = ghosts(g, closure, 0);
  const auto& c = coeff.values();
  const auto& v = f.values();
  ScalarField out(g);
  for (Index p = 0; p < g.size(); ++p) {
    const int i = axis_index(g, p, 0);
    const double r = g.coordinate(0, i);
    const double rp = r + 0.5 * dr;
    double rm = r - 0.5 * dr;
    double flux_m = 0.0;
    if (i == 0 && axis_lo) {
      rm = std::max(0.0, rm);
      if (rm > 0.0) {
        const double cm = 0.5 * (c[p] + coeff_below(c, p, s, i));
        flux_m = rm * cm * (v[p] - below(v, p, s, i, gh.lo)) / dr;
      }
    } else {
      const double cm = 0.5 * (c[p] + coeff_below(c, p, s, i));
      flux_m = rm * cm * (v[p] - below(v, p, s, i, gh.lo)) / dr;
    }
    const double cp = 0.5 * (c[p] + coeff_above(c, p, s, i, n));
    const double flux_p = rp * cp * (above(v, p, s, i, n, gh.hi) - v[p]) / dr;
    out[p] = 2.0 * (flux_p - flux_m) / (rp * rp - rm * rm);
  }
  return out;
}

ScalarField conservative_div_rz(const ScalarField& coeff, const ScalarField& f,
                                const BoxClosure& closure) {
  require(f.grid().axisymmetric(),
          "conservative_div_rz needs an axisymmetric grid");
  require((coeff.values() >= 0.0).all(),
          "conservative_div_rz: coefficient must be non-negative");
  ScalarField out = radial_flux_div(coeff, f, closure);
  out.values() += axis_flux_div(coeff, f, 1, closure).values();
  return out;
}

double integrate(const ScalarField& f) {
  double sum = 0.0;
  for (Index p = 0; p < f.size(); ++p) sum += f[p] * f.grid().node_volume(p);
  return sum;
}

}  // namespace sbm
