#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "sbm/closure.hpp"
#include "sbm/error.hpp"
#include "sbm/field.hpp"
#include "sbm/tridiagonal.hpp"

namespace sbm {

// Linear map x -> A x + b assembled on the 3^d neighbourhood of every node.
// Stencil reach past a box face is folded back onto interior nodes with the
// face's ghost rule, so each row only references nodes inside the box.
// Rows can be pinned (Dirichlet): their rate is zero and their residual is
// x - value.
template <typename Scalar>
class StencilOperator {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  static constexpr int kSlots = 27;
  static constexpr int kCentre = 13;

  StencilOperator() = default;
  explicit StencilOperator(const Grid& grid)
      : grid_(grid),
        rhs_(Array::Zero(grid.size())),
        pinned_(grid.size(), 0),
        pinned_value_(Array::Zero(grid.size())) {}

  const Grid& grid() const { return grid_; }

  static int slot(const Index3& d) {
    return (d[0] + 1) * 9 + (d[1] + 1) * 3 + (d[2] + 1);
  }
  static Index3 displacement(int slot) {
    return {slot / 9 - 1, (slot / 3) % 3 - 1, slot % 3 - 1};
  }
  Index offset(int s) const {
    const Index3 d = displacement(s);
    return d[0] * grid_.stride(0) + d[1] * grid_.stride(1) + d[2] * grid_.stride(2);
  }
  bool has(int s) const { return coeff_[s].size() != 0; }
  const Array& coeff(int s) const { return coeff_[s]; }
  Array& coeff(int s) {
    if (coeff_[s].size() == 0) coeff_[s] = Array::Zero(grid_.size());
    return coeff_[s];
  }
  const Array& rhs() const { return rhs_; }
  Array& rhs() { return rhs_; }
  std::vector<int> slots() const {
    std::vector<int> out;
    for (int s = 0; s < kSlots; ++s)
      if (has(s)) out.push_back(s);
    return out;
  }

  // Adds c * x[p + d] to row p, resolving a target past a box face through
  // the closure's ghost rule.
  void add(Index p, Index3 d, Scalar c, const BoxClosure& closure) {
    const Index3 ijk = grid_.unravel(p);
    double weight = 1.0;
    Scalar constant = Scalar(0);
    for (int a = 0; a < grid_.ndim(); ++a) {
      if (d[a] == 0) continue;
      const int t = ijk[a] + d[a];
      const int n = grid_.dim(a);
      if (t >= 0 && t < n) continue;
      const Side side = t < 0 ? Side::lo : Side::hi;
      const GhostRule g = ghost_rule(closure.get(a, side), grid_.spacing(a));
      constant += Scalar(weight) * real_or_complex(g.constant);
      weight *= g.weight;
      d[a] = -d[a];  // the mirror node sits one step inside the box
    }
    coeff(slot(d))[p] += c * Scalar(weight);
    rhs_[p] += c * constant;
  }
  void add_centre(Index p, Scalar c) { coeff(kCentre)[p] += c; }

  // Pins every node that lies on a fixed-value face.
  void pin_faces(const BoxClosure& closure) {
    for (Index p = 0; p < grid_.size(); ++p) {
      const Index3 ijk = grid_.unravel(p);
      for (int a = 0; a < grid_.ndim(); ++a) {
        for (Side side : {Side::lo, Side::hi}) {
          const int face = side == Side::lo ? 0 : grid_.dim(a) - 1;
          if (ijk[a] == face && closure.pinned(a, side))
            pin(p, real_or_complex(closure.get(a, side).value));
        }
      }
    }
  }
  void pin(Index p, Scalar value) {
    for (auto& c : coeff_)
      if (c.size()) c[p] = Scalar(0);
    rhs_[p] = Scalar(0);
    pinned_[p] = 1;
    pinned_value_[p] = value;
  }
  bool pinned(Index p) const { return pinned_[p] != 0; }
  Scalar pinned_value(Index p) const { return pinned_value_[p]; }

  // Multiplies row p (coefficients and constant) by s[p].
  void scale_rows(const Eigen::ArrayXd& s) {
    for (auto& c : coeff_)
      if (c.size()) c *= s.cast<Scalar>();
    rhs_ *= s.cast<Scalar>();
  }

  // A x (no constant). Pinned rows hold zero coefficients, so they give 0.
  Array apply_linear(const Array& x) const {
    Array y = Array::Zero(grid_.size());
    accumulate(x, y, [](int) { return true; });
    return y;
  }
  // A x + b: the time rate of an explicit update (zero on pinned rows).
  Array apply(const Array& x) const {
    Array y = rhs_;
    accumulate(x, y, [](int) { return true; });
    return y;
  }
  // A x + b on free rows and x - value on pinned rows.
  Array residual(const Array& x) const {
    Array r = apply(x);
    for (Index p = 0; p < grid_.size(); ++p)
      if (pinned_[p]) r[p] = x[p] - pinned_value_[p];
    return r;
  }

  // Row sums of |a_pq|; 2 / max_p of this bounds the forward-Euler step.
  Eigen::ArrayXd abs_row_sum() const {
    Eigen::ArrayXd s = Eigen::ArrayXd::Zero(grid_.size());
    for (const auto& c : coeff_)
      if (c.size()) s += c.abs().template cast<double>();
    return s;
  }

  template <typename Pred>
  void accumulate(const Array& x, Array& y, Pred use_slot) const {
    const Index n = grid_.size();
    for (int s = 0; s < kSlots; ++s) {
      if (!has(s) || !use_slot(s)) continue;
      const Index o = offset(s);
      const Index lo = std::max<Index>(0, -o);
      const Index len = n - (o < 0 ? -o : o);
      y.segment(lo, len) += coeff_[s].segment(lo, len) * x.segment(lo + o, len);
    }
  }

 private:
  static Scalar real_or_complex(std::complex<double> v) {
    if constexpr (std::is_same_v<Scalar, double>)
      return v.real();
    else
      return Scalar(v);
  }

  Grid grid_;
  std::array<Array, kSlots> coeff_{};
  Array rhs_;
  std::vector<unsigned char> pinned_;
  Array pinned_value_;
};

// Term builders. Each adds w[p] * (term acting on x) to row p.

// d/dx_a (coeff dx/dx_a), face coefficients averaged, mirrored at faces.
template <typename Scalar>
void add_flux_div(StencilOperator<Scalar>& op, const Eigen::ArrayXd& w,
                  const Eigen::ArrayXd& coeff, int axis,
                  const BoxClosure& closure) {
  const Grid& g = op.grid();
  g.require_stencil_axis(axis);
  const Index s = g.stride(axis);
  const int n = g.dim(axis);
  const double inv_h2 = 1.0 / (g.spacing(axis) * g.spacing(axis));
  Index3 up{0, 0, 0}, dn{0, 0, 0};
  up[axis] = 1;
  dn[axis] = -1;
  for (Index p = 0; p < g.size(); ++p) {
    if (w[p] == 0.0) continue;
    const int i = g.unravel(p)[axis];
    const double cp = 0.5 * (coeff[p] + (i < n - 1 ? coeff[p + s] : coeff[p - s]));
    const double cm = 0.5 * (coeff[p] + (i > 0 ? coeff[p - s] : coeff[p + s]));
    op.add(p, up, Scalar(w[p] * cp * inv_h2), closure);
    op.add(p, dn, Scalar(w[p] * cm * inv_h2), closure);
    op.add_centre(p, Scalar(-w[p] * (cp + cm) * inv_h2));
  }
}

// (1/r) d/dr (r coeff dx/dr) in annulus flux form; zero flux through r = 0.
template <typename Scalar>
void add_radial_flux_div(StencilOperator<Scalar>& op, const Eigen::ArrayXd& w,
                         const Eigen::ArrayXd& coeff, const BoxClosure& closure) {
  const Grid& g = op.grid();
  require(g.axisymmetric(), "radial operator needs an axisymmetric grid");
  g.require_stencil_axis(0);
  const Index s = g.stride(0);
  const int n = g.dim(0);
  const double dr = g.spacing(0);
  const bool axis_lo = g.radial_axis_at_lower_face();
  for (Index p = 0; p < g.size(); ++p) {
    if (w[p] == 0.0) continue;
    const int i = g.unravel(p)[0];
    const double r = g.coordinate(0, i);
    const double rp = r + 0.5 * dr;
    const bool on_axis = i == 0 && axis_lo;
    const double rm = on_axis ? 0.0 : r - 0.5 * dr;
    const double scale = 2.0 * w[p] / ((rp * rp - rm * rm) * dr);
    const double cp = 0.5 * (coeff[p] + (i < n - 1 ? coeff[p + s] : coeff[p - s]));
    op.add(p, {1, 0, 0}, Scalar(scale * rp * cp), closure);
    op.add_centre(p, Scalar(-scale * rp * cp));
    if (!on_axis) {
      const double cm = 0.5 * (coeff[p] + (i > 0 ? coeff[p - s] : coeff[p + s]));
      op.add(p, {-1, 0, 0}, Scalar(scale * rm * cm), closure);
      op.add_centre(p, Scalar(-scale * rm * cm));
    }
  }
}

// d/dx_outer (coeff dx/dx_inner) on the wide 2h stencil.
template <typename Scalar>
void add_cross(StencilOperator<Scalar>& op, const Eigen::ArrayXd& w,
               const Eigen::ArrayXd& coeff, int outer, int inner,
               const BoxClosure& closure) {
  const Grid& g = op.grid();
  require(outer != inner, "cross term needs two different axes");
  g.require_stencil_axis(outer);
  g.require_stencil_axis(inner);
  const Index so = g.stride(outer);
  const int no = g.dim(outer);
  const double scale = 1.0 / (4.0 * g.spacing(outer) * g.spacing(inner));
  for (Index p = 0; p < g.size(); ++p) {
    if (w[p] == 0.0) continue;
    const int i = g.unravel(p)[outer];
    const double cp = i < no - 1 ? coeff[p + so] : coeff[p - so];
    const double cm = i > 0 ? coeff[p - so] : coeff[p + so];
    for (int so_sign : {1, -1}) {
      const double c = so_sign > 0 ? cp : cm;
      for (int si_sign : {1, -1}) {
        Index3 d{0, 0, 0};
        d[outer] = so_sign;
        d[inner] = si_sign;
        op.add(p, d, Scalar(w[p] * scale * c * so_sign * si_sign), closure);
      }
    }
  }
}

// d/dx_a (s x), central difference of the product.
template <typename Scalar>
void add_central_first(StencilOperator<Scalar>& op, const Eigen::ArrayXd& w,
                       const Eigen::ArrayXd& s_field, int axis,
                       const BoxClosure& closure) {
  const Grid& g = op.grid();
  g.require_stencil_axis(axis);
  const Index s = g.stride(axis);
  const int n = g.dim(axis);
  const double inv2h = 1.0 / (2.0 * g.spacing(axis));
  Index3 up{0, 0, 0}, dn{0, 0, 0};
  up[axis] = 1;
  dn[axis] = -1;
  for (Index p = 0; p < g.size(); ++p) {
    if (w[p] == 0.0) continue;
    const int i = g.unravel(p)[axis];
    const double sp = i < n - 1 ? s_field[p + s] : s_field[p - s];
    const double sm = i > 0 ? s_field[p - s] : s_field[p + s];
    op.add(p, up, Scalar(w[p] * sp * inv2h), closure);
    op.add(p, dn, Scalar(-w[p] * sm * inv2h), closure);
  }
}

}  // namespace sbm
