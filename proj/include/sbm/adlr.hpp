#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "sbm/stencil_operator.hpp"

namespace sbm {

struct AdlrOptions {
  double tol = 1e-5;  // relative residual |A x + b| / |diag x|
  int max_sweeps = 20000;
};

template <typename Scalar>
struct AdlrResult {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> x;  // best iterate
  double residual = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> history;  // relative residual after each sweep
};

// Alternating line relaxation for A x + b = 0 on free rows and x = value on
// pinned rows. A sweep solves the tridiagonal line systems along axis 0, then
// 1, then 2. Neighbours along the other axes take their latest values;
// diagonal (cross) couplings are lagged at the start of the sweep. Rows with
// no coupling at all are held at zero. The operator is referenced, and its
// constant is read at every sweep, so callers may update it in between.
template <typename Scalar>
class LineRelaxation {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Op = StencilOperator<Scalar>;

  explicit LineRelaxation(const Op& op) : op_(op) {
    const Index n = op.grid().size();
    require(op.has(Op::kCentre), "adlr: operator has no diagonal");
    fixed_.assign(n, 0);
    fixed_value_ = Array::Zero(n);
    const std::vector<int> slots = op.slots();
    for (Index p = 0; p < n; ++p) {
      if (op.pinned(p)) {
        fixed_[p] = 1;
        fixed_value_[p] = op.pinned_value(p);
        continue;
      }
      bool empty = op.rhs()[p] == Scalar(0);
      for (int s : slots) empty = empty && op.coeff(s)[p] == Scalar(0);
      if (empty) fixed_[p] = 1;
    }
    const Array& diag = op.coeff(Op::kCentre);
    scale_.resize(n);
    for (Index p = 0; p < n; ++p) scale_[p] = fixed_[p] ? 1.0 : std::abs(diag[p]);
    const Grid& g = op.grid();
    for (int a = 0; a < g.ndim(); ++a)
      for (Index p = 0; p < n; ++p)
        if (g.unravel(p)[a] == 0) starts_[a].push_back(p);
  }

  bool fixed(Index p) const { return fixed_[p] != 0; }
  const Eigen::ArrayXd& scale() const { return scale_; }

  void hold_fixed(Array& x) const {
    for (Index p = 0; p < x.size(); ++p)
      if (fixed_[p]) x[p] = fixed_value_[p];
  }

  // Residual with pinned rows replaced by x - value.
  Array residual(const Array& x) const {
    Array r = op_.apply(x);
    for (Index p = 0; p < x.size(); ++p)
      if (fixed_[p]) r[p] = x[p] - fixed_value_[p];
    return r;
  }

  double relative_residual(const Array& x) const {
    const double den = (scale_ * x.abs()).matrix().norm();
    const double num = residual(x).abs().matrix().norm();
    return den > 0.0 ? num / den : num;
  }

  void sweep(Array& x) {
    const Grid& g = op_.grid();
    const Index n = g.size();
    const Array& diag = op_.coeff(Op::kCentre);
    cross_ = Array::Zero(n);
    op_.accumulate(x, cross_, [&](int s) { return s != Op::kCentre && !is_pure(s); });
    for (int a = 0; a < g.ndim(); ++a) {
      const int s_up = axis_slot(a, 1), s_dn = axis_slot(a, -1);
      others_ = Array::Zero(n);
      op_.accumulate(x, others_, [&](int s) {
        return is_pure(s) && s != s_up && s != s_dn;
      });
      rhs_ = -op_.rhs() - cross_ - others_;
      const int len = g.dim(a);
      const Index stride = g.stride(a);
      lo_.assign(len, Scalar(0));
      di_.assign(len, Scalar(0));
      up_.assign(len, Scalar(0));
      b_.assign(len, Scalar(0));
      work_.assign(len, Scalar(0));
      const bool has_up = op_.has(s_up), has_dn = op_.has(s_dn);
      for (Index start : starts_[a]) {
        for (int i = 0; i < len; ++i) {
          const Index p = start + i * stride;
          if (fixed_[p]) {
            lo_[i] = up_[i] = Scalar(0);
            di_[i] = Scalar(1);
            b_[i] = fixed_value_[p];
          } else {
            lo_[i] = has_dn ? op_.coeff(s_dn)[p] : Scalar(0);
            up_[i] = has_up ? op_.coeff(s_up)[p] : Scalar(0);
            di_[i] = diag[p];
            b_[i] = rhs_[p];
          }
        }
        try {
          solve_tridiagonal(lo_.data(), di_.data(), up_.data(), b_.data(), work_.data(), len);
        } catch (const SolverError&) {
          throw SolverError("adlr: singular line system along axis " + std::to_string(a));
        }
        for (int i = 0; i < len; ++i) x[start + i * stride] = b_[i];
      }
    }
    if (!x.isFinite().all()) throw SolverError("adlr: non-finite iterate");
  }

 private:
  static int axis_slot(int a, int sign) {
    Index3 d{0, 0, 0};
    d[a] = sign;
    return Op::slot(d);
  }
  static bool is_pure(int s) {
    const Index3 d = Op::displacement(s);
    return std::abs(d[0]) + std::abs(d[1]) + std::abs(d[2]) == 1;
  }

  const Op& op_;
  std::vector<unsigned char> fixed_;
  Array fixed_value_;
  Eigen::ArrayXd scale_;
  std::vector<Index> starts_[3];
  Array cross_, others_, rhs_;
  std::vector<Scalar> lo_, di_, up_, b_, work_;
};

// Iterates LineRelaxation sweeps from x until the relative residual
// |A x + b| / |diag| |x| drops to tol (pinned rows scaled by 1).
template <typename Scalar>
AdlrResult<Scalar> solve_adlr(const StencilOperator<Scalar>& op,
                              Eigen::Array<Scalar, Eigen::Dynamic, 1> x,
                              const AdlrOptions& options = {}) {
  require(x.size() == op.grid().size(), "adlr: initial guess has the wrong size");
  require(options.tol > 0.0 && options.max_sweeps > 0, "adlr: bad options");
  LineRelaxation<Scalar> relax(op);
  relax.hold_fixed(x);

  AdlrResult<Scalar> out;
  out.x = x;
  out.residual = relax.relative_residual(x);
  if (out.residual <= options.tol) {
    out.converged = true;
    return out;
  }
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    relax.sweep(x);
    const double res = relax.relative_residual(x);
    out.history.push_back(res);
    out.sweeps = sweep;
    if (res < out.residual) {
      out.residual = res;
      out.x = x;
    }
    if (res <= options.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace sbm
