#pragma once

#include <Eigen/Core>
#include <complex>
#include <utility>
#include <vector>

#include "sbm/error.hpp"
#include "sbm/grid.hpp"

namespace sbm {

// Values on grid nodes in the grid's storage order. Scalar is double or
// std::complex<double>.
template <typename Scalar>
class Field {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Field() = default;
  explicit Field(Grid grid, Scalar fill = Scalar(0))
      : grid_(std::move(grid)), values_(Array::Constant(grid_.size(), fill)) {}
  Field(Grid grid, Array values) : grid_(std::move(grid)), values_(std::move(values)) {
    require(values_.size() == grid_.size(), "value count must match grid size");
  }

  // Sample f(x) where x is the node position (unused axes are 0).
  template <typename F>
  static Field from_function(const Grid& grid, F&& f) {
    Field out(grid);
    for (Index p = 0; p < grid.size(); ++p) out.values_[p] = f(grid.position(p));
    return out;
  }

  const Grid& grid() const { return grid_; }
  Array& values() { return values_; }
  const Array& values() const { return values_; }
  Index size() const { return values_.size(); }

  Scalar& operator[](Index p) { return values_[p]; }
  const Scalar& operator[](Index p) const { return values_[p]; }
  Scalar& at(int i, int j = 0, int k = 0) { return values_[grid_.ravel({i, j, k})]; }
  const Scalar& at(int i, int j = 0, int k = 0) const {
    return values_[grid_.ravel({i, j, k})];
  }

  bool all_finite() const { return values_.isFinite().all(); }

 private:
  Grid grid_;
  Array values_;
};

using ScalarField = Field<double>;
using ComplexScalarField = Field<std::complex<double>>;

// One real array per grid axis.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& grid)
      : grid_(grid), comps_(grid.ndim(), Eigen::ArrayXd::Zero(grid.size())) {}

  const Grid& grid() const { return grid_; }
  int ncomp() const { return static_cast<int>(comps_.size()); }
  Eigen::ArrayXd& operator()(int c) { return comps_[c]; }
  const Eigen::ArrayXd& operator()(int c) const { return comps_[c]; }
  ScalarField component(int c) const { return ScalarField(grid_, comps_[c]); }

  Eigen::ArrayXd norm() const {
    Eigen::ArrayXd s = Eigen::ArrayXd::Zero(grid_.size());
    for (const auto& c : comps_) s += c.square();
    return s.sqrt();
  }

 private:
  Grid grid_;
  std::vector<Eigen::ArrayXd> comps_;
};

// Symmetric rank-2 tensor with d(d+1)/2 stored components: diagonal entries
// first, then off-diagonals (yz, xz, xy in 3D; xy in 2D).
class SymTensorField {
 public:
  SymTensorField() = default;
  explicit SymTensorField(const Grid& grid)
      : grid_(grid),
        comps_(grid.ndim() * (grid.ndim() + 1) / 2,
               Eigen::ArrayXd::Zero(grid.size())) {}

  const Grid& grid() const { return grid_; }
  int dim() const { return grid_.ndim(); }
  int ncomp() const { return static_cast<int>(comps_.size()); }

  static int slot(int d, int i, int j) {
    if (i == j) return i;
    if (d == 2) return 2;
    return 6 - i - j;  // (1,2)->3, (0,2)->4, (0,1)->5
  }
  Eigen::ArrayXd& operator()(int i, int j) { return comps_[slot(dim(), i, j)]; }
  const Eigen::ArrayXd& operator()(int i, int j) const {
    return comps_[slot(dim(), i, j)];
  }
  Eigen::ArrayXd trace() const {
    Eigen::ArrayXd t = Eigen::ArrayXd::Zero(grid_.size());
    for (int i = 0; i < dim(); ++i) t += comps_[i];
    return t;
  }

 private:
  Grid grid_;
  std::vector<Eigen::ArrayXd> comps_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  require(a == b, std::string(what) + ": fields live on different grids");
}

}  // namespace sbm
