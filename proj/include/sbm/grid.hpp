#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace sbm {

using Index = Eigen::Index;
using Index3 = std::array<int, 3>;

enum class CoordSystem { cartesian, axisymmetric_rz };

std::string to_string(CoordSystem c);
CoordSystem coord_system_from_string(std::string_view s);

enum class Side { lo = 0, hi = 1 };

// Node-centred structured grid with up to three axes. Node p has coordinates
// origin[a] + i_a*spacing[a]; storage is row-major with the last axis fastest.
// Axisymmetric grids are 2D with axis order (r, z).
class Grid {
 public:
  Grid() = default;
  Grid(std::vector<int> dims, std::vector<double> spacing,
       std::vector<double> origin = {},
       CoordSystem coords = CoordSystem::cartesian);

  static Grid line(int n, double dx, double x0 = 0.0);
  static Grid plane(int nx, int ny, double dx, double dy, double x0 = 0.0,
                    double y0 = 0.0);
  static Grid box(int nx, int ny, int nz, double dx, double dy, double dz);
  static Grid axisymmetric(int nr, int nz, double dr, double dz, double r0,
                           double z0 = 0.0);

  int ndim() const { return ndim_; }
  int dim(int axis) const { return dims_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double origin(int axis) const { return origin_[axis]; }
  CoordSystem coords() const { return coords_; }
  bool axisymmetric() const { return coords_ == CoordSystem::axisymmetric_rz; }

  Index size() const { return size_; }
  Index stride(int axis) const { return strides_[axis]; }
  double coordinate(int axis, int i) const {
    return origin_[axis] + i * spacing_[axis];
  }
  double min_spacing() const;

  Index ravel(const Index3& ijk) const {
    return ijk[0] * strides_[0] + ijk[1] * strides_[1] + ijk[2] * strides_[2];
  }
  Index3 unravel(Index p) const;
  std::array<double, 3> position(Index p) const;

  // Dual-cell volume of node p: half widths on box faces, so the sum over all
  // nodes equals the box volume. Axisymmetric grids use annulus areas (the
  // 2*pi factor is dropped) and give the axis-adjacent node a full cell.
  double node_volume(Index p) const;

  // True when the lowest radial node sits within half a cell of r = 0, so the
  // lower radial face is the symmetry axis rather than a box face.
  bool radial_axis_at_lower_face() const;

  // Throws unless every axis in [0, ndim) has at least 3 nodes.
  void require_stencil_axis(int axis) const;

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.ndim_ == b.ndim_ && a.dims_ == b.dims_ &&
           a.spacing_ == b.spacing_ && a.origin_ == b.origin_ &&
           a.coords_ == b.coords_;
  }

 private:
  int ndim_ = 1;
  Index3 dims_{1, 1, 1};
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::array<double, 3> origin_{0.0, 0.0, 0.0};
  CoordSystem coords_ = CoordSystem::cartesian;
  std::array<Index, 3> strides_{1, 1, 1};
  Index size_ = 1;
};

}  // namespace sbm
