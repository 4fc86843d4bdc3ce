#include "sbm/grid.hpp"

#include <algorithm>
#include <cmath>

#include "sbm/error.hpp"

namespace sbm {

std::string to_string(CoordSystem c) {
  return c == CoordSystem::cartesian ? "cartesian" : "axisymmetric_rz";
}

CoordSystem coord_system_from_string(std::string_view s) {
  if (s == "cartesian") return CoordSystem::cartesian;
  if (s == "axisymmetric_rz") return CoordSystem::axisymmetric_rz;
  throw InvalidArgument("unknown coordinate system '" + std::string(s) + "'");
}

Grid::Grid(std::vector<int> dims, std::vector<double> spacing,
           std::vector<double> origin, CoordSystem coords)
    : coords_(coords) {
  require(!dims.empty() && dims.size() <= 3, "grid needs 1 to 3 axes");
  require(spacing.size() == dims.size(), "one spacing per axis required");
  require(origin.empty() || origin.size() == dims.size(),
          "one origin per axis required");
  ndim_ = static_cast<int>(dims.size());
  for (int a = 0; a < ndim_; ++a) {
    require(dims[a] >= 1, "grid dims must be positive");
    require(spacing[a] > 0.0 && std::isfinite(spacing[a]),
            "grid spacing must be positive");
    dims_[a] = dims[a];
    spacing_[a] = spacing[a];
    origin_[a] = origin.empty() ? 0.0 : origin[a];
  }
  if (coords_ == CoordSystem::axisymmetric_rz) {
    require(ndim_ == 2, "axisymmetric grids are 2D (r, z)");
    require(origin_[0] >= 0.0, "radial coordinates must be non-negative");
  }
  strides_ = {0, 0, 0};
  Index s = 1;
  for (int a = ndim_ - 1; a >= 0; --a) {
    strides_[a] = s;
    s *= dims_[a];
  }
  size_ = s;
}

Grid Grid::line(int n, double dx, double x0) { return Grid({n}, {dx}, {x0}); }

Grid Grid::plane(int nx, int ny, double dx, double dy, double x0, double y0) {
  return Grid({nx, ny}, {dx, dy}, {x0, y0});
}

Grid Grid::box(int nx, int ny, int nz, double dx, double dy, double dz) {
  return Grid({nx, ny, nz}, {dx, dy, dz});
}

Grid Grid::axisymmetric(int nr, int nz, double dr, double dz, double r0,
                        double z0) {
  return Grid({nr, nz}, {dr, dz}, {r0, z0}, CoordSystem::axisymmetric_rz);
}

double Grid::min_spacing() const {
  double m = spacing_[0];
  for (int a = 1; a < ndim_; ++a) m = std::min(m, spacing_[a]);
  return m;
}

Index3 Grid::unravel(Index p) const {
  Index3 ijk{0, 0, 0};
  for (int a = 0; a < ndim_; ++a) {
    ijk[a] = static_cast<int>(p / strides_[a]);
    p -= ijk[a] * strides_[a];
  }
  return ijk;
}

std::array<double, 3> Grid::position(Index p) const {
  const Index3 ijk = unravel(p);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < ndim_; ++a) x[a] = coordinate(a, ijk[a]);
  return x;
}

bool Grid::radial_axis_at_lower_face() const {
  return axisymmetric() && origin_[0] <= 0.5 * spacing_[0] * (1.0 + 1e-9);
}

double Grid::node_volume(Index p) const {
  const Index3 ijk = unravel(p);
  double v = 1.0;
  for (int a = 0; a < ndim_; ++a) {
    const int i = ijk[a];
    const int n = dims_[a];
    const double h = spacing_[a];
    if (axisymmetric() && a == 0) {
      const double r = coordinate(0, i);
      double lo = r - 0.5 * h;
      double hi = r + 0.5 * h;
      if (i == 0) lo = radial_axis_at_lower_face() ? std::max(0.0, lo) : r;
      if (i == n - 1 && n > 1) hi = r;
      v *= 0.5 * (hi * hi - lo * lo);
    } else if (n > 1 && (i == 0 || i == n - 1)) {
      v *= 0.5 * h;
    } else {
      v *= h;
    }
  }
  return v;
}

void Grid::require_stencil_axis(int axis) const {
  require(axis >= 0 && axis < ndim_,
          "axis " + std::to_string(axis) + " outside grid dimensionality");
  require(dims_[axis] >= 3, "stencil axis " + std::to_string(axis) +
                                " needs at least 3 nodes");
}

}  // namespace sbm
