#pragma once

#include <array>
#include <complex>

#include "sbm/grid.hpp"

namespace sbm {

// How a box face completes a stencil that reaches one node past the face.
enum class FaceKind { zero_gradient, fixed_value, fixed_gradient };

struct FaceClosure {
  FaceKind kind = FaceKind::zero_gradient;
  // Face value (fixed_value) or outward normal derivative (fixed_gradient).
  std::complex<double> value = 0.0;

  static FaceClosure zero_gradient() { return {}; }
  static FaceClosure fixed_value(std::complex<double> v) {
    return {FaceKind::fixed_value, v};
  }
  static FaceClosure fixed_gradient(std::complex<double> g) {
    return {FaceKind::fixed_gradient, g};
  }
};

// The ghost value one node past a face, as weight*f[mirror] + constant, where
// mirror is the node one step back inside the box from the face node.
struct GhostRule {
  double weight;
  std::complex<double> constant;
};

inline GhostRule ghost_rule(const FaceClosure& c, double h) {
  switch (c.kind) {
    case FaceKind::zero_gradient:
      return {1.0, 0.0};
    case FaceKind::fixed_value:
      return {-1.0, 2.0 * c.value};
    case FaceKind::fixed_gradient:
      return {1.0, 2.0 * h * c.value};
  }
  return {1.0, 0.0};
}

// Closures for the 2*ndim faces of a grid box. Defaults to zero gradient.
class BoxClosure {
 public:
  BoxClosure() = default;
  static BoxClosure all(const FaceClosure& c) {
    BoxClosure b;
    for (auto& axis : faces_of(b))
      for (auto& f : axis) f = c;
    return b;
  }

  BoxClosure& set(int axis, Side side, const FaceClosure& c) {
    faces_[axis][static_cast<int>(side)] = c;
    return *this;
  }
  BoxClosure& set_axis(int axis, const FaceClosure& c) {
    faces_[axis][0] = c;
    faces_[axis][1] = c;
    return *this;
  }
  const FaceClosure& get(int axis, Side side) const {
    return faces_[axis][static_cast<int>(side)];
  }
  bool pinned(int axis, Side side) const {
    return get(axis, side).kind == FaceKind::fixed_value;
  }

 private:
  static std::array<std::array<FaceClosure, 2>, 3>& faces_of(BoxClosure& b) {
    return b.faces_;
  }
  std::array<std::array<FaceClosure, 2>, 3> faces_{};
};

}  // namespace sbm
