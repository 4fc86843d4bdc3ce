#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>

#include "sbm/error.hpp"

namespace sbm {

// Solves lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i] in place
// by forward elimination and back substitution (lower[0] and upper[n-1] are
// ignored). `work` must hold n entries. Throws on a zero pivot.
template <typename Scalar>
void solve_tridiagonal(const Scalar* lower, const Scalar* diag,
                       const Scalar* upper, Scalar* rhs, Scalar* work, int n) {
  using std::abs;
  Scalar pivot = diag[0];
  if (abs(pivot) == 0.0) throw SolverError("tridiagonal solve: zero pivot");
  rhs[0] /= pivot;
  for (int i = 1; i < n; ++i) {
    work[i] = upper[i - 1] / pivot;
    pivot = diag[i] - lower[i] * work[i];
    if (abs(pivot) == 0.0) throw SolverError("tridiagonal solve: zero pivot");
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
  }
  for (int i = n - 2; i >= 0; --i) rhs[i] -= work[i + 1] * rhs[i + 1];
}

template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> solve_tridiagonal(
    const Eigen::Array<Scalar, Eigen::Dynamic, 1>& lower,
    const Eigen::Array<Scalar, Eigen::Dynamic, 1>& diag,
    const Eigen::Array<Scalar, Eigen::Dynamic, 1>& upper,
    Eigen::Array<Scalar, Eigen::Dynamic, 1> rhs) {
  const int n = static_cast<int>(diag.size());
  require(lower.size() == n && upper.size() == n && rhs.size() == n,
          "tridiagonal: band sizes differ");
  Eigen::Array<Scalar, Eigen::Dynamic, 1> work(n);
  solve_tridiagonal(lower.data(), diag.data(), upper.data(), rhs.data(),
                    work.data(), n);
  return rhs;
}

}  // namespace sbm
