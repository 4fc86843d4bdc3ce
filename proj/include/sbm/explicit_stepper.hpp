#pragma once

#include <vector>

#include "sbm/stencil_operator.hpp"

namespace sbm {

// Forward-Euler bound 2 / max_p sum_q |A_pq| of a rate operator.
double stability_bound(const StencilOperator<double>& op);

// Forward Euler on dC/dt = A C + b with the operator assembled once. Nodes
// pinned in the operator keep their value.
class ExplicitStepper {
 public:
  // dt_request > 0 is used as given (and must respect the stability bound);
  // dt_request = 0 selects safety times the bound.
  ExplicitStepper(StencilOperator<double> op, double dt_request, double safety);

  double dt() const { return dt_; }
  double max_stable_dt() const { return dt_max_; }
  long steps() const { return steps_; }
  const StencilOperator<double>& rate_operator() const { return op_; }

  // Restricts the rate reported by step() to the flagged nodes.
  void set_monitor(const std::vector<unsigned char>& monitor);

  // Advances C by one step and returns max |dC/dt| over the monitored nodes
  // (all nodes by default). Throws SolverError on non-finite values.
  double step(Eigen::ArrayXd& C);

 private:
  StencilOperator<double> op_;
  std::vector<int> slots_;
  std::vector<Index> offsets_;
  Eigen::ArrayXd monitor_;
  Eigen::ArrayXd next_, block_;
  double dt_ = 0.0;
  double dt_max_ = 0.0;
  long steps_ = 0;
};

}  // namespace sbm
