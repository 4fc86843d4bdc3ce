#include "sbm/explicit_stepper.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace sbm {

namespace {
constexpr Index kBlock = 256;
}

double stability_bound(const StencilOperator<double>& op) {
  const double m = op.abs_row_sum().maxCoeff();
  return m > 0.0 ? 2.0 / m : std::numeric_limits<double>::infinity();
}

ExplicitStepper::ExplicitStepper(StencilOperator<double> op, double dt_request, double safety)
    : op_(std::move(op)) {
  require(safety > 0.0 && safety <= 1.0, "explicit stepper: safety must lie in (0, 1]");
  require(dt_request >= 0.0, "explicit stepper: dt must be positive (or 0 for automatic)");
  dt_max_ = stability_bound(op_);
  if (dt_request > 0.0) {
    if (dt_request > dt_max_) {
      std::ostringstream msg;
      msg << "explicit stepper: dt = " << dt_request
          << " exceeds the stability bound; use dt <= " << safety * dt_max_;
      throw InvalidArgument(msg.str());
    }
    dt_ = dt_request;
  } else {
    require(std::isfinite(dt_max_), "explicit stepper: no dynamics to bound dt; set dt");
    dt_ = safety * dt_max_;
  }
  // Slots that hold only zeros (e.g. cross terms on an axis-aligned
  // interface) are skipped.
  for (int s : op_.slots()) {
    if ((op_.coeff(s) == 0.0).all()) continue;
    slots_.push_back(s);
    offsets_.push_back(op_.offset(s));
  }
  monitor_ = Eigen::ArrayXd::Ones(op_.grid().size());
  block_.resize(kBlock);
}

void ExplicitStepper::set_monitor(const std::vector<unsigned char>& monitor) {
  require(static_cast<Index>(monitor.size()) == op_.grid().size(),
          "explicit stepper: monitor size mismatch");
  for (Index p = 0; p < monitor_.size(); ++p) monitor_[p] = monitor[p] ? 1.0 : 0.0;
}

double ExplicitStepper::step(Eigen::ArrayXd& C) {
  // Cache-sized blocks keep the rate accumulation and the update in L1.
  const Index n = C.size();
  require(n == op_.grid().size(), "explicit stepper: field size mismatch");
  next_.resize(n);
  double m = 0.0;
  for (Index b0 = 0; b0 < n; b0 += kBlock) {
    const Index len = std::min(kBlock, n - b0);
    auto r = block_.head(len);
    r = op_.rhs().segment(b0, len);
    for (std::size_t k = 0; k < slots_.size(); ++k) {
      const Index o = offsets_[k];
      const Index lo = std::max(b0, -o);
      const Index hi = std::min(b0 + len, n - std::max<Index>(o, 0));
      if (hi <= lo) continue;
      r.segment(lo - b0, hi - lo) +=
          op_.coeff(slots_[k]).segment(lo, hi - lo) * C.segment(lo + o, hi - lo);
    }
    next_.segment(b0, len) = C.segment(b0, len) + dt_ * r;
    m = std::max(m, (r.abs() * monitor_.segment(b0, len)).maxCoeff());
  }
  C.swap(next_);
  ++steps_;
  if (!std::isfinite(m) || ((steps_ & 1023) == 0 && !C.isFinite().all())) {
    std::ostringstream msg;
    msg << "explicit stepper: non-finite value at step " << steps_;
    throw SolverError(msg.str());
  }
  return m;
}

}  // namespace sbm
