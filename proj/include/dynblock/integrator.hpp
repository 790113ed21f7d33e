#pragma once

#include <functional>
#include <limits>

#include "dynblock/fock.hpp"

namespace dynblock {

struct StepControl {
  double rtol = 1e-9;
  double atol = 1e-11;
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-13;
  long max_steps = 50'000'000;
};

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_calls = 0;
};

// Dormand-Prince 5(4) with first-same-as-last reuse, operating directly on
// complex matrices. advance() always lands exactly on the requested time.
class Dopri5 {
 public:
  using Rhs = std::function<void(double t, const OperatorMatrix& y, OperatorMatrix& dydt)>;

  Dopri5(Rhs rhs, StepControl control);

  void advance(OperatorMatrix& y, double& t, double t_target);

  // Call after the state or the right-hand side changed discontinuously.
  void invalidate() { fsal_valid_ = false; }
  void set_max_step(double h) { control_.max_step = h; }

  const StepStats& stats() const noexcept { return stats_; }
  const StepControl& control() const noexcept { return control_; }

 private:
  double error_norm(const OperatorMatrix& y, const OperatorMatrix& y_new) const;
  double initial_step(const OperatorMatrix& y, double t, double span);

  Rhs rhs_;
  StepControl control_;
  StepStats stats_;
  double h_ = 0.0;
  bool fsal_valid_ = false;
  OperatorMatrix k1_, k2_, k3_, k4_, k5_, k6_, k7_, stage_, y_new_, err_;
};

}  // namespace dynblock
