#include "dynblock/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "dynblock/errors.hpp"

namespace dynblock {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// fifth-order minus embedded fourth-order weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

}  // namespace

Dopri5::Dopri5(Rhs rhs, StepControl control) : rhs_(std::move(rhs)), control_(control) {
  if (!(control_.rtol > 0.0) || !(control_.atol > 0.0)) {
    throw InvalidArgument("integrator tolerances must be positive");
  }
}

double Dopri5::error_norm(const OperatorMatrix& y, const OperatorMatrix& y_new) const {
  const auto scale =
      (control_.atol + control_.rtol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).eval();
  const double sum = (err_.cwiseAbs().array() / scale).square().sum();
  return std::sqrt(sum / static_cast<double>(y.size()));
}

double Dopri5::initial_step(const OperatorMatrix& y, double t, double span) {
  // Hairer-Norsett-Wanner starting step heuristic.
  rhs_(t, y, k1_);
  stats_.rhs_calls++;
  fsal_valid_ = true;
  const auto scale = (control_.atol + control_.rtol * y.cwiseAbs().array()).eval();
  const double d0 = std::sqrt((y.cwiseAbs().array() / scale).square().mean());
  const double d1 = std::sqrt((k1_.cwiseAbs().array() / scale).square().mean());
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  stage_ = y + h0 * k1_;
  rhs_(t + h0, stage_, k2_);
  stats_.rhs_calls++;
  const double d2 =
      std::sqrt(((k2_ - k1_).cwiseAbs().array() / scale).square().mean()) / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, control_.max_step});
}

void Dopri5::advance(OperatorMatrix& y, double& t, double t_target) {
  if (t_target < t) throw InvalidArgument("Dopri5 integrates forward only");
  if (t_target == t) return;

  if (k1_.rows() != y.rows() || k1_.cols() != y.cols()) {
    for (auto* m : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &stage_, &y_new_, &err_}) {
      m->resize(y.rows(), y.cols());
    }
    fsal_valid_ = false;
  }
  if (h_ <= 0.0) h_ = initial_step(y, t, t_target - t);
  if (!fsal_valid_) {
    rhs_(t, y, k1_);
    stats_.rhs_calls++;
    fsal_valid_ = true;
  }

  const double span_eps = 1e-12 * std::max(1.0, std::abs(t_target));
  while (t < t_target) {
    if (stats_.accepted + stats_.rejected > control_.max_steps) {
      throw ConvergenceFailure("Dopri5 exceeded the step budget at t=" + std::to_string(t));
    }
    const double remaining = t_target - t;
    double h = std::min(h_, control_.max_step);
    const bool last = h >= remaining - span_eps;
    if (last) h = remaining;

    stage_.noalias() = y + h * (a21 * k1_);
    rhs_(t + c2 * h, stage_, k2_);
    stage_.noalias() = y + h * (a31 * k1_ + a32 * k2_);
    rhs_(t + c3 * h, stage_, k3_);
    stage_.noalias() = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    rhs_(t + c4 * h, stage_, k4_);
    stage_.noalias() = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    rhs_(t + c5 * h, stage_, k5_);
    stage_.noalias() = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    rhs_(t + h, stage_, k6_);
    y_new_.noalias() = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    rhs_(t + h, y_new_, k7_);
    stats_.rhs_calls += 6;
    err_.noalias() = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

    const double err = error_norm(y, y_new_);
    if (!std::isfinite(err)) {
      throw ConvergenceFailure("Dopri5 produced a non-finite error estimate at t=" +
                               std::to_string(t));
    }
    const double factor =
        err == 0.0 ? kMaxFactor
                   : std::clamp(kSafety * std::pow(err, -0.2), kMinFactor, kMaxFactor);
    if (err <= 1.0) {
      stats_.accepted++;
      y.swap(y_new_);
      k1_.swap(k7_);
      t = last ? t_target : t + h;
      // A step shortened to land on the target says nothing about the
      // natural step size, so keep the larger proposal.
      const double proposal = h * factor;
      h_ = last ? std::max(h_, proposal) : proposal;
    } else {
      stats_.rejected++;
      h_ = h * std::max(factor, kMinFactor);
      if (h_ < control_.min_step) {
        throw ConvergenceFailure("Dopri5 step size underflow at t=" + std::to_string(t));
      }
    }
  }
}

}  // namespace dynblock
