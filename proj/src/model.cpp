#include "dynblock/model.hpp"

#include <cmath>
#include <numbers>

#include "dynblock/errors.hpp"

namespace dynblock {

namespace {
bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }
}  // namespace

void ModeParams::validate() const {
  if (!std::isfinite(E) || !std::isfinite(alpha)) {
    throw InvalidArgument("mode parameters must be finite");
  }
  if (alpha < 0.0) throw InvalidArgument("Kerr strength alpha must be >= 0");
}

double PulseEvent::support_begin() const {
  return shape == PulseShape::Gaussian ? time - kGaussianCutoff * sigma : time;
}

double PulseEvent::support_end() const {
  return shape == PulseShape::Gaussian ? time + kGaussianCutoff * sigma : time;
}

DriveSchedule DriveSchedule::periodic(Complex P0, Complex P1, double period, int count,
                                      PulseShape shape, double sigma, double first) {
  DriveSchedule s;
  s.P0 = P0;
  s.period = period;
  if (first < 0.0) first = period;
  for (int m = 0; m < count; ++m) {
    s.pulses.push_back({first + m * period, P1, shape, sigma});
  }
  s.validate();
  return s;
}

DriveSchedule DriveSchedule::continuous(Complex P0, double period) {
  DriveSchedule s;
  s.P0 = P0;
  s.period = period;
  s.validate();
  return s;
}

Complex DriveSchedule::amplitude(double t) const {
  Complex p = P0;
  for (const auto& pulse : pulses) {
    if (pulse.shape != PulseShape::Gaussian) continue;
    const double x = t - pulse.time;
    if (std::abs(x) > kGaussianCutoff * pulse.sigma) continue;
    p += pulse.area * std::exp(-0.5 * x * x / (pulse.sigma * pulse.sigma)) /
         (pulse.sigma * std::sqrt(2.0 * std::numbers::pi));
  }
  return p;
}

bool DriveSchedule::has_gaussian() const {
  for (const auto& p : pulses)
    if (p.shape == PulseShape::Gaussian) return true;
  return false;
}

bool DriveSchedule::is_real() const {
  if (P0.imag() != 0.0) return false;
  for (const auto& p : pulses)
    if (p.area.imag() != 0.0) return false;
  return true;
}

void DriveSchedule::validate() const {
  if (!(period > 0.0) || !std::isfinite(period)) throw InvalidArgument("period T must be > 0");
  if (!finite(P0)) throw InvalidArgument("continuous amplitude P0 must be finite");
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    const auto& p = pulses[i];
    if (!finite(p.area) || !std::isfinite(p.time)) {
      throw InvalidArgument("pulse " + std::to_string(i) + " has a non-finite field");
    }
    if (p.shape == PulseShape::Gaussian && !(p.sigma > 0.0)) {
      throw InvalidArgument("gaussian pulse " + std::to_string(i) + " needs sigma > 0");
    }
    if (i > 0 && !(p.time > pulses[i - 1].time)) {
      throw InvalidArgument("pulse times must be strictly increasing");
    }
  }
}

}  // namespace dynblock
