#pragma once

#include <vector>

#include "dynblock/fock.hpp"

namespace dynblock {

// Mode parameters in units of the decay rate (hbar = gamma = 1).
struct ModeParams {
  double E = 0.0;      // detuning of the mode from the laser
  double alpha = 0.0;  // Kerr strength, >= 0

  void validate() const;
};

enum class PulseShape { Delta, Gaussian };

// One pulse of the train. `area` is the time-integrated amplitude; for a
// Gaussian the envelope is area * exp(-(t-t0)^2 / 2 sigma^2) / (sigma sqrt(2 pi)),
// truncated at +-kGaussianCutoff sigma.
struct PulseEvent {
  double time = 0.0;
  Complex area{0.0, 0.0};
  PulseShape shape = PulseShape::Delta;
  double sigma = 0.0;

  double support_begin() const;
  double support_end() const;
};

inline constexpr double kGaussianCutoff = 6.0;

// Continuous amplitude P0 plus a time-ordered pulse train.
struct DriveSchedule {
  Complex P0{0.0, 0.0};
  std::vector<PulseEvent> pulses;
  double period = 1.0;

  // Pulses of area P1 at times first, first + T, ... (count of them).
  static DriveSchedule periodic(Complex P0, Complex P1, double period, int count,
                                PulseShape shape = PulseShape::Delta, double sigma = 0.0,
                                double first = -1.0);
  static DriveSchedule continuous(Complex P0, double period = 1.0);

  int pulse_count() const { return static_cast<int>(pulses.size()); }
  // Smooth part of P(t): P0 plus every Gaussian envelope active at t.
  Complex amplitude(double t) const;
  bool has_gaussian() const;
  bool is_real() const;
  void validate() const;
};

}  // namespace dynblock
