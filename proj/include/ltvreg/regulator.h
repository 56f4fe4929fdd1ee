#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ltvreg/ltv_core.h"

namespace ltvreg {

enum class RegulatorPath {
  /// Normal-form path when the plant has the normal-form zero pattern.
  kAuto,
  kCoordinateFree,
  kByrnesIsidori,
};

struct RegulatorOptions {
  double t0{0.0};
  double horizon{50.0};
  double step{1e-3};
  /// Negative selects the default washout.
  double washout{-1.0};
  RegulatorPath path{RegulatorPath::kAuto};
  /// Pi(t0) for the coordinate-free path, Pi_l(t0) for the normal-form path.
  std::optional<Matrix> initial;
  /// sup ||Pi|| beyond this multiple of the initial scale counts as overflow.
  double ceiling_factor{1e6};
  std::uint64_t seed{42};
};

/// Bounded solution of the regulator equations on a uniform grid.
struct RegulatorSolution {
  TimeGrid grid;
  int r{0};
  bool normal_form_path{false};
  std::vector<Matrix> Pi, Pi_dot;  // n x rho
  std::vector<Matrix> R, R_dot;    // 1 x rho
  Matrix Pi_initial;
  /// Decay of deviations from the bounded solution.
  ExponentialBound decay;
  bool decay_known{false};
  double washout{0.0};
  /// sup after washout of ||dPi/dt - (A Pi - Pi S + P + B R)||, with dPi/dt
  /// taken from a fourth-order central difference of the grid.
  double residual_re1{0.0};
  /// sup after washout of ||C Pi + Q||.
  double residual_re2{0.0};
  double sup_pi{0.0};
  bool bounded{true};
  std::string diagnostic;

  int washout_index() const;
  /// Hermite-interpolated R(t) on the grid.
  MatrixSignal RSignal() const;
  MatrixSignal PiSignal() const;
};

/// Minimum-norm Pi(t0) with O_A(t0) Pi = -(O_S + Pcal)(t0). Throws when O_A
/// loses row rank at t0.
Matrix SolveInitialValue(const Stacks& stacks, double t0);

/// Integrates the regulator equations. Throws std::runtime_error on
/// overflow ("unbounded solution candidate") or when the output residual
/// after washout exceeds 1e-3.
RegulatorSolution SolveRegulator(const Plant& plant, const Exosystem& exo,
                                 const RegulatorOptions& options = {});

/// Solves eta X - X S = -U for constant matrices by Kronecker vectorisation.
/// Throws std::runtime_error for resonant spectra.
Matrix SylvesterLtiOracle(const Matrix& eta, const Matrix& S, const Matrix& U);

/// Residuals of an arbitrary gridded candidate (Pi, R) from sample index
/// `from` on, using fourth-order central differences for dPi/dt.
struct RegulatorResiduals {
  double re1{0.0};
  double re2{0.0};
};
RegulatorResiduals ComputeResiduals(const Plant& plant, const Exosystem& exo,
                                    const TimeGrid& grid,
                                    const std::vector<Matrix>& Pi,
                                    const std::vector<Matrix>& R, int from);

}  // namespace ltvreg
