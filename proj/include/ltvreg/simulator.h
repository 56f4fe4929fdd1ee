#pragma once

#include <optional>
#include <vector>

#include "ltvreg/stabilizer.h"

namespace ltvreg {

/// Plant, exosystem and controller joined into z = (w, x, xi).
struct ClosedLoopSystem {
  Plant plant;
  Exosystem exo;
  Controller controller;
  /// [A, B H_c; G_c C, F_c].
  MatrixSignal A_cl;
  /// [P; G_c Q].
  MatrixSignal forcing;
  /// Generator of the full state z.
  MatrixSignal generator;
  int n{0}, nu{0}, rho{0};
  Vector mu;
};

/// A controller of dimension zero gives the open loop.
ClosedLoopSystem AssembleClosedLoop(const Plant& plant, const Exosystem& exo,
                                    const std::optional<Controller>& controller,
                                    const Vector& mu = {});

struct SimulationTrace {
  TimeGrid grid;
  std::vector<Vector> w, x, xi;
  std::vector<double> u, e;
  Vector mu;
};

/// RK4 of the full state. Throws std::runtime_error with the first crossing
/// time when any state entry exceeds 1e12.
SimulationTrace Simulate(const ClosedLoopSystem& sys, const Vector& w0,
                         const Vector& x0, const Vector& xi0, double t0,
                         double horizon, double step);

struct Metrics {
  double tail_sup_error{0.0};
  /// Only when |e| spans at least three decades.
  std::optional<double> decay_exponent;
  bool bounded{true};
};

Metrics ComputeMetrics(const SimulationTrace& trace, double tail_fraction = 0.2);

/// Numerical rank of the leading m x m Gram matrix for m = 1 .. M, with
/// trapezoidal inner products over `grid`.
struct GramRankReport {
  std::vector<int> ranks;
  std::vector<double> singular_values;  // of the full Gram matrix
};
GramRankReport GramDimensionProbe(const std::vector<std::vector<Matrix>>& family,
                                  const TimeGrid& grid, double rel_tol = 1e-10);

}  // namespace ltvreg
