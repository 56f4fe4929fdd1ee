#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ltvreg/signal.h"

namespace ltvreg {

/// One classical RK4 step of y' = f(t, y).
template <class F>
Matrix Rk4Step(const F& f, double t, const Matrix& y, double h) {
  const Matrix k1 = f(t, y);
  const Matrix k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
  const Matrix k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
  const Matrix k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Phi_A(t, s) by RK4 with step at most `step`. Works for t < s too.
Matrix TransitionMatrix(const MatrixSignal& A, double t, double s,
                        double step = 1e-3);

/// Phi_A(t_i, t_0) at every node of `grid`, one RK4 step per grid interval.
std::vector<Matrix> TransitionAlongGrid(const MatrixSignal& A,
                                        const TimeGrid& grid);

/// L_A Y = dY/dt + Y A.
MatrixSignal LieDerivative(const MatrixSignal& A, const MatrixSignal& Y);

/// [Y, L_A Y, ..., L_A^k Y]. Requires smoothness_order(A), (Y) >= k.
std::vector<MatrixSignal> LieChain(const MatrixSignal& A, const MatrixSignal& Y,
                                   int k);

/// Exponential bound ||Phi(t, s)|| <= phi1 exp(-phi2 (t - s)), t >= s.
struct ExponentialBound {
  double phi1{1.0};
  double phi2{0.0};
};

/// Fits an exponential bound by log-linear regression on random (t, s)
/// pairs. The rate is deflated and the constant inflated by 10 percent.
/// With `basis`, the fit is on ||Phi(t, s) basis(s)|| instead.
ExponentialBound FitExponentialBound(
    const MatrixSignal& A, double t0, double t1, std::uint64_t seed,
    int samples = 50, double tau_max = 20.0, double step = 1e-2,
    const std::function<Matrix(double)>& basis = {});

/// 1.1 times the largest ||Phi_A(t, s)|| over random pairs in [t0, t1], both
/// time orders.
double ProbeTransitionSup(const MatrixSignal& A, double t0, double t1,
                          std::uint64_t seed, int samples = 50,
                          double step = 1e-2);

struct Exosystem {
  MatrixSignal S;
  /// Uniform bound on ||Phi_S(t, s)|| in both time directions.
  double phi_bound{1.0};

  int rho() const { return S.rows(); }
  /// Validates S and probes phi_bound on [t0, t1].
  static Exosystem Make(const MatrixSignal& S, double t0, double t1,
                        std::uint64_t seed = 42);
};

/// x' = A x + B u + P w, e = C x + Q w, single input single output.
struct Plant {
  MatrixSignal A, B, C, P, Q;

  int n() const { return A.rows(); }
  int rho() const { return P.cols(); }
  /// Throws std::invalid_argument on inconsistent dimensions.
  void Validate() const;
};

struct RelativeDegree {
  int r{0};
  /// High-frequency gain (L_A^{r-1} C) B.
  MatrixSignal b;
  /// inf over the probe grid of |b|.
  double phi_b{0.0};
  int sign_b{1};
};

/// Detects the uniform relative degree on a grid of at least 2001 points.
/// Throws std::runtime_error when the gain is not bounded away from zero.
RelativeDegree ComputeRelativeDegree(const Plant& plant, double t0, double t1,
                                     double phi_b_min = 1e-6);

/// Observability-type stacks of the regulator equations.
struct Stacks {
  int r{0};
  MatrixSignal b;
  MatrixSignal O_A, O_A_next;    // r x n, 1 x n
  MatrixSignal O_S, O_S_next;    // r x rho, 1 x rho
  MatrixSignal Pcal, Pcal_next;  // r x rho, 1 x rho
  /// A - b^{-1} B O_A_next.
  MatrixSignal M;
  /// -b^{-1} B (O_S_next + Pcal_next) + P.
  MatrixSignal N;
  /// -b^{-1} (O_S_next + Pcal_next).
  MatrixSignal N_out;
  /// -b^{-1} O_A_next, so that R = K_out Pi + N_out.
  MatrixSignal K_out;
};

Stacks AssembleStacks(const Plant& plant, const Exosystem& exo, int r,
                      const MatrixSignal& b);

enum class Target { kA, kB, kC, kP, kQ };
std::string TargetName(Target t);

/// mu_i * E added to one plant matrix.
struct Channel {
  int coord{0};
  Target target{Target::kA};
  MatrixSignal E;
};

/// Parts of a Byrnes-Isidori normal form that a channel can perturb.
enum class BiPart { kAlpha, kBeta, kEta, kB, kPu, kPl, kQ };

struct UncertainPlant {
  Plant nominal;
  std::vector<std::string> coords;
  std::vector<Channel> channels;
  /// Every coordinate ranges over [-mu_box, mu_box] unless coord_box
  /// gives its own radius.
  double mu_box{1.0};
  std::vector<double> coord_box;
  /// Relative degree when the nominal plant is in normal form, 0 otherwise.
  int bi_relative_degree{0};

  int dim_mu() const { return static_cast<int>(coords.size()); }
  int CoordIndex(const std::string& name) const;
  double Box(int coord) const;
  Plant Instantiate(const Vector& mu) const;
  /// All 2^p corners of the box.
  std::vector<Vector> Corners() const;
  /// Adds a channel on a normal-form part. Requires bi_relative_degree > 0.
  void AddBiChannel(int coord, BiPart part, const MatrixSignal& E);
  void Validate() const;
};

/// Normal-form view of a plant already in Byrnes-Isidori coordinates.
struct ByrnesIsidoriView {
  int r{0};
  int n{0};
  MatrixSignal alpha;  // 1 x n, row r of A
  MatrixSignal beta;   // (n-r) x 1
  MatrixSignal eta;    // (n-r) x (n-r)
  MatrixSignal b;      // 1 x 1
  MatrixSignal P_u, P_l, Q;
  ExponentialBound eta_decay;
};

/// Verifies the normal-form zero pattern on a grid and extracts the parts.
/// The decay of eta is fitted on [t0, t1] when n > r and `fit_decay` holds.
ByrnesIsidoriView ExtractByrnesIsidori(const Plant& plant, int r, double t0,
                                       double t1, std::uint64_t seed = 42,
                                       bool fit_decay = true);

/// Places E in a rows x cols zero signal at (r0, c0).
MatrixSignal Embed(const MatrixSignal& E, int rows, int cols, int r0, int c0);

/// T A T^{-1}, T B, C T^{-1}, T P, Q for a constant invertible T.
Plant SimilarityTransform(const Plant& plant, const Matrix& T);

}  // namespace ltvreg
