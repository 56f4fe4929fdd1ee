#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ltvreg/internal_model.h"

namespace ltvreg {

/// Gains of the high-gain error-feedback controller.
struct HighGainParams {
  double k{1.0};
  double g{2.0};
  /// d_0 ... d_{r-1} of s^r + d_{r-1} s^{r-1} + ... + d_0.
  std::vector<double> d;
  /// 1 x (r-1), places the poles of the Brunovsky pair of order r - 1.
  Matrix K;
  int sign_b{1};
};

/// Coefficients of (s + 1)^r, lowest degree first.
std::vector<double> DefaultHurwitz(int r);

/// K with eig(A_b + B_b K) = poles for the Brunovsky pair of order r - 1.
/// Empty (1 x 0) when r = 1. Throws std::invalid_argument for r < 1, a
/// wrong pole count or a non-negative pole.
Matrix BrunovskyGain(int r, const std::vector<double>& poles);

/// Poles {-1, ..., -(r - 1)}.
Matrix DefaultBrunovskyGain(int r);

/// Throws std::invalid_argument unless d is Hurwitz, g > 1, k >= 0 and
/// A_b + B_b K is Hurwitz.
void ValidateHighGain(const HighGainParams& p, int r);

/// Controller xi' = F xi + G e, u = H xi with xi = (xi1 in R^r, xi2 in R^nu).
struct Controller {
  MatrixSignal F, G, H;
  int r{0};
  int nu_im{0};
  Matrix M_g, L_g;
  HighGainParams params;

  int dim() const { return r + nu_im; }
};

/// Assembles
///   [M_g, 0; -k sign(b) G_im (-K 1), F_im + G_im H_im],  [L_g; 0],
///   [-k sign(b) (-K 1), H_im]
/// around a canonical realization.
Controller BuildController(const CanonicalRealization& cr, int r,
                           const HighGainParams& params);

/// Decay estimates of x' = A(t) x from random unit initial states.
struct UasReport {
  bool pass{false};
  double horizon{0.0};
  std::vector<double> exponents;
  double worst_exponent{0.0};
  /// max over trials of ||x(T)|| / ||x(t0)||.
  double worst_final_ratio{0.0};
  /// Set when some trial crossed 1e12.
  bool diverged{false};
};

struct UasOptions {
  double t0{0.0};
  int trials{8};
  double step{1e-3};
  double pilot{10.0};
  double max_horizon{400.0};
  std::uint64_t seed{42};
};

/// Pilot run to estimate the rate, then horizon min(40 / |rate|, max). Pass
/// iff every fitted exponent is <= -1e-3 and every final norm is <= 1e-4 of
/// the initial one.
UasReport ProbeUas(const MatrixSignal& A, const UasOptions& opt = {});

/// Slope of log ||x|| against t from the envelope over 50 equal windows.
double EnvelopeExponent(const std::vector<double>& t, const std::vector<double>& norms);

struct AutotuneResult {
  HighGainParams params;
  int doublings{0};
  /// Worst exponent at each attempt.
  std::vector<double> history;
};

/// Doubles k, then g, alternately until the unforced closed loop from
/// `factory` passes the UAS probe at every mu in `mus`. Throws
/// std::runtime_error naming the best exponent when the budget runs out.
AutotuneResult AutotuneGains(
    const std::function<MatrixSignal(const HighGainParams&, const Vector&)>& factory,
    const HighGainParams& start, const std::vector<Vector>& mus,
    int max_doublings = 8, const UasOptions& opt = {});

}  // namespace ltvreg
