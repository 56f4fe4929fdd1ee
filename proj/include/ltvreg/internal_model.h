#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ltvreg/ltv_core.h"
#include "ltvreg/regulator.h"

namespace ltvreg {

/// Exponent vector of a monomial in the uncertain parameters.
using Monomial = std::vector<int>;

/// Graded-lexicographic order: total degree first, then larger leading
/// exponents first.
bool GradedLexLess(const Monomial& a, const Monomial& b);
double EvalMonomial(const Monomial& m, const Vector& mu);
std::string MonomialName(const Monomial& m, const std::vector<std::string>& coords);

/// Pair (F, H) with R(t, mu) Phi_S(t, t0) = H(t) Phi_F(t, t0) Sigma(t0, mu).
struct InternalModel {
  MatrixSignal F;  // nu x nu
  MatrixSignal H;  // 1 x nu
  int rho{0};
  double t0{0.0};
  std::string provenance;
  /// Block models: monomial of each rho-sized block of the state.
  std::vector<Monomial> monomials;
  std::vector<std::string> coords;
  /// Sigma(t0, mu), nu x rho.
  std::function<Matrix(const Vector&)> sigma_init;

  int nu() const { return F.rows(); }
};

/// F = S, H = R_0, Sigma = I.
InternalModel NominalIM(const MatrixSignal& R0, const MatrixSignal& S,
                        double t0 = 0.0);

/// F = I kron S, H = [R_0, R_1, ..., R_p], Sigma = [1; mu] kron I.
InternalModel InteractionRobustIM(const MatrixSignal& R0,
                                  const std::vector<MatrixSignal>& R_mu,
                                  const MatrixSignal& S,
                                  const std::vector<std::string>& coords,
                                  double t0 = 0.0);

/// Affine components of R for a plant whose uncertainty enters only P and
/// Q. Throws std::invalid_argument for other channels and
/// std::runtime_error when R fails an affinity probe.
struct InteractionComponents {
  RegulatorSolution nominal;
  std::vector<MatrixSignal> R_mu;
};
InteractionComponents SolveInteractionComponents(const UncertainPlant& up,
                                                 const Exosystem& exo,
                                                 const RegulatorOptions& opt);

/// Certificate of the truncated plant-uncertainty expansion.
struct ApproxIMReport {
  int k_b{0};
  int k_eta{0};
  double bound_R{0.0};
  double phi_prime{0.0};
  double g1{0.0}, N_b{0.0}, phi_b{0.0};
  double g2{0.0}, N_eta{0.0};
  double phi1{0.0}, phi2{0.0}, phi_S{0.0}, phi_U{0.0};
  std::vector<Monomial> monomials;
};

struct PlantApproxOptions {
  int k_b{0};
  int k_eta{0};
  double t0{0.0};
  double horizon{50.0};
  double step{1e-3};
  std::uint64_t seed{42};
};

/// Truncated expansion of R(t, mu) in the normal-form channels. Throws
/// std::runtime_error with the required box shrink factor when the
/// smallness conditions fail.
struct PlantApproxResult {
  InternalModel im;
  ApproxIMReport report;
  TimeGrid grid;
  std::vector<MatrixSignal> R_blocks;
};
PlantApproxResult PlantApproxIM(const UncertainPlant& up, const Exosystem& exo,
                                const PlantApproxOptions& opt);

/// Tail bounds used by the certificate.
double NeumannTailBound(double phi_b, double g1_Nb, int k);
double PeanoBakerTailBound(double phi1, double phi2, double phi3, double tau,
                           int k);

/// sup over the grid and the listed mu of ||R(t, mu) - H(t) Sigma(mu)|| for
/// block models, with R from the normal-form regulator solver.
double MeasureApproxError(const InternalModel& im, const UncertainPlant& up,
                          const Exosystem& exo, const std::vector<Vector>& mus,
                          const RegulatorOptions& opt);

/// Observability Gramian of (F, H) over [t, t + delta].
Matrix ObservabilityGramian(const MatrixSignal& F, const MatrixSignal& H,
                            double t, double delta, double step = 1e-2);

struct ObservabilityReport {
  double delta{0.0};
  /// min over windows of lambda_min(W) / trace(W).
  double min_ratio{0.0};
  bool uniform{false};
  int windows{0};
};

/// Quasi-period of S from its largest instantaneous frequency, at least 2 pi.
double DominantQuasiPeriod(const MatrixSignal& S, double t0, double t1);

/// Sliding windows of width delta, spaced delta / 2, across [t0, t1].
ObservabilityReport ProbeUniformObservability(const MatrixSignal& F,
                                              const MatrixSignal& H, double t0,
                                              double t1, double delta);

struct ReductionReport {
  int nu_before{0};
  int nu_after{0};
  /// Directions below 1e-6 of the Gramian trace on the first window.
  int weakly_observable{0};
  double gramian_min_ratio{0.0};
  std::vector<double> singular_values;
};

/// SVD projection of the stacked Sigma(mu_j) after a Gramian screen whose
/// findings are reported but not acted on. The reduced model has F = 0 and
/// H(t) = H Phi_F(t, t0) V on `grid`.
InternalModel ReduceIM(const InternalModel& im, const TimeGrid& grid,
                       const std::vector<Vector>& mus, double tol,
                       const MatrixSignal& S, ReductionReport* report);

/// Same family under a new generator F_new, referenced at t_ref (a node).
InternalModel ShiftIM(const InternalModel& im, const MatrixSignal& F_new,
                      double t_ref, const TimeGrid& grid);

/// Realization (F_im + G_im H_im, H_im) with F_im = -alpha I - F^T.
struct CanonicalRealization {
  MatrixSignal F_im;  // nu x nu
  MatrixSignal G_im;  // nu x 1, equals H^T
  MatrixSignal H_im;  // 1 x nu, H L^{-1}
  MatrixSignal L;     // gridded
  double alpha{0.0};
  double max_condition{0.0};
  ObservabilityReport observability;
  TimeGrid grid;
  std::vector<Matrix> L_values;
  /// Realized model; Sigma becomes L(t0) Sigma.
  InternalModel realized;
};

struct RealizationLimits {
  double max_condition{1e8};
  bool require_observability{true};
};

/// Throws std::runtime_error when (F, H) fails the observability probe or
/// L becomes ill-conditioned beyond the limits.
CanonicalRealization BuildCanonicalRealization(const InternalModel& im,
                                               double alpha, const Matrix& L0,
                                               const TimeGrid& grid,
                                               const MatrixSignal& S,
                                               const RealizationLimits& limits = {});

struct PropagationSample {
  Vector mu;
  /// R(t, mu) at every node of the verification grid.
  std::vector<Matrix> R;
};

struct PropagationFit {
  Matrix sigma;
  double residual{0.0};
};

/// Least-squares Sigma(t0, mu) per sample and the sup residual of
/// R Phi_S - H Phi_F Sigma over the grid.
std::vector<PropagationFit> VerifyPropagation(
    const InternalModel& im, const std::vector<PropagationSample>& samples,
    const MatrixSignal& S, const TimeGrid& grid);

}  // namespace ltvreg
