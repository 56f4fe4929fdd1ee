#include "ltvreg/regulator.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace ltvreg {

namespace {

double Norm2(const Matrix& m) {
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

// Orthonormal basis of ker O_A(t) from the trailing right singular vectors.
Matrix KernelBasis(const MatrixSignal& O_A, double t) {
  const Matrix O = O_A(t);
  Eigen::JacobiSVD<Matrix> svd(O, Eigen::ComputeFullV);
  const int r = static_cast<int>(O.rows());
  const int n = static_cast<int>(O.cols());
  return svd.matrixV().rightCols(n - r);
}

// Flags linear or faster growth after washout: the envelope over the last
// quarter dominates the second quarter and increases monotonically.
bool LooksUnbounded(const std::vector<Matrix>& Pi, int from) {
  const int n = static_cast<int>(Pi.size()) - from;
  if (n < 8) return false;
  double env[4] = {0, 0, 0, 0};
  for (int k = 0; k < n; ++k) {
    const int q = std::min(3, 4 * k / n);
    env[q] = std::max(env[q], Pi[from + k].norm());
  }
  return env[3] > 1.5 * env[1] && env[3] > env[2] && env[2] > env[1];
}

}  // namespace

int RegulatorSolution::washout_index() const {
  const int k = static_cast<int>(std::ceil((washout - grid.t0) / grid.dt - 1e-9));
  return std::clamp(k, 0, grid.steps);
}

MatrixSignal RegulatorSolution::RSignal() const {
  return MatrixSignal::Gridded(grid, R, R_dot);
}

MatrixSignal RegulatorSolution::PiSignal() const {
  return MatrixSignal::Gridded(grid, Pi, Pi_dot);
}

Matrix SolveInitialValue(const Stacks& stacks, double t0) {
  const Matrix O = stacks.O_A(t0);
  const Matrix rhs = -(stacks.O_S(t0) + stacks.Pcal(t0));
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(O);
  cod.setThreshold(1e-10);
  if (cod.rank() < O.rows()) {
    throw std::runtime_error(
        "observability stack loses row rank at the initial time");
  }
  return cod.solve(rhs);
}

RegulatorResiduals ComputeResiduals(const Plant& plant, const Exosystem& exo,
                                    const TimeGrid& grid,
                                    const std::vector<Matrix>& Pi,
                                    const std::vector<Matrix>& R, int from) {
  RegulatorResiduals out;
  const int last = grid.steps;
  const double h = grid.dt;
  for (int k = std::max(from, 0); k <= last; ++k) {
    const double t = grid.time(k);
    out.re2 = std::max(out.re2, (plant.C(t) * Pi[k] + plant.Q(t)).norm());
    if (k < 2 || k > last - 2) continue;
    const Matrix dPi =
        (-Pi[k + 2] + 8.0 * Pi[k + 1] - 8.0 * Pi[k - 1] + Pi[k - 2]) / (12.0 * h);
    const Matrix rhs = plant.A(t) * Pi[k] - Pi[k] * exo.S(t) + plant.P(t) +
                       plant.B(t) * R[k];
    out.re1 = std::max(out.re1, (dPi - rhs).norm());
  }
  return out;
}

RegulatorSolution SolveRegulator(const Plant& plant, const Exosystem& exo,
                                 const RegulatorOptions& opt) {
  plant.Validate();
  if (!(opt.horizon > 0.0) || !(opt.step > 0.0)) {
    throw std::invalid_argument("regulator: horizon and step must be positive");
  }
  const double t1 = opt.t0 + opt.horizon;
  const RelativeDegree rd = ComputeRelativeDegree(plant, opt.t0, t1);
  const Stacks st = AssembleStacks(plant, exo, rd.r, rd.b);
  const int n = plant.n();
  const int rho = plant.rho();
  const int r = rd.r;

  RegulatorSolution sol;
  sol.grid = TimeGrid::Covering(opt.t0, t1, opt.step);
  sol.r = r;
  const TimeGrid& grid = sol.grid;

  std::optional<ByrnesIsidoriView> bi;
  if (opt.path != RegulatorPath::kCoordinateFree) {
    try {
      bi = ExtractByrnesIsidori(plant, r, opt.t0, t1, opt.seed, false);
    } catch (const std::invalid_argument&) {
      if (opt.path == RegulatorPath::kByrnesIsidori) throw;
    }
  }
  sol.normal_form_path = bi.has_value();

  // Decay of deviations from the bounded solution (zero dynamics).
  if (r < n) {
    try {
      if (bi) {
        sol.decay = FitExponentialBound(bi->eta, opt.t0, t1, opt.seed);
      } else {
        sol.decay = FitExponentialBound(
            st.M, opt.t0, t1, opt.seed, 50, 20.0, 1e-2,
            [&st](double s) { return KernelBasis(st.O_A, s); });
      }
      sol.decay_known = true;
    } catch (const std::runtime_error&) {
      sol.diagnostic = "zero dynamics are not exponentially stable";
    }
  }

  const int N = grid.size();
  sol.Pi.resize(N);
  sol.Pi_dot.resize(N);
  sol.R.resize(N);
  sol.R_dot.resize(N);

  double scale = 1.0;
  auto guard = [&](const Matrix& m, double t) {
    const double v = m.norm();
    if (!std::isfinite(v) || v > opt.ceiling_factor * scale) {
      throw std::runtime_error(
          "unbounded solution candidate: regulator solution overflows at t = " +
          std::to_string(t));
    }
  };

  if (bi) {
    const int l = n - r;
    const MatrixSignal U = -(st.O_S + st.Pcal);
    const MatrixSignal dU = U.deriv(1);
    const MatrixSignal forcing = bi->P_l - bi->beta * bi->Q;
    auto f = [&](double t, const Matrix& X) -> Matrix {
      return bi->eta(t) * X - X * exo.S(t) + forcing(t);
    };
    Matrix X = opt.initial ? *opt.initial : Matrix::Zero(l, rho);
    if (X.rows() != l || X.cols() != rho) {
      throw std::invalid_argument("regulator: initial lower block has the wrong shape");
    }
    for (int k = 0; k < N; ++k) {
      const double t = grid.time(k);
      Matrix Pi(n, rho), dPi(n, rho);
      Pi.topRows(r) = U(t);
      dPi.topRows(r) = dU(t);
      if (l > 0) {
        Pi.bottomRows(l) = X;
        dPi.bottomRows(l) = f(t, X);
      }
      if (k == 0) scale = std::max(1.0, Pi.norm());
      guard(Pi, t);
      sol.Pi[k] = std::move(Pi);
      sol.Pi_dot[k] = std::move(dPi);
      if (l > 0 && k + 1 < N) X = Rk4Step(f, t, X, grid.dt);
    }
  } else {
    auto f = [&](double t, const Matrix& P) -> Matrix {
      return st.M(t) * P - P * exo.S(t) + st.N(t);
    };
    Matrix Pi = opt.initial ? *opt.initial : SolveInitialValue(st, opt.t0);
    if (Pi.rows() != n || Pi.cols() != rho) {
      throw std::invalid_argument("regulator: initial value has the wrong shape");
    }
    scale = std::max(1.0, Pi.norm());
    for (int k = 0; k < N; ++k) {
      const double t = grid.time(k);
      guard(Pi, t);
      sol.Pi_dot[k] = f(t, Pi);
      sol.Pi[k] = Pi;
      if (k + 1 < N) Pi = Rk4Step(f, t, Pi, grid.dt);
    }
  }
  sol.Pi_initial = sol.Pi[0];

  const MatrixSignal dK = st.K_out.deriv(1);
  const MatrixSignal dN = st.N_out.deriv(1);
  for (int k = 0; k < N; ++k) {
    const double t = grid.time(k);
    const Matrix K = st.K_out(t);
    sol.R[k] = K * sol.Pi[k] + st.N_out(t);
    sol.R_dot[k] = dK(t) * sol.Pi[k] + K * sol.Pi_dot[k] + dN(t);
  }

  if (opt.washout >= 0.0) {
    sol.washout = opt.t0 + opt.washout;
  } else {
    double w = 10.0;
    if (sol.decay_known) {
      // Deviations shrink like phi1 phi_S exp(-phi2 t); wait until 1e-9.
      w = std::max(w, std::log(sol.decay.phi1 * exo.phi_bound / 1e-9) /
                          sol.decay.phi2);
    }
    if (w > 0.5 * opt.horizon) {
      w = 0.5 * opt.horizon;
      if (!sol.diagnostic.empty()) sol.diagnostic += "; ";
      sol.diagnostic += "default washout truncated to half the horizon";
    }
    sol.washout = opt.t0 + w;
  }
  const int from = sol.washout_index();
  const RegulatorResiduals res =
      ComputeResiduals(plant, exo, grid, sol.Pi, sol.R, from);
  sol.residual_re1 = res.re1;
  sol.residual_re2 = res.re2;
  for (const auto& p : sol.Pi) sol.sup_pi = std::max(sol.sup_pi, Norm2(p));
  if (LooksUnbounded(sol.Pi, from)) {
    sol.bounded = false;
    if (!sol.diagnostic.empty()) sol.diagnostic += "; ";
    sol.diagnostic += "unbounded solution candidate";
  }
  if (sol.residual_re2 > 1e-3) {
    throw std::runtime_error("regulator output residual " +
                             std::to_string(sol.residual_re2) +
                             " exceeds 1e-3 after washout");
  }
  return sol;
}

Matrix SylvesterLtiOracle(const Matrix& eta, const Matrix& S, const Matrix& U) {
  const Eigen::Index m = eta.rows();
  const Eigen::Index rho = S.rows();
  if (eta.cols() != m || S.cols() != rho || U.rows() != m || U.cols() != rho) {
    throw std::invalid_argument("Sylvester oracle: dimension mismatch");
  }
  if (m == 0) return Matrix::Zero(0, rho);
  const Eigen::VectorXcd le = Eigen::EigenSolver<Matrix>(eta).eigenvalues();
  const Eigen::VectorXcd ls = Eigen::EigenSolver<Matrix>(S).eigenvalues();
  const double scale = std::max({1.0, eta.norm(), S.norm()});
  for (Eigen::Index i = 0; i < le.size(); ++i) {
    for (Eigen::Index j = 0; j < ls.size(); ++j) {
      if (std::abs(le(i) - ls(j)) < 1e-8 * scale) {
        throw std::runtime_error("Sylvester oracle: resonant spectra");
      }
    }
  }
  // vec(eta X - X S) = (I kron eta - S^T kron I) vec(X).
  Matrix K = Matrix::Zero(m * rho, m * rho);
  for (Eigen::Index j = 0; j < rho; ++j) {
    K.block(j * m, j * m, m, m) += eta;
    for (Eigen::Index i = 0; i < rho; ++i) {
      K.block(j * m, i * m, m, m) -= S(i, j) * Matrix::Identity(m, m);
    }
  }
  const Matrix rhs = -Eigen::Map<const Vector>(U.data(), m * rho);
  const Vector x = Eigen::FullPivLU<Matrix>(K).solve(rhs);
  return Eigen::Map<const Matrix>(x.data(), m, rho);
}

}  // namespace ltvreg
