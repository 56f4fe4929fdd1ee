#include "ltvreg/simulator.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ltvreg {

ClosedLoopSystem AssembleClosedLoop(const Plant& plant, const Exosystem& exo,
                                    const std::optional<Controller>& controller,
                                    const Vector& mu) {
  plant.Validate();
  ClosedLoopSystem sys;
  sys.plant = plant;
  sys.exo = exo;
  sys.n = plant.n();
  sys.rho = plant.rho();
  sys.mu = mu;
  if (exo.rho() != sys.rho) throw std::invalid_argument("closed loop: exosystem size mismatch");
  const int n = sys.n;
  const int rho = sys.rho;
  if (!controller || controller->dim() == 0) {
    sys.A_cl = plant.A;
    sys.forcing = plant.P;
    sys.generator = MatrixSignal::Blocks(
        {{exo.S, MatrixSignal::Zero(rho, n)}, {plant.P, plant.A}});
    return sys;
  }
  const Controller& c = *controller;
  sys.controller = c;
  sys.nu = c.dim();
  const int nu = sys.nu;
  if (c.F.rows() != nu || c.G.rows() != nu || c.H.cols() != nu) {
    throw std::invalid_argument("closed loop: controller size mismatch");
  }
  const MatrixSignal BH = plant.B * c.H;
  const MatrixSignal GC = c.G * plant.C;
  const MatrixSignal GQ = c.G * plant.Q;
  sys.A_cl = MatrixSignal::Blocks({{plant.A, BH}, {GC, c.F}});
  sys.forcing = MatrixSignal::Blocks({{plant.P}, {GQ}});
  sys.generator = MatrixSignal::Blocks({
      {exo.S, MatrixSignal::Zero(rho, n), MatrixSignal::Zero(rho, nu)},
      {plant.P, plant.A, BH},
      {GQ, GC, c.F},
  });
  return sys;
}

SimulationTrace Simulate(const ClosedLoopSystem& sys, const Vector& w0,
                         const Vector& x0, const Vector& xi0, double t0,
                         double horizon, double step) {
  if (!(step > 0.0) || !(horizon > 0.0)) {
    throw std::invalid_argument("simulate: step and horizon must be positive");
  }
  const int rho = sys.rho, n = sys.n, nu = sys.nu;
  if (w0.size() != rho || x0.size() != n || xi0.size() != nu) {
    throw std::invalid_argument("simulate: initial state has the wrong size");
  }
  SimulationTrace tr;
  tr.grid = TimeGrid::Covering(t0, t0 + horizon, step);
  tr.mu = sys.mu;
  const int N = tr.grid.size();
  tr.w.resize(N);
  tr.x.resize(N);
  tr.xi.resize(N);
  tr.u.resize(N);
  tr.e.resize(N);
  Matrix z(rho + n + nu, 1);
  z << w0, x0, xi0;
  auto f = [&](double t, const Matrix& y) -> Matrix { return sys.generator(t) * y; };
  for (int k = 0; k < N; ++k) {
    const double t = tr.grid.time(k);
    tr.w[k] = z.col(0).head(rho);
    tr.x[k] = z.col(0).segment(rho, n);
    tr.xi[k] = z.col(0).tail(nu);
    tr.u[k] = nu > 0 ? (sys.controller.H(t) * tr.xi[k])(0) : 0.0;
    tr.e[k] = (sys.plant.C(t) * tr.x[k] + sys.plant.Q(t) * tr.w[k])(0);
    if (k + 1 == N) break;
    z = Rk4Step(f, t, z, tr.grid.dt);
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > 1e12) {
      std::ostringstream msg;
      msg << "simulation diverged: state exceeds 1e12 at t = " << tr.grid.time(k + 1);
      throw std::runtime_error(msg.str());
    }
  }
  return tr;
}

Metrics ComputeMetrics(const SimulationTrace& trace, double tail_fraction) {
  const int N = static_cast<int>(trace.e.size());
  if (N == 0) throw std::invalid_argument("metrics: empty trace");
  Metrics m;
  const int from = std::clamp(static_cast<int>(std::floor((1.0 - tail_fraction) * (N - 1))), 0, N - 1);
  for (int k = from; k < N; ++k) m.tail_sup_error = std::max(m.tail_sup_error, std::abs(trace.e[k]));
  for (int k = 0; k < N; ++k) {
    if (!std::isfinite(trace.e[k]) || !trace.x[k].allFinite()) m.bounded = false;
  }
  std::vector<double> t(N), a(N);
  double hi = 0.0, lo = INFINITY;
  for (int k = 0; k < N; ++k) {
    t[k] = trace.grid.time(k);
    a[k] = std::abs(trace.e[k]);
  }
  // Decades spanned by the window envelope, not by isolated zero crossings.
  const int windows = std::min(50, N);
  for (int w = 0; w < windows; ++w) {
    double env = 0.0;
    for (int i = w * N / windows; i < (w + 1) * N / windows; ++i) env = std::max(env, a[i]);
    hi = std::max(hi, env);
    if (env > 0.0) lo = std::min(lo, env);
  }
  if (hi > 0.0 && lo > 0.0 && hi / lo >= 1e3) m.decay_exponent = EnvelopeExponent(t, a);
  return m;
}

GramRankReport GramDimensionProbe(const std::vector<std::vector<Matrix>>& family,
                                  const TimeGrid& grid, double rel_tol) {
  const int M = static_cast<int>(family.size());
  if (M < 2) throw std::invalid_argument("Gram probe needs at least two signals");
  for (const auto& f : family) {
    if (static_cast<int>(f.size()) != grid.size()) {
      throw std::invalid_argument("Gram probe: signals are not on the common grid");
    }
  }
  Matrix G = Matrix::Zero(M, M);
  for (int k = 0; k < grid.size(); ++k) {
    const double w = (k == 0 || k == grid.steps) ? 0.5 * grid.dt : grid.dt;
    for (int i = 0; i < M; ++i) {
      for (int j = i; j < M; ++j) {
        G(i, j) += w * family[i][k].cwiseProduct(family[j][k]).sum();
      }
    }
  }
  G = G.selfadjointView<Eigen::Upper>();
  GramRankReport rep;
  for (int m = 1; m <= M; ++m) {
    const Vector sv = Eigen::JacobiSVD<Matrix>(G.topLeftCorner(m, m)).singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) >= rel_tol * sv(0);
    rep.ranks.push_back(sv(0) > 0 ? rank : 0);
  }
  const Vector sv = Eigen::JacobiSVD<Matrix>(G).singularValues();
  rep.singular_values.assign(sv.data(), sv.data() + sv.size());
  return rep;
}

}  // namespace ltvreg
