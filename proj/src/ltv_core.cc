#include "ltvreg/ltv_core.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ltvreg {

Matrix TransitionMatrix(const MatrixSignal& A, double t, double s,
                        double step) {
  const int n = A.rows();
  if (A.cols() != n) throw std::invalid_argument("TransitionMatrix: A not square");
  Matrix Y = Matrix::Identity(n, n);
  if (t == s) return Y;
  const int steps =
      std::max(1, static_cast<int>(std::ceil(std::abs(t - s) / step - 1e-9)));
  const double h = (t - s) / steps;
  auto f = [&A](double tau, const Matrix& y) -> Matrix { return A(tau) * y; };
  for (int k = 0; k < steps; ++k) Y = Rk4Step(f, s + k * h, Y, h);
  return Y;
}

std::vector<Matrix> TransitionAlongGrid(const MatrixSignal& A,
                                        const TimeGrid& grid) {
  const int n = A.rows();
  std::vector<Matrix> out;
  out.reserve(grid.size());
  out.push_back(Matrix::Identity(n, n));
  auto f = [&A](double tau, const Matrix& y) -> Matrix { return A(tau) * y; };
  for (int k = 0; k < grid.steps; ++k) {
    out.push_back(Rk4Step(f, grid.time(k), out.back(), grid.dt));
  }
  return out;
}

MatrixSignal LieDerivative(const MatrixSignal& A, const MatrixSignal& Y) {
  return Y.deriv(1) + Y * A;
}

std::vector<MatrixSignal> LieChain(const MatrixSignal& A, const MatrixSignal& Y,
                                   int k) {
  if (k < 0) throw std::invalid_argument("LieChain: negative order");
  if (Y.smoothness_order() < k || (k > 0 && A.smoothness_order() < k - 1)) {
    throw std::invalid_argument(
        "LieChain: order exceeds the available smoothness of the signals");
  }
  std::vector<MatrixSignal> chain{Y};
  for (int i = 0; i < k; ++i) chain.push_back(LieDerivative(A, chain.back()));
  return chain;
}

ExponentialBound FitExponentialBound(
    const MatrixSignal& A, double t0, double t1, std::uint64_t seed,
    int samples, double tau_max, double step,
    const std::function<Matrix(double)>& basis) {
  if (!(t1 > t0) || samples < 2) {
    throw std::invalid_argument("FitExponentialBound: empty window");
  }
  std::mt19937_64 rng(seed);
  const double span = std::min(tau_max, t1 - t0);
  std::uniform_real_distribution<double> tau_dist(0.0, span);
  std::vector<double> taus, logs, norms;
  for (int k = 0; k < samples; ++k) {
    const double tau = tau_dist(rng);
    std::uniform_real_distribution<double> s_dist(t0, t1 - tau);
    const double s = s_dist(rng);
    Matrix phi = TransitionMatrix(A, s + tau, s, step);
    if (basis) phi = phi * basis(s);
    const double nrm = Eigen::JacobiSVD<Matrix>(phi).singularValues()(0);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      throw std::runtime_error("FitExponentialBound: degenerate transition");
    }
    taus.push_back(tau);
    norms.push_back(nrm);
    logs.push_back(std::log(nrm));
  }
  double mt = 0, ml = 0;
  for (int k = 0; k < samples; ++k) {
    mt += taus[k];
    ml += logs[k];
  }
  mt /= samples;
  ml /= samples;
  double sxy = 0, sxx = 0;
  for (int k = 0; k < samples; ++k) {
    sxy += (taus[k] - mt) * (logs[k] - ml);
    sxx += (taus[k] - mt) * (taus[k] - mt);
  }
  const double slope = sxy / sxx;
  if (!(slope < -1e-6)) {
    throw std::runtime_error("transition matrix is not exponentially decaying");
  }
  ExponentialBound out;
  out.phi2 = -slope / 1.1;
  double worst = 1.0;  // tau = 0
  for (int k = 0; k < samples; ++k) {
    worst = std::max(worst, norms[k] * std::exp(out.phi2 * taus[k]));
  }
  out.phi1 = 1.1 * worst;
  return out;
}

double ProbeTransitionSup(const MatrixSignal& A, double t0, double t1,
                          std::uint64_t seed, int samples, double step) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(t0, t1);
  double sup = 1.0;
  for (int k = 0; k < samples; ++k) {
    const double a = dist(rng);
    const double b = dist(rng);
    const Matrix phi = TransitionMatrix(A, a, b, step);
    const double nrm = Eigen::JacobiSVD<Matrix>(phi).singularValues()(0);
    if (!std::isfinite(nrm)) {
      throw std::runtime_error("ProbeTransitionSup: transition overflow");
    }
    sup = std::max(sup, nrm);
  }
  return 1.1 * sup;
}

Exosystem Exosystem::Make(const MatrixSignal& S, double t0, double t1,
                          std::uint64_t seed) {
  if (S.rows() != S.cols() || S.rows() < 1) {
    throw std::invalid_argument("exosystem matrix must be square");
  }
  Exosystem exo;
  exo.S = S;
  exo.phi_bound = ProbeTransitionSup(S, t0, t1, seed);
  return exo;
}

void Plant::Validate() const {
  const int nn = A.rows();
  if (A.cols() != nn || nn < 1) throw std::invalid_argument("plant: A must be square");
  if (B.rows() != nn || B.cols() != 1) {
    throw std::invalid_argument("plant: B must be n x 1");
  }
  if (C.rows() != 1 || C.cols() != nn) {
    throw std::invalid_argument("plant: C must be 1 x n");
  }
  if (P.rows() != nn) throw std::invalid_argument("plant: P must have n rows");
  if (Q.rows() != 1 || Q.cols() != P.cols()) {
    throw std::invalid_argument("plant: Q must be 1 x rho");
  }
}

RelativeDegree ComputeRelativeDegree(const Plant& plant, double t0, double t1,
                                     double phi_b_min) {
  plant.Validate();
  const TimeGrid grid = TimeGrid::Covering(t0, t1, (t1 - t0) / 2000.0);
  const int n = plant.n();
  MatrixSignal row = plant.C;
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      if (row.smoothness_order() < 1) {
        throw std::invalid_argument(
            "relative degree: output chain exceeds available smoothness");
      }
      row = LieDerivative(plant.A, row);
    }
    const MatrixSignal g = row * plant.B;
    double gmax = 0.0, gmin = INFINITY, scale = 1e-300;
    int pos = 0, neg = 0;
    for (int k = 0; k < grid.size(); ++k) {
      const double t = grid.time(k);
      const double v = g(t)(0, 0);
      gmax = std::max(gmax, std::abs(v));
      gmin = std::min(gmin, std::abs(v));
      if (v > 0) ++pos;
      if (v < 0) ++neg;
      scale = std::max(scale, row(t).norm() * plant.B(t).norm());
    }
    if (gmax <= 1e-9 * std::max(1.0, scale)) continue;
    if ((pos > 0 && neg > 0) || gmin < phi_b_min) {
      throw std::runtime_error(
          "high-frequency gain is not bounded away from zero on the window");
    }
    RelativeDegree out;
    out.r = i + 1;
    out.b = g;
    out.phi_b = gmin;
    out.sign_b = pos > 0 ? 1 : -1;
    return out;
  }
  throw std::runtime_error("relative degree undefined: output chain never sees the input");
}

namespace {

MatrixSignal StackRows(const std::vector<MatrixSignal>& rows) {
  std::vector<std::vector<MatrixSignal>> blocks;
  for (const auto& r : rows) blocks.push_back({r});
  return MatrixSignal::Blocks(blocks);
}

}  // namespace

Stacks AssembleStacks(const Plant& plant, const Exosystem& exo, int r,
                      const MatrixSignal& b) {
  plant.Validate();
  if (r < 1 || r > plant.n()) throw std::invalid_argument("AssembleStacks: bad r");
  if (exo.rho() != plant.rho()) {
    throw std::invalid_argument("AssembleStacks: exosystem dimension mismatch");
  }
  const auto c = LieChain(plant.A, plant.C, r);
  const auto q = LieChain(exo.S, plant.Q, r);
  // p[i] is row i of the forcing stack; p[r] is the next row.
  std::vector<MatrixSignal> p{MatrixSignal::Zero(1, plant.rho())};
  for (int i = 1; i <= r; ++i) {
    p.push_back(LieDerivative(exo.S, p.back()) + c[i - 1] * plant.P);
  }
  Stacks s;
  s.r = r;
  s.b = b;
  s.O_A = StackRows({c.begin(), c.begin() + r});
  s.O_A_next = c[r];
  s.O_S = StackRows({q.begin(), q.begin() + r});
  s.O_S_next = q[r];
  s.Pcal = StackRows({p.begin(), p.begin() + r});
  s.Pcal_next = p[r];
  const MatrixSignal binv = b.reciprocal();
  s.K_out = -(binv * s.O_A_next);
  s.N_out = -(binv * (s.O_S_next + s.Pcal_next));
  s.M = plant.A + plant.B * s.K_out;
  s.N = plant.B * s.N_out + plant.P;
  return s;
}

std::string TargetName(Target t) {
  switch (t) {
    case Target::kA: return "A";
    case Target::kB: return "B";
    case Target::kC: return "C";
    case Target::kP: return "P";
    case Target::kQ: return "Q";
  }
  return "?";
}

int UncertainPlant::CoordIndex(const std::string& name) const {
  for (size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double UncertainPlant::Box(int coord) const {
  return coord_box.empty() ? mu_box : coord_box.at(coord);
}

Plant UncertainPlant::Instantiate(const Vector& mu) const {
  if (mu.size() != dim_mu()) {
    throw std::invalid_argument("Instantiate: mu has the wrong dimension");
  }
  for (int i = 0; i < mu.size(); ++i) {
    if (std::abs(mu(i)) > Box(i) * (1.0 + 1e-12)) {
      throw std::invalid_argument("Instantiate: mu outside the uncertainty box");
    }
  }
  Plant p = nominal;
  for (const auto& ch : channels) {
    const double m = mu(ch.coord);
    if (m == 0.0) continue;
    const MatrixSignal d = m * ch.E;
    switch (ch.target) {
      case Target::kA: p.A = p.A + d; break;
      case Target::kB: p.B = p.B + d; break;
      case Target::kC: p.C = p.C + d; break;
      case Target::kP: p.P = p.P + d; break;
      case Target::kQ: p.Q = p.Q + d; break;
    }
  }
  return p;
}

std::vector<Vector> UncertainPlant::Corners() const {
  const int p = dim_mu();
  std::vector<Vector> out;
  for (int mask = 0; mask < (1 << p); ++mask) {
    Vector v(p);
    for (int i = 0; i < p; ++i) v(i) = (mask >> i) & 1 ? Box(i) : -Box(i);
    out.push_back(v);
  }
  return out;
}

MatrixSignal Embed(const MatrixSignal& E, int rows, int cols, int r0, int c0) {
  if (r0 < 0 || c0 < 0 || r0 + E.rows() > rows || c0 + E.cols() > cols) {
    throw std::invalid_argument("Embed: block does not fit");
  }
  std::vector<std::vector<MatrixSignal>> g;
  const int r1 = rows - r0 - E.rows();
  const int c1 = cols - c0 - E.cols();
  auto row_of = [&](int h, bool mid) {
    std::vector<MatrixSignal> row;
    if (c0 > 0) row.push_back(MatrixSignal::Zero(h, c0));
    row.push_back(mid ? E : MatrixSignal::Zero(h, E.cols()));
    if (c1 > 0) row.push_back(MatrixSignal::Zero(h, c1));
    return row;
  };
  if (r0 > 0) g.push_back(row_of(r0, false));
  g.push_back(row_of(E.rows(), true));
  if (r1 > 0) g.push_back(row_of(r1, false));
  return MatrixSignal::Blocks(g);
}

void UncertainPlant::AddBiChannel(int coord, BiPart part, const MatrixSignal& E) {
  const int r = bi_relative_degree;
  const int n = nominal.n();
  if (r < 1) throw std::invalid_argument("normal-form channel on a non-normal-form plant");
  if (coord < 0 || coord >= dim_mu()) throw std::invalid_argument("channel: bad coordinate");
  auto need = [&](int rr, int cc) {
    if (E.rows() != rr || E.cols() != cc) {
      throw std::invalid_argument("channel: perturbation has the wrong shape");
    }
  };
  const int rho = nominal.rho();
  switch (part) {
    case BiPart::kAlpha:
      need(1, n);
      channels.push_back({coord, Target::kA, Embed(E, n, n, r - 1, 0)});
      break;
    case BiPart::kBeta:
      need(n - r, 1);
      channels.push_back({coord, Target::kA, Embed(E, n, n, r, 0)});
      break;
    case BiPart::kEta:
      need(n - r, n - r);
      channels.push_back({coord, Target::kA, Embed(E, n, n, r, r)});
      break;
    case BiPart::kB:
      need(1, 1);
      channels.push_back({coord, Target::kB, Embed(E, n, 1, r - 1, 0)});
      break;
    case BiPart::kPu:
      need(r, rho);
      channels.push_back({coord, Target::kP, Embed(E, n, rho, 0, 0)});
      break;
    case BiPart::kPl:
      need(n - r, rho);
      channels.push_back({coord, Target::kP, Embed(E, n, rho, r, 0)});
      break;
    case BiPart::kQ:
      need(1, rho);
      channels.push_back({coord, Target::kQ, E});
      break;
  }
}

void UncertainPlant::Validate() const {
  nominal.Validate();
  if (!(mu_box > 0.0)) throw std::invalid_argument("mu_box must be positive");
  if (!coord_box.empty()) {
    if (static_cast<int>(coord_box.size()) != dim_mu()) {
      throw std::invalid_argument("coord_box needs one radius per coordinate");
    }
    for (double b : coord_box) {
      if (!(b > 0.0)) throw std::invalid_argument("box radii must be positive");
    }
  }
  for (const auto& ch : channels) {
    if (ch.coord < 0 || ch.coord >= dim_mu()) {
      throw std::invalid_argument("channel refers to an unknown coordinate");
    }
    const MatrixSignal* ref = nullptr;
    switch (ch.target) {
      case Target::kA: ref = &nominal.A; break;
      case Target::kB: ref = &nominal.B; break;
      case Target::kC: ref = &nominal.C; break;
      case Target::kP: ref = &nominal.P; break;
      case Target::kQ: ref = &nominal.Q; break;
    }
    if (ch.E.rows() != ref->rows() || ch.E.cols() != ref->cols()) {
      throw std::invalid_argument("channel on " + TargetName(ch.target) +
                                  " has the wrong shape");
    }
  }
}

ByrnesIsidoriView ExtractByrnesIsidori(const Plant& plant, int r, double t0,
                                       double t1, std::uint64_t seed,
                                       bool fit_decay) {
  plant.Validate();
  const int n = plant.n();
  if (r < 1 || r > n) throw std::invalid_argument("normal form: bad relative degree");
  const TimeGrid grid = TimeGrid::Covering(t0, t1, (t1 - t0) / 2000.0);
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.time(k);
    const Matrix A = plant.A(t), B = plant.B(t), C = plant.C(t);
    bool ok = C(0, 0) == 1.0 && C.rightCols(n - 1).isZero(0.0);
    for (int i = 0; i < n; ++i) {
      if (i != r - 1 && B(i, 0) != 0.0) ok = false;
    }
    for (int i = 0; i + 1 < r; ++i) {
      Matrix e = Matrix::Zero(1, n);
      e(0, i + 1) = 1.0;
      if (A.row(i) != e) ok = false;
    }
    if (n > r && r > 1 && !A.block(r, 1, n - r, r - 1).isZero(0.0)) ok = false;
    if (!ok) {
      throw std::invalid_argument("plant does not have the normal-form zero pattern");
    }
  }
  ByrnesIsidoriView v;
  v.r = r;
  v.n = n;
  v.alpha = plant.A.block(r - 1, 0, 1, n);
  v.b = plant.B.block(r - 1, 0, 1, 1);
  v.P_u = plant.P.block(0, 0, r, plant.rho());
  v.Q = plant.Q;
  if (n > r) {
    v.beta = plant.A.block(r, 0, n - r, 1);
    v.eta = plant.A.block(r, r, n - r, n - r);
    v.P_l = plant.P.block(r, 0, n - r, plant.rho());
    if (fit_decay) v.eta_decay = FitExponentialBound(v.eta, t0, t1, seed);
  } else {
    v.beta = MatrixSignal::Zero(0, 1);
    v.eta = MatrixSignal::Zero(0, 0);
    v.P_l = MatrixSignal::Zero(0, plant.rho());
  }
  return v;
}

Plant SimilarityTransform(const Plant& plant, const Matrix& T) {
  plant.Validate();
  if (T.rows() != plant.n() || T.cols() != plant.n()) {
    throw std::invalid_argument("similarity: T has the wrong size");
  }
  Eigen::FullPivLU<Matrix> lu(T);
  if (!lu.isInvertible()) throw std::invalid_argument("similarity: T is singular");
  const Matrix Ti = lu.inverse();
  Plant out;
  out.A = MatrixSignal(T) * plant.A * MatrixSignal(Ti);
  out.B = MatrixSignal(T) * plant.B;
  out.C = plant.C * MatrixSignal(Ti);
  out.P = MatrixSignal(T) * plant.P;
  out.Q = plant.Q;
  return out;
}

}  // namespace ltvreg
