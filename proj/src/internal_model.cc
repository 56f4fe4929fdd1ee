#include "ltvreg/internal_model.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ltvreg {

bool GradedLexLess(const Monomial& a, const Monomial& b) {
  int da = 0, db = 0;
  for (int e : a) da += e;
  for (int e : b) db += e;
  if (da != db) return da < db;
  return a > b;
}

double EvalMonomial(const Monomial& m, const Vector& mu) {
  double v = 1.0;
  for (size_t i = 0; i < m.size(); ++i) {
    for (int k = 0; k < m[i]; ++k) v *= mu(static_cast<Eigen::Index>(i));
  }
  return v;
}

std::string MonomialName(const Monomial& m,
                         const std::vector<std::string>& coords) {
  std::string s;
  for (size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) continue;
    if (!s.empty()) s += "*";
    s += coords.at(i);
    if (m[i] > 1) s += "^" + std::to_string(m[i]);
  }
  return s.empty() ? "1" : s;
}

namespace {

MatrixSignal BlockRow(const std::vector<MatrixSignal>& blocks) {
  return MatrixSignal::Blocks({blocks});
}

// Sigma(mu) = m(mu) kron I_rho for the given monomials.
std::function<Matrix(const Vector&)> MonomialSigma(std::vector<Monomial> monos,
                                                   int rho) {
  return [monos = std::move(monos), rho](const Vector& mu) {
    const int k = static_cast<int>(monos.size());
    Matrix out = Matrix::Zero(k * rho, rho);
    for (int i = 0; i < k; ++i) {
      out.block(i * rho, 0, rho, rho) =
          EvalMonomial(monos[i], mu) * Matrix::Identity(rho, rho);
    }
    return out;
  };
}

MatrixSignal BlockDiagonalExo(const MatrixSignal& S, int copies) {
  return S.kron_left(Matrix::Identity(copies, copies));
}

}  // namespace

InternalModel NominalIM(const MatrixSignal& R0, const MatrixSignal& S,
                        double t0) {
  if (R0.rows() != 1 || R0.cols() != S.rows()) {
    throw std::invalid_argument("nominal internal model: R0 must be 1 x rho");
  }
  InternalModel im;
  im.F = S;
  im.H = R0;
  im.rho = S.rows();
  im.t0 = t0;
  im.provenance = "nominal";
  im.monomials = {Monomial{}};
  im.sigma_init = [rho = im.rho](const Vector&) {
    return Matrix::Identity(rho, rho);
  };
  return im;
}

InternalModel InteractionRobustIM(const MatrixSignal& R0,
                                  const std::vector<MatrixSignal>& R_mu,
                                  const MatrixSignal& S,
                                  const std::vector<std::string>& coords,
                                  double t0) {
  const int p = static_cast<int>(R_mu.size());
  if (static_cast<int>(coords.size()) != p) {
    throw std::invalid_argument("interaction model: one component per coordinate");
  }
  std::vector<MatrixSignal> blocks{R0};
  std::vector<Monomial> monos{Monomial(p, 0)};
  for (int i = 0; i < p; ++i) {
    if (R_mu[i].rows() != 1 || R_mu[i].cols() != S.rows()) {
      throw std::invalid_argument("interaction model: components must be 1 x rho");
    }
    blocks.push_back(R_mu[i]);
    Monomial m(p, 0);
    m[i] = 1;
    monos.push_back(m);
  }
  InternalModel im;
  im.F = BlockDiagonalExo(S, p + 1);
  im.H = BlockRow(blocks);
  im.rho = S.rows();
  im.t0 = t0;
  im.provenance = "interaction_robust";
  im.monomials = monos;
  im.coords = coords;
  im.sigma_init = MonomialSigma(monos, im.rho);
  return im;
}

InteractionComponents SolveInteractionComponents(const UncertainPlant& up,
                                                 const Exosystem& exo,
                                                 const RegulatorOptions& opt) {
  up.Validate();
  for (const auto& ch : up.channels) {
    if (ch.target != Target::kP && ch.target != Target::kQ) {
      throw std::invalid_argument(
          "interaction-robust model needs uncertainty confined to P and Q");
    }
  }
  InteractionComponents out;
  out.nominal = SolveRegulator(up.nominal, exo, opt);
  const auto& R0 = out.nominal.R;
  const auto& dR0 = out.nominal.R_dot;
  for (int i = 0; i < up.dim_mu(); ++i) {
    const double box = up.Box(i);
    Vector mu = Vector::Zero(up.dim_mu());
    mu(i) = box;
    const RegulatorSolution plus = SolveRegulator(up.Instantiate(mu), exo, opt);
    mu(i) = -box;
    const RegulatorSolution minus = SolveRegulator(up.Instantiate(mu), exo, opt);
    std::vector<Matrix> v(R0.size()), d(R0.size());
    double worst = 0.0, scale = 1.0;
    for (size_t k = 0; k < R0.size(); ++k) {
      v[k] = (plus.R[k] - R0[k]) / box;
      d[k] = (plus.R_dot[k] - dR0[k]) / box;
      worst = std::max(worst, (minus.R[k] - (R0[k] - box * v[k])).norm());
      scale = std::max(scale, plus.R[k].norm());
    }
    if (worst > 1e-8 * scale) {
      throw std::runtime_error("regulator output is not affine in " + up.coords[i]);
    }
    out.R_mu.push_back(MatrixSignal::Gridded(out.nominal.grid, v, d));
  }
  return out;
}

namespace {

struct MonoCmp {
  bool operator()(const Monomial& a, const Monomial& b) const {
    return GradedLexLess(a, b);
  }
};
using Poly = std::map<Monomial, MatrixSignal, MonoCmp>;

Monomial AddMono(const Monomial& a, const Monomial& b) {
  Monomial m(a.size());
  for (size_t i = 0; i < a.size(); ++i) m[i] = a[i] + b[i];
  return m;
}

void Accumulate(Poly& p, const Monomial& m, const MatrixSignal& v) {
  if (v.is_zero()) return;
  auto it = p.find(m);
  if (it == p.end()) {
    p.emplace(m, v);
  } else {
    it->second = it->second + v;
  }
}

Poly PolyAdd(const Poly& a, const Poly& b) {
  Poly out = a;
  for (const auto& [m, v] : b) Accumulate(out, m, v);
  return out;
}

Poly PolyMul(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ma, va] : a)
    for (const auto& [mb, vb] : b) Accumulate(out, AddMono(ma, mb), va * vb);
  return out;
}

Poly PolyScale(double s, const Poly& a) {
  Poly out;
  for (const auto& [m, v] : a) Accumulate(out, m, s * v);
  return out;
}

// sum_m |box^m| sup_t ||p_m(t)||, a bound over the whole box.
double PolySup(const Poly& p, const Vector& box, const TimeGrid& grid) {
  double s = 0.0;
  for (const auto& [m, v] : p) {
    if (v.rows() == 0 || v.cols() == 0) continue;
    s += EvalMonomial(m, box) * SupNorm(v, grid);
  }
  return s;
}

// Affine polynomial from a nominal part and per-coordinate perturbations.
Poly AffinePoly(const MatrixSignal& nominal,
                const std::vector<MatrixSignal>& per_coord) {
  const int p = static_cast<int>(per_coord.size());
  Poly out;
  Accumulate(out, Monomial(p, 0), nominal);
  for (int i = 0; i < p; ++i) {
    Monomial m(p, 0);
    m[i] = 1;
    Accumulate(out, m, per_coord[i]);
  }
  return out;
}

// Zero-initialised solution of X' = eta X - X S + forcing on the grid.
MatrixSignal IntegrateForcedSylvester(const MatrixSignal& eta,
                                      const MatrixSignal& S,
                                      const MatrixSignal& forcing,
                                      const TimeGrid& grid) {
  auto f = [&](double t, const Matrix& X) -> Matrix {
    return eta(t) * X - X * S(t) + forcing(t);
  };
  std::vector<Matrix> v(grid.size()), d(grid.size());
  Matrix X = Matrix::Zero(forcing.rows(), forcing.cols());
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.time(k);
    v[k] = X;
    d[k] = f(t, X);
    if (k < grid.steps) X = Rk4Step(f, t, X, grid.dt);
  }
  return MatrixSignal::Gridded(grid, std::move(v), std::move(d));
}

// Samples a signal with its derivative so that it can be evaluated cheaply.
MatrixSignal Materialize(const MatrixSignal& s, const TimeGrid& grid,
                         bool* all_zero) {
  const MatrixSignal ds = s.deriv(1);
  std::vector<Matrix> v(grid.size()), d(grid.size());
  bool zero = true;
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.time(k);
    v[k] = s(t);
    d[k] = ds(t);
    zero = zero && v[k].isZero(0.0);
  }
  *all_zero = zero;
  return MatrixSignal::Gridded(grid, std::move(v), std::move(d));
}

// Parts of one coordinate's perturbation in normal-form coordinates.
struct BiPerturbation {
  MatrixSignal alpha, beta, eta, b, P, Q;
};

void RequireZero(const MatrixSignal& s, const TimeGrid& probe, const char* what) {
  if (s.rows() == 0 || s.cols() == 0 || s.is_zero()) return;
  for (int k = 0; k < probe.size(); ++k) {
    if (!s(probe.time(k)).isZero(0.0)) {
      throw std::invalid_argument(std::string("channel breaks the normal form: ") +
                                  what);
    }
  }
}

std::vector<BiPerturbation> SplitChannels(const UncertainPlant& up, int r,
                                          const TimeGrid& probe) {
  const int n = up.nominal.n();
  const int l = n - r;
  const int rho = up.nominal.rho();
  std::vector<BiPerturbation> out(up.dim_mu());
  for (auto& p : out) {
    p.alpha = MatrixSignal::Zero(1, n);
    p.beta = MatrixSignal::Zero(l, 1);
    p.eta = MatrixSignal::Zero(l, l);
    p.b = MatrixSignal::Zero(1, 1);
    p.P = MatrixSignal::Zero(n, rho);
    p.Q = MatrixSignal::Zero(1, rho);
  }
  for (const auto& ch : up.channels) {
    BiPerturbation& p = out[ch.coord];
    switch (ch.target) {
      case Target::kA:
        if (r > 1) RequireZero(ch.E.block(0, 0, r - 1, n), probe, "chain rows of A");
        p.alpha = p.alpha + ch.E.block(r - 1, 0, 1, n);
        if (l > 0) {
          if (r > 1) RequireZero(ch.E.block(r, 1, l, r - 1), probe, "zero block of A");
          p.beta = p.beta + ch.E.block(r, 0, l, 1);
          p.eta = p.eta + ch.E.block(r, r, l, l);
        }
        break;
      case Target::kB:
        for (int i = 0; i < n; ++i) {
          if (i != r - 1) RequireZero(ch.E.block(i, 0, 1, 1), probe, "rows of B");
        }
        p.b = p.b + ch.E.block(r - 1, 0, 1, 1);
        break;
      case Target::kC:
        throw std::invalid_argument("channel breaks the normal form: C is fixed");
      case Target::kP: p.P = p.P + ch.E; break;
      case Target::kQ: p.Q = p.Q + ch.E; break;
    }
  }
  return out;
}

}  // namespace

double NeumannTailBound(double phi_b, double g1_Nb, int k) {
  if (!(g1_Nb < phi_b)) throw std::invalid_argument("Neumann tail: series diverges");
  return std::pow(g1_Nb / phi_b, k + 1) / (phi_b - g1_Nb);
}

double PeanoBakerTailBound(double phi1, double phi2, double phi3, double tau,
                           int k) {
  double fact = 1.0;
  for (int i = 2; i <= k + 1; ++i) fact *= i;
  return phi1 * std::exp(-(phi2 - phi1 * phi3) * tau) *
         std::pow(phi1 * phi3 * tau, k + 1) / fact;
}

PlantApproxResult PlantApproxIM(const UncertainPlant& up, const Exosystem& exo,
                                const PlantApproxOptions& opt) {
  up.Validate();
  const int r = up.bi_relative_degree;
  if (r < 1) {
    throw std::invalid_argument("plant-approximation model needs a normal-form plant");
  }
  if (opt.k_b < 0 || opt.k_eta < 0) throw std::invalid_argument("negative truncation order");
  const Plant& nom = up.nominal;
  const int n = nom.n();
  const int l = n - r;
  const int rho = nom.rho();
  const int p = up.dim_mu();
  const double t1 = opt.t0 + opt.horizon;
  const ByrnesIsidoriView bi = ExtractByrnesIsidori(nom, r, opt.t0, t1, opt.seed, l > 0);
  const TimeGrid grid = TimeGrid::Covering(opt.t0, t1, opt.step);
  const TimeGrid probe = TimeGrid::Covering(opt.t0, t1, opt.horizon / 2000.0);
  const std::vector<BiPerturbation> pert = SplitChannels(up, r, probe);
  const Monomial one(p, 0);

  // Upper block and the next-row terms are affine in (P, Q).
  auto stacks_of = [&](const MatrixSignal& P, const MatrixSignal& Q) {
    Plant comp = nom;
    comp.P = P;
    comp.Q = Q;
    return AssembleStacks(comp, exo, r, bi.b);
  };
  Poly Pi_u, V;
  {
    const Stacks s0 = stacks_of(nom.P, nom.Q);
    Accumulate(Pi_u, one, -(s0.O_S + s0.Pcal));
    Accumulate(V, one, s0.O_S_next + s0.Pcal_next);
    for (int i = 0; i < p; ++i) {
      if (pert[i].P.is_zero() && pert[i].Q.is_zero()) continue;
      const Stacks si = stacks_of(pert[i].P, pert[i].Q);
      Monomial m = one;
      m[i] = 1;
      Accumulate(Pi_u, m, -(si.O_S + si.Pcal));
      Accumulate(V, m, si.O_S_next + si.Pcal_next);
    }
  }

  std::vector<MatrixSignal> d_alpha, d_beta, d_eta, d_b, d_Pl, d_Q;
  for (const auto& q : pert) {
    d_alpha.push_back(q.alpha);
    d_beta.push_back(q.beta);
    d_eta.push_back(q.eta);
    d_b.push_back(q.b);
    d_Pl.push_back(l > 0 ? q.P.block(r, 0, l, rho) : MatrixSignal::Zero(0, rho));
    d_Q.push_back(q.Q);
  }
  const Poly alpha = AffinePoly(bi.alpha, d_alpha);

  // Lower block: X^(0) from the exact forcing, X^(j) from E_eta X^(j-1).
  Poly Pi_l, forcing;
  if (l > 0) {
    forcing = PolyAdd(AffinePoly(bi.P_l, d_Pl),
                      PolyScale(-1.0, PolyMul(AffinePoly(bi.beta, d_beta),
                                              AffinePoly(bi.Q, d_Q))));
    Poly level;
    for (const auto& [m, F] : forcing) {
      level.emplace(m, IntegrateForcedSylvester(bi.eta, exo.S, F, grid));
    }
    Pi_l = level;
    for (int j = 1; j <= opt.k_eta; ++j) {
      Poly drive;
      for (const auto& [m, X] : level) {
        for (int i = 0; i < p; ++i) {
          if (d_eta[i].is_zero()) continue;
          Monomial mi = m;
          mi[i] += 1;
          Accumulate(drive, mi, d_eta[i] * X);
        }
      }
      Poly next;
      for (const auto& [m, D] : drive) {
        next.emplace(m, IntegrateForcedSylvester(bi.eta, exo.S, D, grid));
      }
      Pi_l = PolyAdd(Pi_l, next);
      level = std::move(next);
    }
  }

  // Z = alpha_u Pi_u + alpha_l Pi_l + V.
  Poly alpha_u, alpha_l;
  for (const auto& [m, a] : alpha) {
    Accumulate(alpha_u, m, a.block(0, 0, 1, r));
    if (l > 0) Accumulate(alpha_l, m, a.block(0, r, 1, l));
  }
  Poly Z = PolyAdd(PolyMul(alpha_u, Pi_u), V);
  if (l > 0) Z = PolyAdd(Z, PolyMul(alpha_l, Pi_l));

  // b^{-1} truncated: b0^{-1} sum_j (-db / b0)^j.
  const MatrixSignal binv0 = bi.b.reciprocal();
  Poly ratio;
  for (int i = 0; i < p; ++i) {
    Monomial m = one;
    m[i] = 1;
    Accumulate(ratio, m, -(d_b[i] * binv0));
  }
  Poly binv, power;
  Accumulate(binv, one, binv0);
  Accumulate(power, one, MatrixSignal::Scalar(1.0));
  for (int j = 1; j <= opt.k_b; ++j) {
    power = PolyMul(power, ratio);
    binv = PolyAdd(binv, PolyMul(Poly{{one, binv0}}, power));
  }
  const Poly R = PolyScale(-1.0, PolyMul(binv, Z));

  PlantApproxResult out;
  out.grid = grid;
  std::vector<Monomial> monos;
  for (const auto& [m, coeff] : R) {
    bool zero = false;
    MatrixSignal g = Materialize(coeff, grid, &zero);
    if (zero) continue;
    monos.push_back(m);
    out.R_blocks.push_back(g);
  }
  if (monos.empty()) {
    monos.push_back(one);
    out.R_blocks.push_back(MatrixSignal::Zero(1, rho));
  }

  InternalModel& im = out.im;
  im.F = BlockDiagonalExo(exo.S, static_cast<int>(monos.size()));
  im.H = BlockRow(out.R_blocks);
  im.rho = rho;
  im.t0 = opt.t0;
  im.provenance = "plant_approx";
  im.monomials = monos;
  im.coords = up.coords;
  im.sigma_init = MonomialSigma(monos, rho);

  // Certificate.
  ApproxIMReport& rep = out.report;
  rep.k_b = opt.k_b;
  rep.k_eta = opt.k_eta;
  rep.monomials = monos;
  rep.phi_S = exo.phi_bound;
  rep.phi_b = INFINITY;
  for (int k = 0; k < probe.size(); ++k) {
    rep.phi_b = std::min(rep.phi_b, std::abs(bi.b(probe.time(k))(0, 0)));
  }
  // g * N is the box-weighted channel norm; g is the widest radius involved.
  Vector box(p);
  double gNb = 0.0, gNeta = 0.0;
  for (int i = 0; i < p; ++i) {
    box(i) = up.Box(i);
    const double nb = SupNorm(d_b[i], probe);
    const double ne = l > 0 ? SupNorm(d_eta[i], probe) : 0.0;
    gNb += box(i) * nb;
    gNeta += box(i) * ne;
    if (nb > 0) rep.g1 = std::max(rep.g1, box(i));
    if (ne > 0) rep.g2 = std::max(rep.g2, box(i));
  }
  rep.N_b = rep.g1 > 0 ? gNb / rep.g1 : 0.0;
  rep.N_eta = rep.g2 > 0 ? gNeta / rep.g2 : 0.0;
  rep.phi1 = l > 0 ? bi.eta_decay.phi1 : 0.0;
  rep.phi2 = l > 0 ? bi.eta_decay.phi2 : 0.0;
  const double c = rep.phi1 * gNeta;
  if (!(gNb < rep.phi_b)) {
    std::ostringstream msg;
    msg << "uncertainty box too large for the gain expansion; shrink mu_box by "
        << "a factor of at least " << gNb / rep.phi_b;
    throw std::runtime_error(msg.str());
  }
  if (l > 0 && !(c < rep.phi2 / 2)) {
    std::ostringstream msg;
    msg << "uncertainty box too large for the zero-dynamics expansion; shrink "
        << "mu_box by a factor of at least " << 2 * c / rep.phi2;
    throw std::runtime_error(msg.str());
  }
  rep.phi_U = l > 0 ? PolySup(forcing, box, probe) : 0.0;
  const double a_sup = PolySup(alpha, box, probe);
  double pi_sup = PolySup(Pi_u, box, probe);
  if (l > 0) pi_sup += rep.phi1 * rep.phi_U * rep.phi_S / (rep.phi2 - c);
  const double z_sup = a_sup * pi_sup + PolySup(V, box, probe);
  rep.phi_prime = std::max(z_sup, a_sup * rep.phi_U * rep.phi_S);
  const double q = gNb / rep.phi_b;
  double tail = std::pow(q, opt.k_b + 1);
  if (l > 0 && c > 0.0) {
    tail += rep.phi1 / (rep.phi2 - c) * std::pow(c / (rep.phi2 - c), opt.k_eta + 1);
  }
  rep.bound_R = rep.phi_prime / (rep.phi_b - gNb) * tail;
  return out;
}

double MeasureApproxError(const InternalModel& im, const UncertainPlant& up,
                          const Exosystem& exo, const std::vector<Vector>& mus,
                          const RegulatorOptions& opt) {
  double worst = 0.0;
  for (const auto& mu : mus) {
    RegulatorOptions o = opt;
    o.path = RegulatorPath::kByrnesIsidori;
    o.initial.reset();
    const RegulatorSolution sol = SolveRegulator(up.Instantiate(mu), exo, o);
    const Matrix sigma = im.sigma_init(mu);
    for (int k = 0; k < sol.grid.size(); ++k) {
      const double t = sol.grid.time(k);
      worst = std::max(worst, (sol.R[k] - im.H(t) * sigma).norm());
    }
  }
  return worst;
}

Matrix ObservabilityGramian(const MatrixSignal& F, const MatrixSignal& H,
                            double t, double delta, double step) {
  const int nu = F.rows();
  // State [Phi; W] with Phi' = F Phi, W' = Phi^T H^T H Phi.
  auto f = [&](double tau, const Matrix& y) -> Matrix {
    const Matrix phi = y.topRows(nu);
    const Matrix hp = H(tau) * phi;
    Matrix out(2 * nu, nu);
    out.topRows(nu) = F(tau) * phi;
    out.bottomRows(nu) = hp.transpose() * hp;
    return out;
  };
  Matrix y = Matrix::Zero(2 * nu, nu);
  y.topRows(nu).setIdentity();
  const int steps = std::max(1, static_cast<int>(std::ceil(delta / step - 1e-9)));
  const double h = delta / steps;
  for (int k = 0; k < steps; ++k) y = Rk4Step(f, t + k * h, y, h);
  const Matrix W = y.bottomRows(nu);
  return 0.5 * (W + W.transpose());
}

double DominantQuasiPeriod(const MatrixSignal& S, double t0, double t1) {
  double omega = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double t = t0 + (t1 - t0) * k / 200.0;
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(S(t)).eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) omega = std::max(omega, std::abs(ev(i).imag()));
  }
  const double two_pi = 2.0 * std::numbers::pi;
  if (omega < 1e-12) return two_pi;
  return std::max(two_pi / omega, two_pi);
}

ObservabilityReport ProbeUniformObservability(const MatrixSignal& F,
                                              const MatrixSignal& H, double t0,
                                              double t1, double delta) {
  ObservabilityReport rep;
  rep.delta = delta;
  rep.min_ratio = INFINITY;
  for (double ts = t0; ts + delta <= t1 + 1e-9; ts += 0.5 * delta) {
    const Matrix W = ObservabilityGramian(F, H, ts, delta);
    const double tr = W.trace();
    const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(W).eigenvalues()(0);
    rep.min_ratio = std::min(rep.min_ratio, tr > 0 ? lmin / tr : 0.0);
    ++rep.windows;
  }
  if (rep.windows == 0) throw std::invalid_argument("observability probe: window longer than horizon");
  rep.uniform = rep.min_ratio >= 1e-6;
  return rep;
}

InternalModel ReduceIM(const InternalModel& im, const TimeGrid& grid,
                       const std::vector<Vector>& mus, double tol,
                       const MatrixSignal& S, ReductionReport* report) {
  const int dim_mu = static_cast<int>(im.coords.size());
  if (static_cast<int>(mus.size()) < dim_mu + 1 || mus.empty()) {
    throw std::invalid_argument("reduction needs at least one more sample than coordinates");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("reduction tolerance must be positive");
  const int nu = im.nu();
  // Weakly observable directions are only reported: dropping them needs a
  // similarity that is constant in time, which a window test cannot certify.
  const double delta = std::min(DominantQuasiPeriod(S, grid.t0, grid.t_end()),
                                grid.t_end() - grid.t0);
  const Matrix W = ObservabilityGramian(im.F, im.H, grid.t0, delta);
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(W).eigenvalues();
  int weak = 0;
  for (int i = 0; i < nu; ++i) weak += ev(i) < 1e-6 * W.trace();

  Matrix stacked(nu, im.rho * mus.size());
  for (size_t j = 0; j < mus.size(); ++j) {
    stacked.block(0, j * im.rho, nu, im.rho) = im.sigma_init(mus[j]);
  }
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeThinU);
  const Vector sv = svd.singularValues();
  int rank = 0;
  while (rank < sv.size() && sv(rank) >= tol * sv(0)) ++rank;
  if (rank == 0) throw std::runtime_error("reduction removed every direction");
  const Matrix V = svd.matrixU().leftCols(rank);

  const auto phi = TransitionAlongGrid(im.F, grid);
  const MatrixSignal dH = im.H.deriv(1);
  std::vector<Matrix> v(grid.size()), d(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.time(k);
    v[k] = im.H(t) * phi[k] * V;
    d[k] = (dH(t) + im.H(t) * im.F(t)) * phi[k] * V;
  }
  InternalModel out;
  out.F = MatrixSignal::Zero(rank, rank);
  out.H = MatrixSignal::Gridded(grid, std::move(v), std::move(d));
  out.rho = im.rho;
  out.t0 = grid.t0;
  out.provenance = "reduced(" + im.provenance + ")";
  out.coords = im.coords;
  out.sigma_init = [V, sig = im.sigma_init](const Vector& mu) -> Matrix {
    return V.transpose() * sig(mu);
  };
  if (report) {
    report->nu_before = nu;
    report->nu_after = rank;
    report->weakly_observable = weak;
    report->gramian_min_ratio = ev(0) / W.trace();
    report->singular_values.assign(sv.data(), sv.data() + sv.size());
  }
  return out;
}

InternalModel ShiftIM(const InternalModel& im, const MatrixSignal& F_new,
                      double t_ref, const TimeGrid& grid) {
  const int nu = im.nu();
  if (F_new.rows() != nu || F_new.cols() != nu) {
    throw std::invalid_argument("shift: generator has the wrong size");
  }
  const double x = (t_ref - grid.t0) / grid.dt;
  const int iref = static_cast<int>(std::lround(x));
  if (iref < 0 || iref > grid.steps || std::abs(x - iref) > 1e-6) {
    throw std::invalid_argument("shift: reference time must be a grid node");
  }
  // Y_k = Phi_F(t_k, t_ref), Z_k = Phi_Fnew(t_ref, t_k).
  auto fy = [&](double t, const Matrix& y) -> Matrix { return im.F(t) * y; };
  auto fz = [&](double t, const Matrix& z) -> Matrix { return -(z * F_new(t)); };
  std::vector<Matrix> Y(grid.size()), Z(grid.size());
  Y[iref] = Z[iref] = Matrix::Identity(nu, nu);
  for (int k = iref; k < grid.steps; ++k) {
    Y[k + 1] = Rk4Step(fy, grid.time(k), Y[k], grid.dt);
    Z[k + 1] = Rk4Step(fz, grid.time(k), Z[k], grid.dt);
  }
  for (int k = iref; k > 0; --k) {
    Y[k - 1] = Rk4Step(fy, grid.time(k), Y[k], -grid.dt);
    Z[k - 1] = Rk4Step(fz, grid.time(k), Z[k], -grid.dt);
  }
  const MatrixSignal dH = im.H.deriv(1);
  std::vector<Matrix> v(grid.size()), d(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.time(k);
    const Matrix H = im.H(t);
    v[k] = H * Y[k] * Z[k];
    d[k] = (dH(t) + H * im.F(t)) * Y[k] * Z[k] - v[k] * F_new(t);
  }
  const Matrix back = Z[0].inverse() * Y[0].inverse();
  InternalModel out;
  out.F = F_new;
  out.H = MatrixSignal::Gridded(grid, std::move(v), std::move(d));
  out.rho = im.rho;
  out.t0 = grid.t0;
  out.provenance = "shifted(" + im.provenance + ")";
  out.monomials = im.monomials;
  out.coords = im.coords;
  out.sigma_init = [back, sig = im.sigma_init](const Vector& mu) -> Matrix {
    return back * sig(mu);
  };
  return out;
}

CanonicalRealization BuildCanonicalRealization(const InternalModel& im,
                                               double alpha, const Matrix& L0,
                                               const TimeGrid& grid,
                                               const MatrixSignal& S,
                                               const RealizationLimits& limits) {
  const int nu = im.nu();
  if (!(alpha > 0.0)) throw std::invalid_argument("canonical realization: alpha must be positive");
  if (L0.rows() != nu || L0.cols() != nu) {
    throw std::invalid_argument("canonical realization: L0 has the wrong size");
  }
  CanonicalRealization cr;
  cr.alpha = alpha;
  cr.grid = grid;
  const double delta = DominantQuasiPeriod(S, grid.t0, grid.t_end());
  cr.observability = ProbeUniformObservability(im.F, im.H, grid.t0, grid.t_end(), delta);
  if (limits.require_observability && !cr.observability.uniform) {
    std::ostringstream msg;
    msg << "internal model is not uniformly observable (min Gramian ratio "
        << cr.observability.min_ratio << ")";
    throw std::runtime_error(msg.str());
  }
  cr.F_im = -alpha * MatrixSignal::Identity(nu) - im.F.transpose();
  cr.G_im = im.H.transpose();
  auto rhs = [&](double t, const Matrix& L) -> Matrix {
    const Matrix H = im.H(t);
    return cr.F_im(t) * L + H.transpose() * H - L * im.F(t);
  };
  const MatrixSignal dH = im.H.deriv(1);
  std::vector<Matrix> hv(grid.size()), hd(grid.size());
  cr.L_values.resize(grid.size());
  std::vector<Matrix> Ld(grid.size());
  Matrix L = L0;
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.time(k);
    const Eigen::PartialPivLU<Matrix> lu(L);
    const Matrix Linv = lu.inverse();
    const Matrix H = im.H(t);
    const Matrix dL = rhs(t, L);
    hv[k] = H * Linv;
    hd[k] = dH(t) * Linv - hv[k] * dL * Linv;
    if (k % 10 == 0 || k == grid.steps) {
      const Vector sv = Eigen::JacobiSVD<Matrix>(L).singularValues();
      const double cond = sv(0) / sv(sv.size() - 1);
      if (!(cond <= limits.max_condition)) {
        std::ostringstream msg;
        msg << "canonical realization: L(t) condition number " << cond
            << " exceeds " << limits.max_condition << " at t = " << t;
        throw std::runtime_error(msg.str());
      }
      cr.max_condition = std::max(cr.max_condition, cond);
    }
    cr.L_values[k] = L;
    Ld[k] = dL;
    if (k < grid.steps) L = Rk4Step(rhs, t, L, grid.dt);
  }
  cr.L = MatrixSignal::Gridded(grid, cr.L_values, std::move(Ld));
  cr.H_im = MatrixSignal::Gridded(grid, std::move(hv), std::move(hd));
  InternalModel& re = cr.realized;
  re.F = cr.F_im + cr.G_im * cr.H_im;
  re.H = cr.H_im;
  re.rho = im.rho;
  re.t0 = grid.t0;
  re.provenance = "canonical(" + im.provenance + ")";
  re.monomials = im.monomials;
  re.coords = im.coords;
  re.sigma_init = [L0, sig = im.sigma_init](const Vector& mu) -> Matrix {
    return L0 * sig(mu);
  };
  return cr;
}

std::vector<PropagationFit> VerifyPropagation(
    const InternalModel& im, const std::vector<PropagationSample>& samples,
    const MatrixSignal& S, const TimeGrid& grid) {
  const int nu = im.nu();
  const int rho = im.rho;
  const auto phiS = TransitionAlongGrid(S, grid);
  const auto phiF = TransitionAlongGrid(im.F, grid);
  Matrix design(grid.size(), nu);
  for (int k = 0; k < grid.size(); ++k) {
    design.row(k) = im.H(grid.time(k)) * phiF[k];
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
  std::vector<PropagationFit> out;
  for (const auto& s : samples) {
    if (static_cast<int>(s.R.size()) != grid.size()) {
      throw std::invalid_argument("propagation check: sample does not match the grid");
    }
    Matrix target(grid.size(), rho);
    for (int k = 0; k < grid.size(); ++k) target.row(k) = s.R[k] * phiS[k];
    PropagationFit fit;
    fit.sigma = cod.solve(target);
    const Matrix resid = target - design * fit.sigma;
    for (int k = 0; k < grid.size(); ++k) {
      fit.residual = std::max(fit.residual, resid.row(k).norm());
    }
    out.push_back(std::move(fit));
  }
  return out;
}

}  // namespace ltvreg
