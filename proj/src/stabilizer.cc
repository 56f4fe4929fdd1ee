#include "ltvreg/stabilizer.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ltvreg {

namespace {

// Companion matrix of s^m + c_{m-1} s^{m-1} + ... + c_0.
Matrix Companion(const std::vector<double>& c) {
  const int m = static_cast<int>(c.size());
  Matrix out = Matrix::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) out(i, i + 1) = 1.0;
  for (int j = 0; j < m; ++j) out(m - 1, j) = -c[j];
  return out;
}

bool Hurwitz(const Matrix& A) {
  if (A.size() == 0) return true;
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(A).eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!(ev(i).real() < 0.0)) return false;
  }
  return true;
}

Matrix BrunovskyClosedLoop(const Matrix& K) {
  const int m = static_cast<int>(K.cols());
  Matrix A = Matrix::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) A(i, i + 1) = 1.0;
  if (m > 0) A.row(m - 1) += K.row(0);
  return A;
}

}  // namespace

std::vector<double> DefaultHurwitz(int r) {
  if (r < 1) throw std::invalid_argument("Hurwitz coefficients need r >= 1");
  std::vector<double> d(r);
  // Coefficient of s^j in (s + 1)^r.
  double c = 1.0;
  for (int j = 0; j < r; ++j) {
    d[j] = c;
    c = c * (r - j) / (j + 1);
  }
  return d;
}

Matrix BrunovskyGain(int r, const std::vector<double>& poles) {
  if (r < 1) throw std::invalid_argument("Brunovsky gain needs r >= 1");
  if (static_cast<int>(poles.size()) != r - 1) {
    throw std::invalid_argument("Brunovsky gain needs r - 1 poles");
  }
  std::vector<double> poly{1.0};  // lowest degree first
  for (double p : poles) {
    if (!(p < 0.0)) throw std::invalid_argument("Brunovsky gain: poles must be negative");
    std::vector<double> next(poly.size() + 1, 0.0);
    for (size_t i = 0; i < poly.size(); ++i) {
      next[i + 1] += poly[i];
      next[i] -= p * poly[i];
    }
    poly = std::move(next);
  }
  Matrix K(1, r - 1);
  for (int j = 0; j < r - 1; ++j) K(0, j) = -poly[j];
  return K;
}

Matrix DefaultBrunovskyGain(int r) {
  std::vector<double> poles;
  for (int i = 1; i < r; ++i) poles.push_back(-static_cast<double>(i));
  return BrunovskyGain(r, poles);
}

void ValidateHighGain(const HighGainParams& p, int r) {
  if (static_cast<int>(p.d.size()) != r) {
    throw std::invalid_argument("high-gain parameters: need r Hurwitz coefficients");
  }
  if (!Hurwitz(Companion(p.d))) {
    throw std::invalid_argument("high-gain parameters: d is not Hurwitz");
  }
  if (!(p.g > 1.0)) throw std::invalid_argument("high-gain parameters: g must exceed 1");
  if (!(p.k >= 0.0)) throw std::invalid_argument("high-gain parameters: k must be non-negative");
  if (p.sign_b != 1 && p.sign_b != -1) {
    throw std::invalid_argument("high-gain parameters: sign_b must be +1 or -1");
  }
  if (p.K.rows() != 1 || p.K.cols() != r - 1) {
    throw std::invalid_argument("high-gain parameters: K must be 1 x (r - 1)");
  }
  if (!Hurwitz(BrunovskyClosedLoop(p.K))) {
    throw std::invalid_argument("high-gain parameters: A_b + B_b K is not Hurwitz");
  }
}

Controller BuildController(const CanonicalRealization& cr, int r,
                           const HighGainParams& params) {
  ValidateHighGain(params, r);
  const int nu = cr.realized.nu();
  if (cr.G_im.rows() != nu || cr.H_im.cols() != nu) {
    throw std::invalid_argument("controller: realization blocks disagree in size");
  }
  Controller c;
  c.r = r;
  c.nu_im = nu;
  c.params = params;
  c.M_g = Matrix::Zero(r, r);
  c.L_g = Matrix::Zero(r, 1);
  for (int i = 0; i < r; ++i) {
    const double gd = params.g * params.d[r - 1 - i];
    c.M_g(i, 0) = -gd;
    c.L_g(i, 0) = gd;
    if (i + 1 < r) c.M_g(i, i + 1) = 1.0;
  }
  Matrix kvec(1, r);  // (-K 1)
  kvec.leftCols(r - 1) = -params.K;
  kvec(0, r - 1) = 1.0;
  const double ks = -params.k * params.sign_b;

  const MatrixSignal Mg = MatrixSignal::Constant(c.M_g);
  const MatrixSignal coupling = (ks * cr.G_im) * MatrixSignal::Constant(kvec);
  c.F = MatrixSignal::Blocks({{Mg, MatrixSignal::Zero(r, nu)},
                              {coupling, cr.realized.F}});
  c.G = MatrixSignal::Blocks({{MatrixSignal::Constant(c.L_g)}, {MatrixSignal::Zero(nu, 1)}});
  c.H = MatrixSignal::Blocks({{MatrixSignal::Constant(ks * kvec), cr.H_im}});
  return c;
}

double EnvelopeExponent(const std::vector<double>& t, const std::vector<double>& norms) {
  const int n = static_cast<int>(t.size());
  if (n < 2 || static_cast<int>(norms.size()) != n) {
    throw std::invalid_argument("exponent fit needs matching samples");
  }
  const int windows = std::min(50, n);
  std::vector<double> xs, ys;
  for (int w = 0; w < windows; ++w) {
    const int a = w * n / windows;
    const int b = (w + 1) * n / windows;
    double env = 0.0;
    for (int i = a; i < b; ++i) env = std::max(env, norms[i]);
    if (env <= 0.0 || !std::isfinite(env)) continue;
    xs.push_back(0.5 * (t[a] + t[b - 1]));
    ys.push_back(std::log(env));
  }
  if (xs.size() < 2) return -INFINITY;
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

namespace {

struct ProbeRun {
  std::vector<double> exponents;
  std::vector<double> final_ratio;
  bool diverged{false};
};

// Integrates all trials at once as the columns of one matrix. Norms are
// recorded every `stride` steps for the envelope fit.
ProbeRun RunTrials(const MatrixSignal& A, const Matrix& X0, double t0,
                   double horizon, double step) {
  const int steps = std::max(1, static_cast<int>(std::ceil(horizon / step - 1e-9)));
  const double h = horizon / steps;
  const int stride = std::max(1, steps / 2000);
  auto f = [&](double t, const Matrix& X) -> Matrix { return A(t) * X; };
  const int m = static_cast<int>(X0.cols());
  std::vector<double> ts;
  std::vector<std::vector<double>> norms(m);
  ProbeRun run;
  Matrix X = X0;
  for (int k = 0; k <= steps; ++k) {
    const double t = t0 + k * h;
    if (k % stride == 0 || k == steps) {
      ts.push_back(t);
      for (int j = 0; j < m; ++j) norms[j].push_back(X.col(j).norm());
    }
    if (k == steps) break;
    X = Rk4Step(f, t, X, h);
    if (!X.allFinite() || X.cwiseAbs().maxCoeff() > 1e12) {
      run.diverged = true;
      ts.push_back(t + h);
      for (int j = 0; j < m; ++j) norms[j].push_back(X.col(j).norm());
      break;
    }
  }
  for (int j = 0; j < m; ++j) {
    run.exponents.push_back(run.diverged ? INFINITY : EnvelopeExponent(ts, norms[j]));
    run.final_ratio.push_back(norms[j].back() / X0.col(j).norm());
  }
  return run;
}

}  // namespace

UasReport ProbeUas(const MatrixSignal& A, const UasOptions& opt) {
  const int n = A.rows();
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  Matrix X0(n, opt.trials);
  for (int j = 0; j < opt.trials; ++j) {
    for (int i = 0; i < n; ++i) X0(i, j) = nd(rng);
    X0.col(j).normalize();
  }
  UasReport rep;
  const ProbeRun pilot = RunTrials(A, X0.leftCols(1), opt.t0, opt.pilot, opt.step);
  if (pilot.diverged) {
    rep.diverged = true;
    rep.horizon = opt.pilot;
    rep.exponents = pilot.exponents;
    rep.worst_exponent = INFINITY;
    rep.worst_final_ratio = INFINITY;
    return rep;
  }
  const double rate = pilot.exponents[0];
  rep.horizon = rate < 0.0 ? std::min(40.0 / std::abs(rate), opt.max_horizon)
                           : opt.max_horizon;
  rep.horizon = std::max(rep.horizon, opt.pilot);
  const ProbeRun run = RunTrials(A, X0, opt.t0, rep.horizon, opt.step);
  rep.exponents = run.exponents;
  rep.diverged = run.diverged;
  rep.worst_exponent = *std::max_element(run.exponents.begin(), run.exponents.end());
  rep.worst_final_ratio = *std::max_element(run.final_ratio.begin(), run.final_ratio.end());
  rep.pass = !rep.diverged && rep.worst_exponent <= -1e-3 && rep.worst_final_ratio <= 1e-4;
  return rep;
}

AutotuneResult AutotuneGains(
    const std::function<MatrixSignal(const HighGainParams&, const Vector&)>& factory,
    const HighGainParams& start, const std::vector<Vector>& mus,
    int max_doublings, const UasOptions& opt) {
  if (mus.empty()) throw std::invalid_argument("autotune needs at least one mu");
  AutotuneResult out;
  out.params = start;
  double best = INFINITY;
  for (int attempt = 0; attempt <= max_doublings; ++attempt) {
    const HighGainParams& p = out.params;
    UasOptions o = opt;
    // Keep RK4 inside its stability region for the fastest observer pole.
    const double dmax = *std::max_element(p.d.begin(), p.d.end());
    o.step = std::min(opt.step, 2.0 / (p.g * dmax));
    double worst = -INFINITY;
    bool pass = true;
    for (const auto& mu : mus) {
      const UasReport rep = ProbeUas(factory(p, mu), o);
      worst = std::max(worst, rep.worst_exponent);
      if (!rep.pass) {
        pass = false;
        break;
      }
    }
    out.history.push_back(worst);
    best = std::min(best, worst);
    if (pass) {
      out.doublings = attempt;
      return out;
    }
    if (attempt % 2 == 0) {
      out.params.k *= 2.0;
    } else {
      out.params.g *= 2.0;
    }
  }
  std::ostringstream msg;
  msg << "gain autotuning exhausted " << max_doublings
      << " doublings; best worst-case exponent " << best;
  throw std::runtime_error(msg.str());
}

}  // namespace ltvreg
