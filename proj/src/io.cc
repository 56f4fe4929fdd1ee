#include "ltvreg/io.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace ltvreg {

namespace {

void Num(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

template <class Row>
std::string Rows(const std::string& header, int count, int every, const Row& row) {
  if (every < 1) throw std::invalid_argument("row stride must be positive");
  std::string out = header + "\n";
  for (int k = 0; k < count; k += every) {
    row(out, k);
    out += "\n";
    if (k + every >= count && k != count - 1) {
      row(out, count - 1);
      out += "\n";
    }
  }
  return out;
}

void Entries(std::string& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out += ",";
      Num(out, m(i, j));
    }
  }
}

std::string Names(const std::string& base, int rows, int cols) {
  std::string s;
  for (int i = 1; i <= rows; ++i) {
    for (int j = 1; j <= cols; ++j) {
      s += "," + base + "_" + std::to_string(i) + std::to_string(j);
    }
  }
  return s;
}

Json Optional(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string TraceCsv(const SimulationTrace& tr, int every) {
  const int rho = tr.w.empty() ? 0 : static_cast<int>(tr.w[0].size());
  const int n = tr.x.empty() ? 0 : static_cast<int>(tr.x[0].size());
  const int nu = tr.xi.empty() ? 0 : static_cast<int>(tr.xi[0].size());
  std::string header = "t";
  for (int i = 1; i <= rho; ++i) header += ",w" + std::to_string(i);
  for (int i = 1; i <= n; ++i) header += ",x" + std::to_string(i);
  for (int i = 1; i <= nu; ++i) header += ",xi" + std::to_string(i);
  header += ",u,e";
  return Rows(header, static_cast<int>(tr.e.size()), every, [&](std::string& out, int k) {
    Num(out, tr.grid.time(k));
    Entries(out, tr.w[k]);
    Entries(out, tr.x[k]);
    Entries(out, tr.xi[k]);
    out += ",";
    Num(out, tr.u[k]);
    out += ",";
    Num(out, tr.e[k]);
  });
}

Json MetricsJson(const Metrics& m, const Vector& mu, const std::string& hash) {
  Json j;
  j["tail_sup_error"] = m.tail_sup_error;
  j["decay_exponent"] = m.decay_exponent ? Optional(*m.decay_exponent) : Json(nullptr);
  j["bounded"] = m.bounded;
  j["mu"] = std::vector<double>(mu.data(), mu.data() + mu.size());
  j["config_hash"] = hash;
  return j;
}

std::string RegulatorCsv(const RegulatorSolution& sol, int every) {
  const int n = static_cast<int>(sol.Pi[0].rows());
  const int rho = static_cast<int>(sol.Pi[0].cols());
  std::string header = "t" + Names("Pi", n, rho);
  for (int j = 1; j <= rho; ++j) header += ",R_" + std::to_string(j);
  return Rows(header, sol.grid.size(), every, [&](std::string& out, int k) {
    Num(out, sol.grid.time(k));
    Entries(out, sol.Pi[k]);
    Entries(out, sol.R[k]);
  });
}

Json RegulatorJson(const RegulatorSolution& sol) {
  Json j;
  j["residual_re1"] = sol.residual_re1;
  j["residual_re2"] = sol.residual_re2;
  j["sup_pi"] = sol.sup_pi;
  j["bounded"] = sol.bounded;
  j["washout"] = sol.washout;
  j["relative_degree"] = sol.r;
  j["normal_form_path"] = sol.normal_form_path;
  if (sol.decay_known) j["decay"] = {{"phi1", sol.decay.phi1}, {"phi2", sol.decay.phi2}};
  j["diagnostic"] = sol.diagnostic;
  j["pi_initial"] = MatrixToJson(sol.Pi_initial);
  return j;
}

std::string GridCsv(const std::string& name, const MatrixSignal& s, const TimeGrid& grid,
                    int every) {
  return Rows("t" + Names(name, s.rows(), s.cols()), grid.size(), every,
              [&](std::string& out, int k) {
                const double t = grid.time(k);
                Num(out, t);
                Entries(out, s(t));
              });
}

Json MatrixToJson(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix MatrixFromJson(const Json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  Matrix m(rows, cols);
  const Json& d = j.at("data");
  if (static_cast<int>(d.size()) != rows) throw std::invalid_argument("matrix JSON: row count");
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(d[i].size()) != cols) throw std::invalid_argument("matrix JSON: column count");
    for (int k = 0; k < cols; ++k) m(i, k) = d[i][k].get<double>();
  }
  return m;
}

Json InternalModelJson(const InternalModel& im) {
  Json j;
  j["nu"] = im.nu();
  j["rho"] = im.rho;
  j["t0"] = im.t0;
  j["provenance"] = im.provenance;
  Json blocks = Json::array();
  for (const Monomial& m : im.monomials) {
    blocks.push_back({{"monomial", m}, {"name", MonomialName(m, im.coords)}});
  }
  j["blocks"] = blocks;
  j["coords"] = im.coords;
  return j;
}

Json RealizationJson(const CanonicalRealization& cr) {
  Json j;
  j["alpha_cr"] = cr.alpha;
  j["max_condition"] = cr.max_condition;
  j["observability"] = {{"delta", cr.observability.delta},
                        {"min_ratio", cr.observability.min_ratio},
                        {"uniform", cr.observability.uniform},
                        {"windows", cr.observability.windows}};
  j["L0"] = MatrixToJson(cr.L_values.empty() ? Matrix() : cr.L_values.front());
  j["realized"] = InternalModelJson(cr.realized);
  return j;
}

Json ControllerJson(const Controller& c) {
  Json j;
  j["r"] = c.r;
  j["nu_im"] = c.nu_im;
  j["dim"] = c.dim();
  j["k"] = c.params.k;
  j["g"] = c.params.g;
  j["d"] = c.params.d;
  j["K"] = MatrixToJson(c.params.K);
  j["sign_b"] = c.params.sign_b;
  j["M_g"] = MatrixToJson(c.M_g);
  j["L_g"] = MatrixToJson(c.L_g);
  // Time-varying blocks live in the CSV grids; these are samples at t = 0.
  j["F_at_0"] = MatrixToJson(c.F(0.0));
  j["G_at_0"] = MatrixToJson(c.G(0.0));
  j["H_at_0"] = MatrixToJson(c.H(0.0));
  return j;
}

void WriteText(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path);
}

void WriteJson(const std::string& path, const Json& j) { WriteText(path, j.dump(2) + "\n"); }

}  // namespace ltvreg
