#include "ltvreg/config.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ltvreg {

namespace {

const std::vector<std::string> kPlantKeys = {"A", "B", "C", "alpha", "beta", "eta", "b", "P", "Q"};
const std::vector<std::string> kTargets = {"A", "B", "C", "P", "Q", "alpha", "beta", "eta", "b", "Pu", "Pl"};

std::string Trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

bool MentionsT(const Expr& e) {
  if (e.kind == Expr::Kind::kSymbol && e.name == "t") return true;
  return std::any_of(e.args.begin(), e.args.end(), MentionsT);
}

[[noreturn]] void Fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double Number(const std::string& text, int line) {
  Expr e;
  try {
    e = ParseExpr(text);
  } catch (const std::invalid_argument& err) {
    Fail(line, err.what());
  }
  if (MentionsT(e)) Fail(line, "expected a constant, got a function of t");
  return CompileExpr(e)(0.0)(0, 0);
}

int Integer(const std::string& text, int line) {
  const double v = Number(text, line);
  if (v != std::floor(v) || std::abs(v) > 1e9) Fail(line, "expected an integer");
  return static_cast<int>(v);
}

std::vector<double> NumberList(const std::string& text, int line) {
  std::string inner = text;
  if (!inner.empty() && inner.front() == '[') {
    if (inner.back() != ']') Fail(line, "unterminated list");
    inner = Trim(inner.substr(1, inner.size() - 2));
  }
  std::vector<double> out;
  if (inner.empty()) return out;
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = Trim(item);
    if (t.empty()) Fail(line, "empty list entry");
    if (t.front() == '[') Fail(line, "expected a flat list");
    out.push_back(Number(t, line));
  }
  return out;
}

bool Boolean(const std::string& text, int line) {
  if (text == "true") return true;
  if (text == "false") return false;
  Fail(line, "expected true or false");
}

MatrixExpr MatrixValue(const std::string& text, int line) {
  try {
    return ParseMatrixExpr(text);
  } catch (const std::invalid_argument& err) {
    Fail(line, err.what());
  }
}

std::string List(const std::vector<double>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += FormatDouble(v[i]);
  }
  return s + "]";
}

std::string Dims(int r, int c) { return std::to_string(r) + "x" + std::to_string(c); }

void ExpectDims(const std::string& what, const MatrixExpr& m, int rows, int cols) {
  if (m.rows != rows || m.cols != cols) {
    throw ConfigError(what + " must be " + Dims(rows, cols) + ", got " + Dims(m.rows, m.cols));
  }
}

Vector ToVector(const std::vector<double>& v, int size) {
  if (v.empty()) return Vector::Zero(size);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

MatrixSignal Compile(const MatrixExpr& m) { return CompileMatrixExpr(m); }

}  // namespace

bool ExperimentConfig::normal_form() const { return Find("alpha") != nullptr; }

const MatrixExpr* ExperimentConfig::Find(const std::string& key) const {
  for (const auto& [k, v] : plant) {
    if (k == key) return &v;
  }
  return nullptr;
}

int ExperimentConfig::n() const {
  if (const MatrixExpr* a = Find("A")) return a->rows;
  if (const MatrixExpr* a = Find("alpha")) return a->cols;
  return 0;
}

ExperimentConfig ParseConfig(std::string_view text) {
  ExperimentConfig cfg;
  cfg.plant.clear();
  std::set<std::string> seen;
  std::vector<std::pair<std::string, MatrixExpr>> plant;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string stripped = Trim(raw);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) Fail(line, "expected key = value");
    const std::string key = Trim(stripped.substr(0, eq));
    const std::string val = Trim(stripped.substr(eq + 1));
    if (key.empty()) Fail(line, "missing key");
    if (val.empty()) Fail(line, "missing value for " + key);
    if (!seen.insert(key).second) Fail(line, "duplicate key " + key);

    if (key == "name") {
      cfg.name = val;
    } else if (key == "seed") {
      if (val.find_first_not_of("0123456789") != std::string::npos) Fail(line, "seed must be an unsigned integer");
      try {
        cfg.seed = std::stoull(val);
      } catch (const std::exception&) {
        Fail(line, "seed out of range");
      }
    } else if (key == "S") {
      cfg.S = MatrixValue(val, line);
    } else if (key == "t0") {
      cfg.t0 = Number(val, line);
    } else if (key == "relative_degree") {
      cfg.relative_degree = Integer(val, line);
    } else if (std::find(kPlantKeys.begin(), kPlantKeys.end(), key) != kPlantKeys.end()) {
      plant.emplace_back(key, MatrixValue(val, line));
    } else if (key.rfind("mu.", 0) == 0) {
      const std::string name = key.substr(3);
      if (name.empty() || name.find('.') != std::string::npos) Fail(line, "bad coordinate name");
      cfg.coords.emplace_back(name, Number(val, line));
    } else if (key.rfind("channel.", 0) == 0) {
      const std::string rest = key.substr(8);
      const auto dot = rest.rfind('.');
      if (dot == std::string::npos || dot == 0) Fail(line, "expected channel.<coord>.<target>");
      ChannelSpec ch{rest.substr(0, dot), rest.substr(dot + 1), MatrixValue(val, line)};
      if (std::find(kTargets.begin(), kTargets.end(), ch.target) == kTargets.end()) {
        Fail(line, "unknown channel target " + ch.target);
      }
      cfg.channels.push_back(std::move(ch));
    } else if (key == "controller") {
      if (val != "nominal" && val != "interaction_robust" && val != "plant_approx") {
        Fail(line, "controller must be nominal, interaction_robust or plant_approx");
      }
      cfg.recipe = val;
    } else if (key == "k_b") {
      cfg.k_b = Integer(val, line);
    } else if (key == "k_eta") {
      cfg.k_eta = Integer(val, line);
    } else if (key == "alpha_cr") {
      cfg.alpha_cr = Number(val, line);
    } else if (key == "k") {
      cfg.k = Number(val, line);
    } else if (key == "g") {
      cfg.g = Number(val, line);
    } else if (key == "d") {
      cfg.d = NumberList(val, line);
    } else if (key == "K") {
      cfg.K = NumberList(val, line);
    } else if (key == "autotune") {
      cfg.autotune = Boolean(val, line);
    } else if (key == "max_condition") {
      cfg.max_condition = Number(val, line);
    } else if (key == "require_observability") {
      cfg.require_observability = Boolean(val, line);
    } else if (key == "reduce_tol") {
      cfg.reduce_tol = Number(val, line);
    } else if (key == "mu") {
      cfg.mu = NumberList(val, line);
    } else if (key == "w0") {
      cfg.w0 = NumberList(val, line);
    } else if (key == "x0") {
      cfg.x0 = NumberList(val, line);
    } else if (key == "horizon") {
      cfg.horizon = Number(val, line);
    } else if (key == "step") {
      cfg.step = Number(val, line);
    } else if (key == "out") {
      cfg.out = val;
    } else if (key == "formats") {
      cfg.formats.clear();
      std::stringstream ss(val);
      std::string f;
      while (std::getline(ss, f, ',')) {
        f = Trim(f);
        if (f != "csv" && f != "json") Fail(line, "formats are csv and json");
        cfg.formats.push_back(f);
      }
    } else {
      Fail(line, "unknown key " + key);
    }
  }
  // Canonical plant key order, whatever order the file used.
  for (const std::string& k : kPlantKeys) {
    for (auto& p : plant) {
      if (p.first == k) cfg.plant.push_back(std::move(p));
    }
  }
  CheckDimensions(cfg);
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ParseConfig(ss.str());
}

std::string SerializeConfig(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "name = " << c.name << "\n";
  o << "seed = " << c.seed << "\n";
  o << "S = " << c.S.ToString() << "\n";
  o << "t0 = " << FormatDouble(c.t0) << "\n";
  o << "relative_degree = " << c.relative_degree << "\n";
  for (const auto& [k, m] : c.plant) o << k << " = " << m.ToString() << "\n";
  for (const auto& [name, box] : c.coords) o << "mu." << name << " = " << FormatDouble(box) << "\n";
  for (const ChannelSpec& ch : c.channels) {
    o << "channel." << ch.coord << "." << ch.target << " = " << ch.E.ToString() << "\n";
  }
  o << "controller = " << c.recipe << "\n";
  o << "k_b = " << c.k_b << "\n";
  o << "k_eta = " << c.k_eta << "\n";
  o << "alpha_cr = " << FormatDouble(c.alpha_cr) << "\n";
  o << "k = " << FormatDouble(c.k) << "\n";
  o << "g = " << FormatDouble(c.g) << "\n";
  o << "d = " << List(c.d) << "\n";
  o << "K = " << List(c.K) << "\n";
  o << "autotune = " << (c.autotune ? "true" : "false") << "\n";
  o << "max_condition = " << FormatDouble(c.max_condition) << "\n";
  o << "require_observability = " << (c.require_observability ? "true" : "false") << "\n";
  o << "reduce_tol = " << FormatDouble(c.reduce_tol) << "\n";
  o << "mu = " << List(c.mu) << "\n";
  o << "w0 = " << List(c.w0) << "\n";
  o << "x0 = " << List(c.x0) << "\n";
  o << "horizon = " << FormatDouble(c.horizon) << "\n";
  o << "step = " << FormatDouble(c.step) << "\n";
  o << "out = " << c.out << "\n";
  o << "formats = ";
  for (size_t i = 0; i < c.formats.size(); ++i) o << (i ? ", " : "") << c.formats[i];
  o << "\n";
  return o.str();
}

std::string ConfigHash(const ExperimentConfig& cfg) {
  const std::string text = SerializeConfig(cfg);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

void CheckDimensions(const ExperimentConfig& c) {
  if (c.S.rows == 0) throw ConfigError("S is missing");
  ExpectDims("S", c.S, c.S.rows, c.S.rows);
  const int rho = c.rho();
  const int r = c.relative_degree;
  if (r < 0) throw ConfigError("relative_degree must be non-negative");
  int n = 0;
  if (c.normal_form()) {
    if (c.Find("A") || c.Find("B") || c.Find("C")) {
      throw ConfigError("give either A, B, C or alpha, beta, eta, b, not both");
    }
    if (r < 1) throw ConfigError("normal-form plants need relative_degree >= 1");
    for (const char* k : {"b", "P", "Q"}) {
      if (!c.Find(k)) throw ConfigError(std::string(k) + " is missing");
    }
    n = c.Find("alpha")->cols;
    ExpectDims("alpha", *c.Find("alpha"), 1, n);
    if (n < r) throw ConfigError("alpha is shorter than the relative degree");
    if (n > r) {
      if (!c.Find("beta") || !c.Find("eta")) throw ConfigError("beta and eta are needed when n > r");
      ExpectDims("beta", *c.Find("beta"), n - r, 1);
      ExpectDims("eta", *c.Find("eta"), n - r, n - r);
    } else if (c.Find("beta") || c.Find("eta")) {
      throw ConfigError("beta and eta must be absent when n = r");
    }
    ExpectDims("b", *c.Find("b"), 1, 1);
  } else {
    for (const char* k : {"A", "B", "C", "P", "Q"}) {
      if (!c.Find(k)) throw ConfigError(std::string(k) + " is missing");
    }
    if (c.Find("beta") || c.Find("eta") || c.Find("b")) {
      throw ConfigError("beta, eta and b belong to the normal form; give alpha as well");
    }
    n = c.Find("A")->rows;
    ExpectDims("A", *c.Find("A"), n, n);
    ExpectDims("B", *c.Find("B"), n, 1);
    ExpectDims("C", *c.Find("C"), 1, n);
    if (r > n) throw ConfigError("relative_degree exceeds the plant order");
  }
  ExpectDims("P", *c.Find("P"), n, rho);
  ExpectDims("Q", *c.Find("Q"), 1, rho);

  std::set<std::string> names;
  for (const auto& [name, box] : c.coords) {
    if (!names.insert(name).second) throw ConfigError("coordinate " + name + " declared twice");
    if (!(box > 0.0)) throw ConfigError("box radius of " + name + " must be positive");
  }
  std::set<std::pair<std::string, std::string>> used;
  for (const ChannelSpec& ch : c.channels) {
    const std::string what = "channel." + ch.coord + "." + ch.target;
    if (!names.count(ch.coord)) throw ConfigError(what + ": undeclared coordinate");
    if (!used.insert({ch.coord, ch.target}).second) throw ConfigError(what + " given twice");
    const std::string& t = ch.target;
    if (t == "A") ExpectDims(what, ch.E, n, n);
    if (t == "B") ExpectDims(what, ch.E, n, 1);
    if (t == "C") ExpectDims(what, ch.E, 1, n);
    if (t == "P") ExpectDims(what, ch.E, n, rho);
    if (t == "Q") ExpectDims(what, ch.E, 1, rho);
    if (t == "alpha" || t == "beta" || t == "eta" || t == "b" || t == "Pu" || t == "Pl") {
      if (r < 1) throw ConfigError(what + ": normal-form channels need relative_degree");
      if (t == "alpha") ExpectDims(what, ch.E, 1, n);
      if (t == "beta") ExpectDims(what, ch.E, n - r, 1);
      if (t == "eta") ExpectDims(what, ch.E, n - r, n - r);
      if (t == "b") ExpectDims(what, ch.E, 1, 1);
      if (t == "Pu") ExpectDims(what, ch.E, r, rho);
      if (t == "Pl") ExpectDims(what, ch.E, n - r, rho);
    }
  }

  if (c.k_b < 0 || c.k_eta < 0) throw ConfigError("truncation orders must be non-negative");
  if (!(c.alpha_cr > 0.0)) throw ConfigError("alpha_cr must be positive");
  if (!(c.max_condition > 1.0)) throw ConfigError("max_condition must exceed 1");
  if (c.reduce_tol < 0.0) throw ConfigError("reduce_tol must be non-negative");
  if (!(c.horizon > 0.0) || !(c.step > 0.0)) throw ConfigError("horizon and step must be positive");
  if (!c.mu.empty() && c.mu.size() != c.coords.size()) {
    throw ConfigError("mu has " + std::to_string(c.mu.size()) + " entries for " +
                      std::to_string(c.coords.size()) + " coordinates");
  }
  if (!c.w0.empty() && static_cast<int>(c.w0.size()) != rho) throw ConfigError("w0 must have rho entries");
  if (!c.x0.empty() && static_cast<int>(c.x0.size()) != n) throw ConfigError("x0 must have n entries");
  if (r > 0) {
    if (!c.d.empty() && static_cast<int>(c.d.size()) != r) throw ConfigError("d must have r entries");
    if (!c.K.empty() && static_cast<int>(c.K.size()) != r - 1) throw ConfigError("K must have r - 1 entries");
  }
  if (c.formats.empty()) throw ConfigError("formats must not be empty");
}

ExperimentConfig BuiltinConfig(const std::string& id) {
  const char* common = R"(S = [[0, 1], [-1.6 - 0.2*(cos(2*t) + cos(sqrt(2)*t)), 0]]
relative_degree = 1
A = [[1, -2.6], [1, -1]]
B = [[1], [0]]
C = [[1, 0]]
P = [[0, 0], [0, 0]]
Q = [-1, -1]
alpha_cr = 4
d = [5]
w0 = [0.5, -1]
x0 = [0, 0]
horizon = 50
step = 0.001
)";
  if (id == "interaction") {
    return ParseConfig(std::string(common) + R"(name = interaction
mu.mu3 = 0.7
channel.mu3.Q = [-1, 0]
controller = interaction_robust
k = 20
g = 200
mu = [0.7]
)");
  }
  if (id == "plant") {
    // mu2 ranges over [-0.4375, 0.5625]; the symmetric box uses the larger side.
    return ParseConfig(std::string(common) + R"(name = plant
mu.mu1 = 0.25
mu.mu2 = 0.5625
channel.mu1.A = [[1, 0], [0, -1]]
channel.mu2.A = [[0, -1], [0, 0]]
controller = plant_approx
k_b = 0
k_eta = 1
k = 45
g = 300
mu = [-0.25, -0.4375]
)");
  }
  throw ConfigError("unknown example " + id + " (expected interaction or plant)");
}

Exosystem BuildExosystem(const ExperimentConfig& cfg) {
  return Exosystem::Make(Compile(cfg.S), cfg.t0, cfg.t0 + cfg.horizon, cfg.seed);
}

UncertainPlant BuildUncertainPlant(const ExperimentConfig& cfg) {
  UncertainPlant up;
  const int n = cfg.n();
  const int r = cfg.relative_degree;
  Plant& p = up.nominal;
  if (cfg.normal_form()) {
    Matrix chain = Matrix::Zero(n, n);
    for (int i = 0; i + 1 < r; ++i) chain(i, i + 1) = 1.0;
    p.A = MatrixSignal::Constant(chain) + Embed(Compile(*cfg.Find("alpha")), n, n, r - 1, 0);
    if (n > r) {
      p.A = p.A + Embed(Compile(*cfg.Find("beta")), n, n, r, 0) +
            Embed(Compile(*cfg.Find("eta")), n, n, r, r);
    }
    p.B = Embed(Compile(*cfg.Find("b")), n, 1, r - 1, 0);
    p.C = MatrixSignal::Constant(Matrix::Identity(1, n));
  } else {
    p.A = Compile(*cfg.Find("A"));
    p.B = Compile(*cfg.Find("B"));
    p.C = Compile(*cfg.Find("C"));
  }
  p.P = Compile(*cfg.Find("P"));
  p.Q = Compile(*cfg.Find("Q"));
  up.bi_relative_degree = r;
  for (const auto& [name, box] : cfg.coords) {
    up.coords.push_back(name);
    up.coord_box.push_back(box);
  }
  if (!up.coord_box.empty()) {
    up.mu_box = *std::max_element(up.coord_box.begin(), up.coord_box.end());
  }
  for (const ChannelSpec& ch : cfg.channels) {
    const int i = up.CoordIndex(ch.coord);
    const MatrixSignal E = Compile(ch.E);
    const std::string& t = ch.target;
    if (t == "A") up.channels.push_back({i, Target::kA, E});
    else if (t == "B") up.channels.push_back({i, Target::kB, E});
    else if (t == "C") up.channels.push_back({i, Target::kC, E});
    else if (t == "P") up.channels.push_back({i, Target::kP, E});
    else if (t == "Q") up.channels.push_back({i, Target::kQ, E});
    else if (t == "alpha") up.AddBiChannel(i, BiPart::kAlpha, E);
    else if (t == "beta") up.AddBiChannel(i, BiPart::kBeta, E);
    else if (t == "eta") up.AddBiChannel(i, BiPart::kEta, E);
    else if (t == "b") up.AddBiChannel(i, BiPart::kB, E);
    else if (t == "Pu") up.AddBiChannel(i, BiPart::kPu, E);
    else if (t == "Pl") up.AddBiChannel(i, BiPart::kPl, E);
  }
  up.Validate();
  return up;
}

Vector MuOf(const ExperimentConfig& cfg) {
  return ToVector(cfg.mu, static_cast<int>(cfg.coords.size()));
}
Vector W0Of(const ExperimentConfig& cfg) { return ToVector(cfg.w0, cfg.rho()); }
Vector X0Of(const ExperimentConfig& cfg) { return ToVector(cfg.x0, cfg.n()); }

}  // namespace ltvreg
