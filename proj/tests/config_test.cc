#include "doctest.h"
#include "ltvreg/config.h"

using namespace ltvreg;

namespace {

const char* kNormalForm = R"(# second-order plant with one zero
name = nf
S = [[0, 1], [-1, 0]]
relative_degree = 1
alpha = [[0.5, 1]]
beta = [[1]]
eta = [[-2 + 0.1*sin(t)]]
b = [[2]]
P = [[0, 0], [1, 0]]
Q = [1, 0]
mu.m = 0.2
channel.m.eta = [[1]]
controller = plant_approx
k_eta = 1
mu = [0.1]
horizon = 10
formats = json
)";

}  // namespace

TEST_CASE("built-in configs survive a serialize/parse round trip") {
  for (const char* id : {"interaction", "plant"}) {
    const ExperimentConfig c = BuiltinConfig(id);
    const std::string text = SerializeConfig(c);
    const ExperimentConfig back = ParseConfig(text);
    CHECK(back == c);
    CHECK(SerializeConfig(back) == text);
    CHECK(ConfigHash(back) == ConfigHash(c));
  }
  CHECK(ConfigHash(BuiltinConfig("interaction")) != ConfigHash(BuiltinConfig("plant")));
  CHECK(ConfigHash(BuiltinConfig("plant")).size() == 64);
  CHECK_THROWS_AS(BuiltinConfig("bogus"), ConfigError);
}

TEST_CASE("hash ignores comments and key order but not values") {
  const ExperimentConfig a = ParseConfig(kNormalForm);
  std::string shuffled = kNormalForm;
  const std::string moved = "horizon = 10\n";
  shuffled.erase(shuffled.find(moved), moved.size());
  shuffled = moved + shuffled + "# trailing comment\n";
  const ExperimentConfig b = ParseConfig(shuffled);
  CHECK(ConfigHash(a) == ConfigHash(b));
  ExperimentConfig c = a;
  c.g = 201;
  CHECK(ConfigHash(a) != ConfigHash(c));
}

TEST_CASE("built-in values") {
  const ExperimentConfig c = BuiltinConfig("plant");
  CHECK(c.recipe == "plant_approx");
  CHECK(c.k == 45);
  CHECK(c.g == 300);
  CHECK(c.k_b == 0);
  CHECK(c.k_eta == 1);
  REQUIRE(c.coords.size() == 2);
  CHECK(c.coords[1].second == 0.5625);
  const Vector mu = MuOf(c);
  CHECK(mu(0) == -0.25);
  CHECK(mu(1) == -0.4375);

  const UncertainPlant up = BuildUncertainPlant(c);
  CHECK(up.mu_box == 0.5625);
  const Plant p = up.Instantiate(mu);
  // A(mu) = A0 + mu1 diag(1, -1) + mu2 [[0, -1], [0, 0]].
  Matrix expect(2, 2);
  expect << 1 - 0.25, -2.6 + 0.4375, 1, -1 + 0.25;
  CHECK((p.A(3.0) - expect).norm() < 1e-15);

  const Exosystem exo = BuildExosystem(BuiltinConfig("interaction"));
  const double t = 1.3;
  CHECK(exo.S(t)(1, 0) == doctest::Approx(-1.6 - 0.2 * (std::cos(2 * t) + std::cos(std::sqrt(2.0) * t))));
}

TEST_CASE("normal-form configs embed the chain") {
  const ExperimentConfig c = ParseConfig(kNormalForm);
  CHECK(c.normal_form());
  CHECK(c.n() == 2);
  CHECK(c.rho() == 2);
  CHECK(c.formats == std::vector<std::string>{"json"});
  const Plant p = BuildUncertainPlant(c).Instantiate(MuOf(c));
  const double t = 0.7;
  Matrix A(2, 2);
  A << 0.5, 1, 1, -2 + 0.1 * std::sin(t) + 0.1;
  CHECK((p.A(t) - A).norm() < 1e-14);
  CHECK(p.B(t)(0, 0) == 2);
  CHECK(p.B(t)(1, 0) == 0);
  CHECK(p.C(t)(0, 0) == 1);
}

TEST_CASE("parse errors") {
  auto bad = [](const std::string& extra) { return std::string(kNormalForm) + extra; };
  CHECK_THROWS_AS(ParseConfig(bad("g = 1\ng = 2\n")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(bad("gain = 1\n")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(bad("channel.zz.Q = [1, 0]\n")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(bad("channel.m.X = [1, 0]\n")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(bad("autotune = maybe\n")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(bad("seed = -3\n")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(bad("this line has no equals sign\n")), ConfigError);
  CHECK_THROWS_AS(LoadConfig("/nonexistent/config.cfg"), ConfigError);
}

TEST_CASE("dimension audit") {
  auto with = [](const std::string& from, const std::string& to) {
    std::string s = kNormalForm;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  CHECK_THROWS_AS(ParseConfig(with("Q = [1, 0]", "Q = [1, 0, 0]")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(with("P = [[0, 0], [1, 0]]", "P = [[0, 0]]")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(with("mu = [0.1]", "mu = [0.1, 0.2]")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(with("mu.m = 0.2", "mu.m = 0")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(with("b = [[2]]\n", "")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(with("horizon = 10", "horizon = -1")), ConfigError);
  CHECK_THROWS_AS(ParseConfig(with("relative_degree = 1", "relative_degree = 3")), ConfigError);
}
