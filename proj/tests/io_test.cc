#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ltvreg/io.h"

using namespace ltvreg;

namespace {

std::vector<std::string> Lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

SimulationTrace Synthetic(int nodes) {
  SimulationTrace tr;
  tr.grid = TimeGrid::Covering(0, (nodes - 1) * 0.5, 0.5);
  for (int k = 0; k < nodes; ++k) {
    tr.w.push_back(Vector::Constant(2, k));
    tr.x.push_back(Vector::Constant(3, -k));
    tr.xi.push_back(Vector::Constant(1, 0.1 * k));
    tr.u.push_back(2.0 * k);
    tr.e.push_back(1.0 / 3.0);
  }
  return tr;
}

}  // namespace

TEST_CASE("trace CSV header, stride and final row") {
  const SimulationTrace tr = Synthetic(25);
  REQUIRE(tr.grid.size() == 25);
  const auto lines = Lines(TraceCsv(tr, 10));
  CHECK(lines[0] == "t,w1,w2,x1,x2,x3,xi1,u,e");
  // Rows 0, 10, 20 and the last node 24.
  REQUIRE(lines.size() == 5);
  CHECK(lines[1].rfind("0,0,0,", 0) == 0);
  CHECK(lines[2].rfind("5,10,10,-10,", 0) == 0);
  CHECK(lines[4].rfind("12,24,24,", 0) == 0);
  // Full precision round trips.
  CHECK(lines[4].substr(lines[4].rfind(',') + 1) == "0.33333333333333331");
  CHECK(Lines(TraceCsv(Synthetic(21), 10)).size() == 4);
  CHECK_THROWS_AS(TraceCsv(tr, 0), std::invalid_argument);
}

TEST_CASE("matrix JSON round trip is bit-exact") {
  Matrix m(2, 3);
  m << 0.1, -1e-300, 3.141592653589793, 1.0 / 3.0, 1.7976931348623157e308, -0.0;
  const Json j = Json::parse(MatrixToJson(m).dump());
  const Matrix back = MatrixFromJson(j);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (int i = 0; i < 6; ++i) CHECK(back(i) == m(i));
  Json broken = j;
  broken["rows"] = 3;
  CHECK_THROWS_AS(MatrixFromJson(broken), std::invalid_argument);
}

TEST_CASE("metrics JSON keeps a missing exponent as null") {
  Metrics m;
  m.tail_sup_error = 1e-9;
  m.bounded = true;
  const Json j = MetricsJson(m, Vector::Constant(1, 0.7), "abc");
  CHECK(j["decay_exponent"].is_null());
  CHECK(j["tail_sup_error"].get<double>() == 1e-9);
  CHECK(j["mu"][0].get<double>() == 0.7);
  CHECK(j["config_hash"] == "abc");
}

TEST_CASE("writers create parent directories") {
  const auto dir = std::filesystem::temp_directory_path() / "ltvreg_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  WriteJson((dir / "a.json").string(), Json{{"x", 1}});
  std::ifstream f(dir / "a.json");
  Json back;
  f >> back;
  CHECK(back["x"] == 1);
  std::filesystem::remove_all(dir.parent_path());
}
