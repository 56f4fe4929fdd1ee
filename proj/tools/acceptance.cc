// Prints one PASS/FAIL line per acceptance criterion. Thresholds live in
// the check functions and in RunExample; the runtime caps are pinned here.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "ltvreg/checks.h"

namespace {

using namespace ltvreg;

constexpr double kInteractionSeconds = 60.0;
constexpr double kPlantSeconds = 120.0;
constexpr double kSuiteSeconds = 15 * 60.0;

int failures = 0;

void Line(int n, bool pass, const std::string& text) {
  failures += !pass;
  std::printf("criterion %d: %s %s\n", n, pass ? "PASS" : "FAIL", text.c_str());
  std::fflush(stdout);
}

std::string Describe(const CheckResult& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, " [value %.3g, limit %.3g]", r.value, r.tolerance);
  return std::string(r.pass ? "ok " : "FAIL ") + r.name + buf + " " + r.detail;
}

std::string Join(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += (s.empty() ? "" : " | ") + l;
  return s;
}

}  // namespace

int main() {
  {
    const ExampleOutcome o = RunExample("interaction", "out/acceptance");
    const bool fast = o.seconds <= kInteractionSeconds;
    Line(1, o.pass && fast,
         Join(o.lines) + " | runtime " + std::to_string(o.seconds) + " s <= 60 s");
  }
  {
    const ExampleOutcome o = RunExample("plant", "out/acceptance");
    const bool fast = o.seconds <= kPlantSeconds;
    Line(2, o.pass && fast, Join(o.lines) + " | runtime " + std::to_string(o.seconds) + " s <= 120 s");
  }
  auto single = [](int n, const CheckResult& r) { Line(n, r.pass, Describe(r)); };
  single(3, CheckRegulatorResiduals(42));
  single(4, CheckOracleEquivalence(42));
  single(5, CheckClosedFormPi());
  single(6, CheckInteractionPropagation());
  {
    const CheckResult a = CheckRealization("interaction");
    const CheckResult b = CheckRealization("plant");
    Line(7, a.pass && b.pass, Describe(a) + " | " + Describe(b));
  }
  {
    const CheckResult a = CheckTruncationBound(42);
    const CheckResult b = CheckScalarBounds();
    Line(8, a.pass && b.pass, Describe(a) + " | " + Describe(b));
  }
  single(9, CheckGramProbe());
  {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<CheckResult> all = RunSuite("all", 42);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::vector<std::string> required = {"cocycle identity", "step halving (interaction)",
                                               "step halving (plant)", "coordinate-change invariance",
                                               "determinism"};
    bool ok = secs <= kSuiteSeconds;
    std::string text;
    for (const std::string& name : required) {
      bool found = false;
      for (const CheckResult& r : all) {
        if (r.name != name) continue;
        found = true;
        ok = ok && r.pass;
        text += name + (r.pass ? " pass" : " FAIL") + "; ";
      }
      ok = ok && found;
    }
    int other = 0;
    for (const CheckResult& r : all) other += !r.pass;
    Line(10, ok,
         text + "check all took " + std::to_string(secs) + " s <= 900 s (" + std::to_string(other) +
             " of " + std::to_string(all.size()) + " checks failed overall)");
  }
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
