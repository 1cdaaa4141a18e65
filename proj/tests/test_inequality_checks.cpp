#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "mdl/divergence.hpp"
#include "mdl/inequality_checks.hpp"
#include "oracles.hpp"

using namespace mdl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::map<std::string, InequalityReport> by_id(const std::vector<InequalityReport>& reps) {
  std::map<std::string, InequalityReport> out;
  for (const auto& r : reps) out.emplace(r.id, r);
  return out;
}

}  // namespace

TEST_CASE("report record keeps the worst point and breaks ties lexicographically", "[report]") {
  InequalityReport r;
  r.record(-1.0, {0.5});
  r.record(0.25, {0.7});
  r.record(0.25, {0.3});
  r.record(0.1, {0.1});
  CHECK(r.grid_size == 4);
  CHECK(r.max_violation == 0.25);
  CHECK(r.worst_point == std::vector<double>{0.3});
  CHECK_FALSE(r.satisfied());

  InequalityReport a;
  a.record(-2.0, {1.0});
  InequalityReport b;
  b.record(-3.0, {0.0});
  a.merge(b);
  CHECK(a.grid_size == 2);
  CHECK(a.max_violation == -2.0);
  CHECK(a.satisfied());
}

TEST_CASE("first inequality at a hand-evaluated point", "[entropy]") {
  // D(1/2 || 1/4) = 0.143841 against 2 (1/4)^2 = 0.125.
  CHECK(kl(0.5, 0.25) - 2.0 * 0.0625 == Catch::Approx(0.018841).margin(1e-6));
  CHECK(kl(0.3, 0.3) - 2.0 * 0.0 == 0.0);
}

TEST_CASE("entropy checks at the default density", "[entropy]") {
  const auto reps = by_id(check_entropy_inequalities(200));
  for (const char* id : {"entropy.i", "entropy.ii", "entropy.iii", "entropy.iii.sym", "entropy.iv", "entropy.iv.sym",
                         "entropy.v", "entropy.v.sym", "entropy.vii", "entropy.vii.sym", "entropy.viii",
                         "entropy.viii.sym", "entropy.vi.const2"}) {
    INFO(id);
    REQUIRE(reps.count(id) == 1);
    CHECK(reps.at(id).satisfied());
    CHECK(reps.at(id).grid_size > 0);
  }
}

TEST_CASE("inequality (vi) as stated fails as theta goes to 0 with theta~ = 1/2", "[entropy]") {
  // D(0 || 1/2) = ln 2 while the stated bound is 1/4; the check must see it.
  const auto reps = by_id(check_entropy_inequalities(200));
  const auto& vi = reps.at("entropy.vi");
  CHECK_FALSE(vi.satisfied());
  CHECK_THAT(vi.max_violation, WithinAbs(std::numbers::ln2 - 0.25, 1e-9));
  REQUIRE(vi.worst_point.size() == 2);
  CHECK(vi.worst_point[0] < 1e-9);
  CHECK(vi.worst_point[1] == 0.5);
  CHECK_FALSE(reps.at("entropy.vi.sym").satisfied());
}

TEST_CASE("raising the constant in (i) to 2.2 is detected", "[entropy][mutation]") {
  const auto reps = by_id(check_entropy_inequalities(200, 2.2));
  CHECK_FALSE(reps.at("entropy.i").satisfied());
  CHECK(reps.at("entropy.i").max_violation > 1e-3);
}

TEST_CASE("degenerate density still produces valid reports", "[entropy]") {
  const auto reps = check_entropy_inequalities(2);
  CHECK(reps.size() == 15);
  for (const auto& r : reps) CHECK(r.grid_size > 0);
}

TEST_CASE("binomial sandwich small cases", "[sandwich]") {
  // n=2, k=1, theta0=1/2: p = 1/2, the exponent vanishes.
  const double upper = 1.0 / std::sqrt(2.0 * std::numbers::pi * 0.25 * 2.0);
  const double lower = 1.0 / std::sqrt(8.0 * 0.25 * 2.0);
  CHECK(lower <= 0.5);
  CHECK(0.5 <= upper);
  CHECK(check_binomial_sandwich(2, 0.5).satisfied());

  // n=3, k=1, theta0=1/3: p = 4/9 exactly.
  CHECK_THAT(std::exp(log_binomial_pmf(3, 1, 1.0 / 3.0)),
             WithinRel(oracle::to_double(oracle::binomial_pmf(3, 1, Rational(1, 3))), 1e-14));
  CHECK(check_binomial_sandwich(3, 1.0 / 3.0).satisfied());
  CHECK_THROWS_AS(check_binomial_sandwich(10, 0.0), std::invalid_argument);
}

TEST_CASE("binomial sandwich holds on a theta0 grid up to n = 512", "[sandwich]") {
  for (int j = 1; j <= 9; ++j) {
    const auto r = check_binomial_sandwich(512, j / 10.0);
    INFO("theta0=" << j / 10.0 << " worst=" << r.max_violation);
    CHECK(r.satisfied());
    CHECK(r.grid_size == 511u * 512u / 2u);
  }
}

TEST_CASE("sqrt-exp sums against a 50-digit direct sum", "[integrals][oracle]") {
  using oracle::Float50;
  for (double z : {0.1, 0.5, 1.0, 3.0}) {
    Float50 s1 = 0;
    Float50 s2 = 0;
    const Float50 z2 = Float50(z) * z;
    for (int n = 1; n < 20000; ++n) {
      const Float50 e = exp(-z2 * n);
      s1 += sqrt(Float50(n)) * e;
      s2 += e / sqrt(Float50(n));
      if (e < Float50(1e-40)) break;
    }
    const auto s = sum_sqrt_exp(z);
    INFO("z=" << z);
    CHECK_THAT(s.s1, WithinRel(static_cast<double>(s1), 1e-12));
    CHECK_THAT(s.s2, WithinRel(static_cast<double>(s2), 1e-12));
    CHECK(s.s1_tail >= 0.0);
  }
}

TEST_CASE("sqrt-exp bounds at the worked points", "[integrals]") {
  const auto s = sum_sqrt_exp(1.0);
  // e^-1 + sqrt(2) e^-2 + sqrt(3) e^-3 + ... = 0.70724...
  CHECK(s.s1 == Catch::Approx(0.707240718).margin(1e-9));
  CHECK(s.s1 >= std::sqrt(std::numbers::pi) / 2 - 1 / std::sqrt(2 * std::numbers::e));
  CHECK(s.s1 <= std::sqrt(std::numbers::pi) / 2 + 1 / std::sqrt(2 * std::numbers::e));
  CHECK(sum_sqrt_exp(0.1).s2 <= std::sqrt(std::numbers::pi) / 0.1);
  CHECK_THAT(sum_sqrt_exp(10.0).s1, WithinRel(std::exp(-100.0), 1e-12));
  for (double z : {0.05, 0.1, 1.0, 10.0}) CHECK(check_sum_sqrt_exp(z).satisfied());
  CHECK_THROWS_AS(check_sum_sqrt_exp(0.0), std::invalid_argument);
}
