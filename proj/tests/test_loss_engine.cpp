#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mdl/estimator.hpp"
#include "mdl/experiments.hpp"
#include "mdl/loss_engine.hpp"
#include "oracles.hpp"

using namespace mdl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Exact Bayes expected loss at n: rational posterior means, rational pmf.
double bayes_loss_oracle(const ModelClass& cls, std::size_t truth, std::uint64_t n) {
  const Rational& t0 = cls[truth].param.value();
  Rational total = 0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    Rational num = 0;
    Rational den = 0;
    for (const auto& m : cls.members()) {
      const Rational w = Rational(1) / (BigInt(1) << static_cast<unsigned>(m.complexity_kw));
      const Rational like = w * oracle::power(m.param.value(), k) * oracle::power(1 - m.param.value(), n - k);
      num += like * m.param.value();
      den += like;
    }
    const Rational d = num / den - t0;
    total += oracle::binomial_pmf(n, k, t0) * d * d;
  }
  return oracle::to_double(total);
}

}  // namespace

TEST_CASE("SplitMix64 reference stream", "[rng]") {
  SplitMix64 g(0);
  CHECK(g.next() == 0xe220a8397b1dcdafULL);
  CHECK(g.next() == 0x6e789e6aa1b965f4ULL);
  SplitMix64 u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
}

TEST_CASE("one-bit counterexample at n = 1", "[loss]") {
  // k = 1 picks 3/4 with probability 1/2: loss (1/4)^2 / 2.
  const auto c = counterexample_class(1);
  CHECK_THAT(instantaneous_loss_exact(c, 0, 1), WithinRel(0.03125, 1e-15));
  CHECK_THROWS_AS(instantaneous_loss_exact(c, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(instantaneous_loss_exact(c, 9, 1), std::invalid_argument);
  CHECK_THROWS_AS(cumulative_loss(c, 0, 0, Rule::mdl), std::invalid_argument);
}

TEST_CASE("singleton class has zero loss", "[loss]") {
  const ModelClass single({{Parameter(1, 2), 0.0}}, Parameter(1, 2));
  for (Rule r : {Rule::mdl, Rule::ml, Rule::bayes}) {
    const auto curve = cumulative_loss(single, 0, 300, r);
    CHECK(curve.total() == 0.0);
  }
  CHECK(cumulative_loss(single, 0, 300, Rule::mdl).tail_estimate == 0.0);
}

TEST_CASE("exact loss matches a rational oracle for n <= 64", "[loss][oracle]") {
  for (const auto& [name, cls] : builtin_test_classes()) {
    const std::size_t t = cls.require_true_index();
    for (std::uint64_t n = 1; n <= 64; n += (n < 12 ? 1 : 13)) {
      INFO(name << " n=" << n);
      const double ref = oracle::mdl_loss(cls, t, n);
      CHECK_THAT(instantaneous_loss_exact(cls, t, n), WithinRel(ref, 1e-12) || WithinAbs(ref, 1e-300));
    }
  }
}

TEST_CASE("ml loss matches an oracle without complexities", "[loss][oracle]") {
  const auto cls = dyadic_grid_class(4).with_truth(Parameter(5, 16));
  const std::size_t t = cls.require_true_index();
  for (std::uint64_t n : {1u, 5u, 20u, 48u}) {
    Rational total = 0;
    for (std::uint64_t k = 0; k <= n; ++k) {
      const Rational d = cls[oracle::select(cls, n, k, false)].param.value() - cls[t].param.value();
      total += oracle::binomial_pmf(n, k, cls[t].param.value()) * d * d;
    }
    INFO("n=" << n);
    CHECK_THAT(instantaneous_loss(cls, t, n, Rule::ml), WithinRel(oracle::to_double(total), 1e-12));
  }
}

TEST_CASE("bayes loss matches exact posterior means", "[loss][oracle]") {
  const auto cls = dyadic_grid_class(3).with_truth(Parameter(3, 8));
  const std::size_t t = cls.require_true_index();
  for (std::uint64_t n : {1u, 2u, 7u, 16u}) {
    INFO("n=" << n);
    CHECK_THAT(instantaneous_loss(cls, t, n, Rule::bayes), WithinRel(bayes_loss_oracle(cls, t, n), 1e-12));
  }
}

TEST_CASE("region path agrees with the direct pmf sum", "[loss][property]") {
  EngineOptions regions;
  regions.enumeration_threshold = 0;
  for (const auto& [name, cls] : builtin_test_classes()) {
    const std::size_t t = cls.require_true_index();
    for (std::uint64_t n = 1; n <= 256; n += 5) {
      const double direct = instantaneous_loss_exact(cls, t, n);
      const double region = instantaneous_loss_exact(cls, t, n, regions);
      INFO(name << " n=" << n);
      CHECK_THAT(region, WithinRel(direct, 1e-10) || WithinAbs(direct, 1e-300));
    }
  }
  // Above the default threshold the two paths still meet.
  const auto g = dyadic_grid_class(8).with_truth(Parameter(77, 256));
  const std::size_t t = g.require_true_index();
  EngineOptions direct;
  direct.enumeration_threshold = 1u << 20;
  for (std::uint64_t n : {5000u, 20000u}) {
    CHECK_THAT(instantaneous_loss_exact(g, t, n, regions), WithinRel(instantaneous_loss_exact(g, t, n, direct), 1e-10));
  }
}

TEST_CASE("cumulative curve bookkeeping", "[loss]") {
  const auto c = counterexample_class(2);
  const auto curve = cumulative_loss(c, 0, 500, Rule::mdl);
  REQUIRE(curve.per_n.size() == 500);
  REQUIRE(curve.cumulative.size() == 500);
  double s = 0.0;
  for (std::size_t i = 0; i < 500; ++i) {
    s += curve.per_n[i];
    CHECK_THAT(curve.cumulative[i], WithinRel(s, 1e-13));
    CHECK(curve.per_n[i] >= 0.0);
  }
  CHECK(curve.total() == curve.cumulative.back());
  CHECK_FALSE(curve.truncation_note.empty());
  // Still in the 1/n regime at this horizon, so no finite continuation exists.
  CHECK(std::isinf(curve.tail_estimate));

  // The one-bit class decays exponentially, faster than the power law the
  // continuation assumes, so the estimate lands above the true remainder.
  const auto fast = cumulative_loss(counterexample_class(1), 0, 200, Rule::mdl);
  const auto longer = cumulative_loss(counterexample_class(1), 0, 4000, Rule::mdl);
  const double remainder = longer.total() - fast.total();
  REQUIRE(std::isfinite(fast.tail_estimate));
  CHECK(fast.tail_estimate >= remainder);
  CHECK(fast.tail_estimate < 10.0 * remainder);

  const auto short_curve = cumulative_loss(c, 0, 5, Rule::mdl);
  CHECK(std::isinf(short_curve.tail_estimate));
  CHECK(short_curve.tail_method.rfind("none", 0) == 0);
}

TEST_CASE("thread count does not change the curve", "[loss][determinism]") {
  const auto cls = dyadic_grid_class(6).with_truth(Parameter(3, 16));
  const std::size_t t = cls.require_true_index();
  EngineOptions one;
  EngineOptions four;
  four.threads = 4;
  const auto a = cumulative_loss(cls, t, 700, Rule::mdl, one);
  const auto b = cumulative_loss(cls, t, 700, Rule::mdl, four);
  CHECK(a.per_n == b.per_n);
  CHECK(a.cumulative == b.cumulative);
}

TEST_CASE("bayes cumulative loss stays under ln(1/w0)", "[loss][bayes]") {
  for (const auto& [name, cls] : builtin_test_classes()) {
    if (validate_kraft(cls).sum > 1.0) continue;
    const std::size_t t = cls.require_true_index();
    const auto curve = cumulative_loss(cls, t, 3000, Rule::bayes);
    const double budget = cls.kw(t) * std::numbers::ln2;
    INFO(name);
    CHECK(curve.total() <= budget * (1 + 1e-12));
    CHECK_THAT(curve.tail_estimate, WithinAbs(std::max(0.0, budget - curve.total()), 1e-15));
  }
}

TEST_CASE("monte carlo is deterministic and agrees with the exact sum", "[loss][montecarlo]") {
  const auto c = counterexample_class(2);
  const auto a = monte_carlo_loss(c, 0, 200, 4000, 11, 1, true);
  const auto b = monte_carlo_loss(c, 0, 200, 4000, 11, 3, true);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(a.per_n == b.per_n);
  CHECK(a.paths == 4000);
  CHECK(a.seed == 11);
  CHECK(a.generator == "splitmix64");
  REQUIRE(a.per_n.size() == 200);

  const auto other = monte_carlo_loss(c, 0, 200, 4000, 12);
  CHECK(other.estimate != a.estimate);
  CHECK(other.per_n.empty());

  const double exact = cumulative_loss(c, 0, 200, Rule::mdl).total();
  CHECK(std::abs(a.estimate - exact) <= 3.0 * a.std_error + 1e-12);
  CHECK(a.std_error > 0.0);

  double s = 0.0;
  for (double v : a.per_n) s += v;
  CHECK_THAT(s, WithinRel(a.estimate, 1e-9));

  CHECK_THROWS_AS(monte_carlo_loss(c, 0, 0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(monte_carlo_loss(c, 0, 10, 0, 1), std::invalid_argument);
}

TEST_CASE("monte carlo past the decision-map limit", "[loss][montecarlo]") {
  const auto c = counterexample_class(1);
  const auto r = monte_carlo_loss(c, 0, 5000, 64, 3);
  const double exact = cumulative_loss(c, 0, 5000, Rule::mdl).total();
  CHECK(std::abs(r.estimate - exact) <= 4.0 * r.std_error + 1e-12);
}

TEST_CASE("instantaneous bound", "[bounds]") {
  CHECK_THAT(instantaneous_bound(3, 0.0), WithinRel(2.0 * std::log(3.0), 1e-15));
  CHECK_THAT(instantaneous_bound(3, 0.0), WithinAbs(2.1972, 5e-5));
  CHECK_THAT(instantaneous_bound(100, 8.0), WithinAbs(0.3755014548, 1e-9));
  CHECK_THROWS_AS(instantaneous_bound(2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(instantaneous_bound(10, -1.0), std::invalid_argument);
  CHECK(previous_bound(0.0) == 1.0);
  CHECK(previous_bound(10.0) == 1024.0);
  CHECK_THROWS_AS(previous_bound(-0.5), std::invalid_argument);
}

TEST_CASE("mdl loss respects the instantaneous bound on small classes", "[bounds][property]") {
  for (const auto& [name, cls] : builtin_test_classes()) {
    const std::size_t t = cls.require_true_index();
    const auto curve = cumulative_loss(cls, t, 400, Rule::mdl);
    for (std::uint64_t n = 3; n <= 400; ++n) {
      INFO(name << " n=" << n);
      CHECK(curve.per_n[n - 1] <= instantaneous_bound(n, cls.kw(t)));
    }
  }
}
