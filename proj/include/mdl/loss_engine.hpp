#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mdl/estimator.hpp"
#include "mdl/model_class.hpp"

namespace mdl {

struct EngineOptions {
  /// Worker threads for per-n work; 0 uses the hardware concurrency.
  unsigned threads = 1;
  /// Largest n evaluated by summing the pmf over every k; above it the
  /// decision regions are weighted by incomplete-beta tail probabilities.
  std::uint64_t enumeration_threshold = 4096;
};

/// Expected square loss sum_n E(theta^x - theta0)^2 over n = 1..horizon.
struct LossCurve {
  std::uint64_t horizon = 0;
  Rule predictor = Rule::mdl;
  std::vector<double> per_n;       // per_n[n-1]
  std::vector<double> cumulative;  // cumulative[n-1] = sum of per_n[0..n-1]
  /// Estimate of the loss beyond the horizon; never folded into cumulative.
  double tail_estimate = 0.0;
  std::string tail_method;
  std::string truncation_note;

  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

struct MonteCarloResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t paths = 0;
  std::uint64_t seed = 0;
  std::string generator = "splitmix64";
  /// Mean loss at each n, filled only when requested.
  std::vector<double> per_n;
};

/// SplitMix64. Monte Carlo path p uses the stream seeded by
/// SplitMix64(seed).next() ^ p.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// E(theta^(k/n) - theta0)^2 under Binomial(n, theta0) for the MDL rule.
/// Throws std::logic_error when the class has no true parameter.
double instantaneous_loss_exact(const ModelClass& cls, std::size_t theta0_index, std::uint64_t n,
                                const EngineOptions& options = {});

/// The same for any rule. Bayes always sums over a window of k holding all
/// but e^-45 of the binomial mass.
double instantaneous_loss(const ModelClass& cls, std::size_t theta0_index, std::uint64_t n, Rule rule,
                          const EngineOptions& options = {});

LossCurve cumulative_loss(const ModelClass& cls, std::size_t theta0_index, std::uint64_t horizon, Rule rule,
                          const EngineOptions& options = {});

/// Simulates `paths` Bernoulli(theta0) strings of length horizon and averages
/// sum_n (theta^x - theta0)^2 under the MDL rule. Bit-identical for a given
/// seed regardless of thread count. A one is drawn at step n when the
/// path's next uniform is below theta0.
MonteCarloResult monte_carlo_loss(const ModelClass& cls, std::size_t theta0_index, std::uint64_t horizon,
                                  std::uint64_t paths, std::uint64_t seed, unsigned threads = 1,
                                  bool with_curve = false);

/// ln2 Kw0 / (2n) + sqrt(2 ln2 Kw0 ln n) / n + 6 ln n / n; n >= 3.
double instantaneous_bound(std::uint64_t n, double kw0);

/// 2^kw0, the scale of the older cumulative bound. Its constant is unknown,
/// so every report labels this value "up to a multiplicative constant".
double previous_bound(double kw0);

}  // namespace mdl
