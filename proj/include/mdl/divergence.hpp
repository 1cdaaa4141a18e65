#pragma once

#include <cstdint>

namespace mdl {

/// Kullback-Leibler divergence D(alpha || theta) between Bernoulli laws, in nats.
///
/// Total on [0,1]^2: 0*ln 0 = 0 and x*ln(x/0) = +inf for x > 0.
double kl(double alpha, double theta);

/// x - ln(1 + x), by its power series for |x| < 0.05 where the direct
/// difference cancels.
double log1p_remainder(double x);

/// D^alpha(theta || theta_tilde) = D(alpha||theta_tilde) - D(alpha||theta).
///
/// Affine in alpha. Throws std::domain_error unless theta and theta_tilde are
/// interior points of (0,1).
double extended_kl(double alpha, double theta, double theta_tilde);

/// ln[C(n,k) theta^k (1-theta)^(n-k)] via log-gamma. Returns -inf when a
/// boundary theta is incompatible with k. Throws std::invalid_argument for
/// k > n or n == 0.
double log_binomial_pmf(std::uint64_t n, std::uint64_t k, double theta);

/// P(k_lo <= K <= k_hi) for K ~ Binomial(n, theta), via the regularized
/// incomplete beta function. The tail evaluated is whichever side keeps both
/// terms small, so the result keeps relative accuracy in the far tails.
double binomial_tail(std::uint64_t n, std::uint64_t k_lo, std::uint64_t k_hi, double theta);

}  // namespace mdl
