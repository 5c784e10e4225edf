#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bandcov/types.hpp"

namespace bandcov {

// Innovation distribution for the moving-average model. Both laws have mean
// 0 and variance 1. The derived moments feed the variance expression
// (excess kurtosis Delta) and documentation (third moment omega; no
// implemented formula consumes it).
enum class Innovation { StandardNormal, StandardizedGamma };

struct InnovationLaw {
    Innovation kind = Innovation::StandardNormal;

    // Delta = E z^4 - 3: 0 for normal, 6 for the standardized Gamma(1, .)
    double excess_kurtosis() const {
        return kind == Innovation::StandardizedGamma ? 6.0 : 0.0;
    }
    // omega = E z^3: 0 for normal, 2 for the standardized Gamma(1, .)
    double third_moment() const {
        return kind == Innovation::StandardizedGamma ? 2.0 : 0.0;
    }
    const char* name() const {
        return kind == Innovation::StandardizedGamma ? "gamma" : "normal";
    }
};

// Moving-average construction X_ij = sum_{l=0}^{k0} g_l Z_{i,j+l} with
// g_0 = 1 by convention; each row is built from an independent innovation
// vector of length p + k0, so the covariance is exactly the banded Toeplitz
// matrix with entries gamma(q) = sum_l g_l g_{l+q} and bandwidth k0
// (when g_{k0} != 0).
struct MAModelSpec {
    std::vector<double> gammas{1.0};  // g_0..g_{k0}
    Innovation innovation = Innovation::StandardNormal;
    std::size_t n = 0;
    std::size_t p = 0;
    std::uint64_t seed = 0;

    int k0() const { return static_cast<int>(gammas.size()) - 1; }
    void validate() const;
};

// Draw the n x p data matrix. The standardized Gamma(1, 0.5) draw is
// (E - m)/s for E ~ Gamma(1, 0.5) with its mean m and standard deviation s;
// for shape 1 this is the Exp(1) - 1 law whatever the scale. Deterministic
// given spec.seed.
DataMatrix generate(const MAModelSpec& spec);

// The exact covariance: banded symmetric Toeplitz, sigma_{j,j+q} = gamma(q).
SquareMatrix population_sigma(const MAModelSpec& spec);

// Population quantities per banding level k = 0..k_max.
struct PopulationQuantities {
    std::size_t p = 0;
    std::vector<double> band_profile;  // gamma(q), q = 0..k0
    double tr_sigma2 = 0.0;            // trace of Sigma^2
    std::vector<double> tr_bk2;        // trace of (banded Sigma)^2
    std::vector<double> r;             // tr_bk2 / tr_sigma2
    std::vector<double> one_minus_r;
    std::vector<double> signal;        // tr_sigma2 - tr_bk2
    std::vector<double> nu;            // leading-order sd of the distance stat
    std::vector<double> delta_snr;     // signal / nu
    double tr_ratio = 0.0;             // tr(Sigma^4) / tr(Sigma^2)^2
};

// Closed-form traces via the band profile:
//   tr(Sigma^2) = p*gamma(0)^2 + 2*sum_{q=1..k0} (p-q)*gamma(q)^2,
// truncated at min(k, k0) for the banded version. nu is assembled from
//   nu^2 = (4/n^2) tr^2(Sigma^2) + (8/n) tr[(Sigma D)^2]
//          + (4/n) Delta sum_i ((G' D G)_ii)^2,   D = Sigma - B_k(Sigma),
// where G is the p x (p+k0) coefficient matrix G[j, j+l] = g_l; products
// iterate only over the bands (bandwidth <= 2 k0). Requires k_max <= p-1.
PopulationQuantities population_quantities(const MAModelSpec& spec, int k_max);

}  // namespace bandcov
