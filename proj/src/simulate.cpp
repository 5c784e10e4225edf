#include "bandcov/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bandcov/rng.hpp"

namespace bandcov {

void MAModelSpec::validate() const {
    if (gammas.empty()) {
        throw usage_error("model needs at least the leading coefficient");
    }
    for (double g : gammas) {
        if (!std::isfinite(g)) {
            throw usage_error("model coefficients must be finite");
        }
    }
    if (n < 1 || p < 2) {
        throw usage_error("model needs n >= 1 and p >= 2 (got n = " +
                          std::to_string(n) + ", p = " + std::to_string(p) +
                          ")");
    }
}

DataMatrix generate(const MAModelSpec& spec) {
    spec.validate();
    const auto k0 = static_cast<std::size_t>(spec.k0());
    const std::size_t n = spec.n;
    const std::size_t p = spec.p;
    const bool gamma_law = spec.innovation == Innovation::StandardizedGamma;

    Rng rng(spec.seed);
    DataMatrix x(n, p);
    std::vector<double> z(p + k0);
    for (std::size_t i = 0; i < n; ++i) {
        if (gamma_law) {
            // E ~ Gamma(1, 0.5) standardized by mean 0.5 and sd 0.5
            for (double& v : z) v = (0.5 * rng.exponential() - 0.5) / 0.5;
        } else {
            for (double& v : z) v = rng.normal();
        }
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l <= k0; ++l) {
                acc += spec.gammas[l] * z[j + l];
            }
            x.at(i, j) = acc;
        }
    }
    return x;
}

namespace {

std::vector<double> band_autocov(const std::vector<double>& g) {
    const std::size_t k0 = g.size() - 1;
    std::vector<double> prof(k0 + 1, 0.0);
    for (std::size_t q = 0; q <= k0; ++q) {
        double acc = 0.0;
        for (std::size_t l = 0; l + q <= k0; ++l) acc += g[l] * g[l + q];
        prof[q] = acc;
    }
    return prof;
}

// C = A * B where A and B are p x p with bandwidths bwA, bwB
SquareMatrix mul_banded(const SquareMatrix& A, std::size_t bwA,
                        const SquareMatrix& B, std::size_t bwB) {
    const std::size_t p = A.p();
    const std::size_t bwC = std::min(p - 1, bwA + bwB);
    SquareMatrix C(p);
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t jlo = i > bwC ? i - bwC : 0;
        const std::size_t jhi = std::min(p - 1, i + bwC);
        for (std::size_t j = jlo; j <= jhi; ++j) {
            std::size_t tlo = i > bwA ? i - bwA : 0;
            if (j > bwB) tlo = std::max(tlo, j - bwB);
            const std::size_t thi = std::min({p - 1, i + bwA, j + bwB});
            double acc = 0.0;
            for (std::size_t t = tlo; t <= thi; ++t) {
                acc += A.at(i, t) * B.at(t, j);
            }
            C.at(i, j) = acc;
        }
    }
    return C;
}

double trace_product_sq(const SquareMatrix& M, std::size_t bw) {
    // tr(M^2) = sum_ij M_ij M_ji over the band
    const std::size_t p = M.p();
    double acc = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t jlo = i > bw ? i - bw : 0;
        const std::size_t jhi = std::min(p - 1, i + bw);
        for (std::size_t j = jlo; j <= jhi; ++j) {
            acc += M.at(i, j) * M.at(j, i);
        }
    }
    return acc;
}

double frobenius_sq_banded(const SquareMatrix& M, std::size_t bw) {
    const std::size_t p = M.p();
    double acc = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t jlo = i > bw ? i - bw : 0;
        const std::size_t jhi = std::min(p - 1, i + bw);
        for (std::size_t j = jlo; j <= jhi; ++j) {
            acc += M.at(i, j) * M.at(i, j);
        }
    }
    return acc;
}

}  // namespace

SquareMatrix population_sigma(const MAModelSpec& spec) {
    spec.validate();
    const std::vector<double> prof = band_autocov(spec.gammas);
    const std::size_t p = spec.p;
    const std::size_t band = std::min(p - 1, prof.size() - 1);
    SquareMatrix s(p);
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t jlo = i > band ? i - band : 0;
        const std::size_t jhi = std::min(p - 1, i + band);
        for (std::size_t j = jlo; j <= jhi; ++j) {
            s.at(i, j) = prof[i > j ? i - j : j - i];
        }
    }
    return s;
}

PopulationQuantities population_quantities(const MAModelSpec& spec,
                                           int k_max) {
    spec.validate();
    const std::size_t p = spec.p;
    if (k_max < 0 || static_cast<std::size_t>(k_max) >= p) {
        throw usage_error("k_max = " + std::to_string(k_max) +
                          " outside [0, p-1] with p = " + std::to_string(p));
    }
    const auto kmax = static_cast<std::size_t>(k_max);
    const std::size_t k0 = spec.gammas.size() - 1;
    const std::size_t band = std::min(p - 1, k0);

    PopulationQuantities out;
    out.p = p;
    out.band_profile = band_autocov(spec.gammas);
    const std::vector<double>& prof = out.band_profile;

    auto tr_banded_sq = [&](std::size_t k) {
        const std::size_t top = std::min(k, band);
        double acc = static_cast<double>(p) * prof[0] * prof[0];
        for (std::size_t q = 1; q <= top; ++q) {
            acc += 2.0 * static_cast<double>(p - q) * prof[q] * prof[q];
        }
        return acc;
    };
    out.tr_sigma2 = tr_banded_sq(band);

    const SquareMatrix sigma = population_sigma(spec);
    const SquareMatrix sigma2 = mul_banded(sigma, band, sigma, band);
    const double tr4 = frobenius_sq_banded(sigma2, std::min(p - 1, 2 * band));
    out.tr_ratio = tr4 / (out.tr_sigma2 * out.tr_sigma2);

    const double nd = static_cast<double>(spec.n);
    const double delta_kurt = InnovationLaw{spec.innovation}.excess_kurtosis();

    out.tr_bk2.resize(kmax + 1);
    out.r.resize(kmax + 1);
    out.one_minus_r.resize(kmax + 1);
    out.signal.resize(kmax + 1);
    out.nu.resize(kmax + 1);
    out.delta_snr.resize(kmax + 1);

    SquareMatrix D(p);
    for (std::size_t k = 0; k <= kmax; ++k) {
        out.tr_bk2[k] = tr_banded_sq(k);
        out.r[k] = out.tr_bk2[k] / out.tr_sigma2;
        out.one_minus_r[k] = (out.tr_sigma2 - out.tr_bk2[k]) / out.tr_sigma2;
        out.signal[k] = out.tr_sigma2 - out.tr_bk2[k];

        double tr_m2 = 0.0;
        double hadamard = 0.0;
        if (k < band) {
            // D keeps the off-band part of the covariance only
            for (std::size_t i = 0; i < p; ++i) {
                const std::size_t jlo = i > band ? i - band : 0;
                const std::size_t jhi = std::min(p - 1, i + band);
                for (std::size_t j = jlo; j <= jhi; ++j) {
                    const std::size_t dist = i > j ? i - j : j - i;
                    D.at(i, j) = dist > k ? sigma.at(i, j) : 0.0;
                }
            }
            const SquareMatrix M = mul_banded(sigma, band, D, band);
            tr_m2 = trace_product_sq(M, std::min(p - 1, 2 * band));

            // diagonal of G' D G: H_ii = sum_{l1,l2} g_l1 g_l2 D[i-l1, i-l2]
            for (std::size_t i = 0; i < p + k0; ++i) {
                const std::size_t llo = i >= p ? i - (p - 1) : 0;
                const std::size_t lhi = std::min(k0, i);
                double hii = 0.0;
                for (std::size_t l1 = llo; l1 <= lhi; ++l1) {
                    for (std::size_t l2 = llo; l2 <= lhi; ++l2) {
                        hii += spec.gammas[l1] * spec.gammas[l2] *
                               D.at(i - l1, i - l2);
                    }
                }
                hadamard += hii * hii;
            }
        }
        const double nu2 = 4.0 / (nd * nd) * out.tr_sigma2 * out.tr_sigma2 +
                           8.0 / nd * tr_m2 +
                           4.0 / nd * delta_kurt * hadamard;
        out.nu[k] = std::sqrt(nu2);
        out.delta_snr[k] = out.signal[k] / out.nu[k];
    }
    return out;
}

}  // namespace bandcov
