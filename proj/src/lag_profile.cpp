#include "bandcov/lag_profile.hpp"

#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "bandcov/accum.hpp"
#include "bandcov/normal.hpp"

namespace bandcov {

namespace {

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// contribution of one column pair (u, v) of length n:
// A/P2 - 2B/P3 + C/P4 via the eight moment sums
double pair_term(const double* u, const double* v, std::size_t n, double p2,
                 double p3, double p4) {
    double s1 = 0.0, s2 = 0.0, s11 = 0.0, s20 = 0.0, s02 = 0.0;
    double s21 = 0.0, s12 = 0.0, s22 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = u[i];
        const double vi = v[i];
        const double a = ui * vi;
        s1 += ui;
        s2 += vi;
        s11 += a;
        s20 += ui * ui;
        s02 += vi * vi;
        s21 += ui * a;
        s12 += a * vi;
        s22 += a * a;
    }
    const double A = s11 * s11 - s22;
    const double B =
        s1 * s11 * s2 - s21 * s2 - s11 * s11 - s12 * s1 + 2.0 * s22;
    const double C = s1 * s1 * s2 * s2 - s20 * s2 * s2 - s02 * s1 * s1 -
                     4.0 * s11 * s1 * s2 + 2.0 * s11 * s11 + s20 * s02 +
                     4.0 * s21 * s2 + 4.0 * s12 * s1 - 6.0 * s22;
    return A / p2 - 2.0 * B / p3 + C / p4;
}

std::vector<double> center_columns(const DataMatrix& x) {
    const std::size_t n = x.n();
    const std::size_t p = x.p();
    std::vector<double> c(n * p);
    for (std::size_t j = 0; j < p; ++j) {
        const double* src = x.col(j);
        CompensatedSum m;
        for (std::size_t i = 0; i < n; ++i) m.add(src[i]);
        const double mean = m.value() / static_cast<double>(n);
        double* dst = c.data() + j * n;
        for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] - mean;
    }
    return c;
}

void check_estimable(const DataMatrix& data) {
    if (data.n() < 4) {
        throw data_error(
            "per-lag estimator needs at least 4 observations (got n = " +
            std::to_string(data.n()) + ")");
    }
    data.validate(4);
}

}  // namespace

LagProfile lag_profile(const DataMatrix& data, int threads) {
    check_estimable(data);
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    const double nd = static_cast<double>(n);
    const double p2 = nd * (nd - 1.0);
    const double p3 = p2 * (nd - 2.0);
    const double p4 = p3 * (nd - 3.0);

    const std::vector<double> centered = center_columns(data);
    LagProfile out;
    out.n = n;
    out.p = p;
    out.dhat.assign(p, 0.0);

    const int nthreads = std::min<int>(resolve_threads(threads),
                                       static_cast<int>(p));
    auto worker = [&](int w) {
        // interleaved lag assignment: lag q is owned by worker q % nthreads,
        // and the sum over l runs in ascending order, so dhat is bitwise
        // identical for every thread count
        for (std::size_t q = static_cast<std::size_t>(w); q < p;
             q += static_cast<std::size_t>(nthreads)) {
            CompensatedSum acc;
            for (std::size_t l = 0; l + q < p; ++l) {
                const double* u = centered.data() + l * n;
                const double* v = centered.data() + (l + q) * n;
                acc.add(pair_term(u, v, n, p2, p3, p4));
            }
            out.dhat[q] = acc.value();
        }
    };

    if (nthreads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker, w);
        for (auto& t : pool) t.join();
    }
    return out;
}

LagProfile lag_profile_bruteforce(const DataMatrix& data) {
    check_estimable(data);
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    const double nd = static_cast<double>(n);
    const double p2 = nd * (nd - 1.0);
    const double p3 = p2 * (nd - 2.0);
    const double p4 = p3 * (nd - 3.0);

    LagProfile out;
    out.n = n;
    out.p = p;
    out.dhat.assign(p, 0.0);

    for (std::size_t q = 0; q < p; ++q) {
        CompensatedSum acc;
        for (std::size_t l = 0; l + q < p; ++l) {
            const double* u = data.col(l);
            const double* v = data.col(l + q);
            double A = 0.0, B = 0.0, C = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    A += (u[i] * v[i]) * (u[j] * v[j]);
                    for (std::size_t k = 0; k < n; ++k) {
                        if (k == i || k == j) continue;
                        B += u[i] * v[k] * (u[j] * v[j]);
                        for (std::size_t m = 0; m < n; ++m) {
                            if (m == i || m == j || m == k) continue;
                            C += u[i] * v[j] * u[k] * v[m];
                        }
                    }
                }
            }
            acc.add(A / p2 - 2.0 * B / p3 + C / p4);
        }
        out.dhat[q] = acc.value();
    }
    return out;
}

double w_stat(const LagProfile& profile, int k) {
    const std::size_t p = profile.p;
    if (k < 0 || static_cast<std::size_t>(k) > p - 1) {
        throw usage_error("bandwidth k = " + std::to_string(k) +
                          " outside [0, p-1] with p = " + std::to_string(p));
    }
    CompensatedSum acc;
    for (std::size_t q = static_cast<std::size_t>(k) + 1; q < p; ++q) {
        acc.add(profile.dhat[q]);
    }
    return 2.0 * acc.value();
}

double v_stat(const LagProfile& profile, int k) {
    const std::size_t p = profile.p;
    if (k < 0 || static_cast<std::size_t>(k) > p - 1) {
        throw usage_error("bandwidth k = " + std::to_string(k) +
                          " outside [0, p-1] with p = " + std::to_string(p));
    }
    CompensatedSum acc;
    for (std::size_t q = 1; q <= static_cast<std::size_t>(k); ++q) {
        acc.add(profile.dhat[q]);
    }
    return profile.dhat[0] + 2.0 * acc.value();
}

double t_stat(double w, double v, std::size_t n) {
    if (!(v > 0.0)) {
        throw compute_error(
            "band-mass estimate V = " + std::to_string(v) +
            " is not positive; the data are degenerate (constant columns or "
            "too little variation) and the standardized statistic is undefined");
    }
    return static_cast<double>(n) * w / v;
}

double p_value(double t) {
    if (!std::isfinite(t)) {
        throw error("p-value requested for a non-finite statistic");
    }
    return normal_sf(0.5 * t);
}

}  // namespace bandcov
