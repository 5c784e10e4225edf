#include "bandcov/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "bandcov/accum.hpp"
#include "bandcov/rng.hpp"

namespace bandcov {

const char* method_name(BandwidthMethod m) {
    switch (m) {
        case BandwidthMethod::FixedThreshold: return "fixed";
        case BandwidthMethod::ChangePoint: return "changepoint";
        case BandwidthMethod::BLa: return "bl-a";
        case BandwidthMethod::BLb: return "bl-b";
    }
    return "?";
}

DiffSequence diff_sequence(const TestScan& scan, double delta, int M) {
    if (M < 1) {
        throw usage_error("difference sequence needs M >= 1");
    }
    if (!(delta >= 0.0)) {
        throw usage_error("difference exponent delta must be >= 0");
    }
    if (static_cast<std::size_t>(M) + 1 > scan.tilde_t.size()) {
        throw usage_error("difference ceiling M = " + std::to_string(M) +
                          " exceeds the scanned range (have " +
                          std::to_string(scan.tilde_t.size()) +
                          " ratio values)");
    }
    DiffSequence d;
    d.delta = delta;
    d.n = scan.n;
    d.M = static_cast<std::size_t>(M);
    d.values.resize(d.M);
    const double scale = std::pow(static_cast<double>(scan.n), delta);
    for (std::size_t k = 0; k < d.M; ++k) {
        d.values[k] = scale * (scan.tilde_t[k] - scan.tilde_t[k + 1]);
    }
    return d;
}

BandwidthEstimate fixed_threshold_estimator(const DiffSequence& diffs,
                                            double theta) {
    if (!(theta > 0.0)) {
        throw usage_error("threshold theta must be positive");
    }
    if (diffs.values.empty()) {
        throw usage_error("empty difference sequence");
    }
    BandwidthEstimate e;
    e.method = BandwidthMethod::FixedThreshold;
    e.theta = theta;
    e.delta = diffs.delta;
    e.diff_values = diffs.values;
    e.no_crossing = true;
    for (std::size_t k = 0; k < diffs.values.size(); ++k) {
        if (std::fabs(diffs.values[k]) < theta) {
            e.k_hat = static_cast<int>(k);
            e.no_crossing = false;
            break;
        }
    }
    return e;
}

namespace {

// weighted least-squares line through (xs, ys); returns {intercept, slope};
// degenerates to the weighted mean when the x-spread vanishes
std::pair<double, double> wls_line(const std::vector<double>& xs,
                                   const std::vector<double>& ys,
                                   const std::vector<double>& ws) {
    double W = 0.0, xb = 0.0, yb = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        W += ws[i];
        xb += ws[i] * xs[i];
        yb += ws[i] * ys[i];
    }
    xb /= W;
    yb /= W;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - xb;
        sxx += ws[i] * dx * dx;
        sxy += ws[i] * dx * (ys[i] - yb);
    }
    if (!(sxx > 0.0)) {
        return {yb, 0.0};
    }
    const double slope = sxy / sxx;
    return {yb - slope * xb, slope};
}

}  // namespace

std::vector<double> local_linear_fit(const std::vector<int>& xs,
                                     const std::vector<double>& ys,
                                     double span) {
    const std::size_t m = xs.size();
    if (m < 2 || ys.size() != m) {
        throw usage_error("local linear fit needs at least 2 (x, y) points");
    }
    if (!(span > 0.0 && span <= 1.0)) {
        throw usage_error("span must lie in (0, 1]");
    }
    {
        bool distinct = false;
        for (std::size_t i = 1; i < m && !distinct; ++i) {
            distinct = xs[i] != xs[0];
        }
        if (!distinct) {
            throw usage_error("local linear fit needs >= 2 distinct x values");
        }
    }

    std::size_t window = static_cast<std::size_t>(
        std::ceil(span * static_cast<double>(m)));
    window = std::clamp<std::size_t>(window, 2, m);

    std::vector<double> fitted(m);
    std::vector<std::size_t> order(m);
    std::vector<double> wx, wy, ww;
    for (std::size_t t = 0; t < m; ++t) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) {
                             return std::abs(xs[a] - xs[t]) <
                                    std::abs(xs[b] - xs[t]);
                         });
        int dmax = 0;
        for (std::size_t r = 0; r < window; ++r) {
            dmax = std::max(dmax, std::abs(xs[order[r]] - xs[t]));
        }
        wx.clear();
        wy.clear();
        ww.clear();
        for (std::size_t r = 0; r < window; ++r) {
            const std::size_t j = order[r];
            double w = 1.0;
            if (dmax > 0) {
                const double u = static_cast<double>(std::abs(xs[j] - xs[t])) /
                                 static_cast<double>(dmax);
                const double c = 1.0 - u * u * u;
                w = c * c * c;
            }
            wx.push_back(static_cast<double>(xs[j]));
            wy.push_back(ys[j]);
            ww.push_back(w);
        }
        const auto [a, b] = wls_line(wx, wy, ww);
        fitted[t] = a + b * static_cast<double>(xs[t]);
    }
    return fitted;
}

BandwidthEstimate change_point_estimator(const std::vector<double>& dseq,
                                         const std::vector<int>& candidates,
                                         double span) {
    if (dseq.size() < 3) {
        throw usage_error("change-point fit needs differences for j = 0..M "
                          "with M >= 2");
    }
    const int M = static_cast<int>(dseq.size()) - 1;
    if (candidates.empty()) {
        throw usage_error("empty candidate set");
    }
    if (!(span > 0.0 && span <= 1.0)) {
        throw usage_error("span must lie in (0, 1]");
    }
    for (int k : candidates) {
        if (k < 1 || k > M) {
            throw usage_error("candidate k = " + std::to_string(k) +
                              " outside {1..M} with M = " + std::to_string(M));
        }
    }

    BandwidthEstimate e;
    e.method = BandwidthMethod::ChangePoint;
    e.span = span;
    e.candidates = candidates;
    e.err.reserve(candidates.size());

    double best = std::numeric_limits<double>::infinity();
    int best_k = -1;
    for (int k : candidates) {
        std::vector<double> left(dseq.begin(), dseq.begin() + k + 1);
        std::vector<double> fit;
        if (k >= 5) {
            std::vector<int> xs(static_cast<std::size_t>(k) + 1);
            std::iota(xs.begin(), xs.end(), 0);
            fit = local_linear_fit(xs, left, span);
        } else {
            std::vector<double> xs(left.size()), ws(left.size(), 1.0);
            std::iota(xs.begin(), xs.end(), 0.0);
            const auto [a, b] = wls_line(xs, left, ws);
            fit.resize(left.size());
            for (std::size_t j = 0; j < left.size(); ++j) {
                fit[j] = a + b * static_cast<double>(j);
            }
        }
        CompensatedSum errk;
        for (std::size_t j = 0; j < left.size(); ++j) {
            errk.add(std::fabs(fit[j] - left[j]));
        }
        for (int j = k + 1; j <= M; ++j) {
            errk.add(std::fabs(dseq[static_cast<std::size_t>(k)] -
                               dseq[static_cast<std::size_t>(j)]));
        }
        const double ek = errk.value();
        e.err.push_back(ek);
        if (ek < best || (ek == best && k < best_k)) {
            best = ek;
            best_k = k;
        }
    }
    e.k_hat = best_k;
    return e;
}

BandwidthEstimate estimate_fixed(const TestScan& scan, double delta,
                                 double theta) {
    const int top = static_cast<int>(scan.results.size());
    return fixed_threshold_estimator(diff_sequence(scan, delta, top), theta);
}

BandwidthEstimate estimate_change_point(const TestScan& scan, double span,
                                        double p_floor) {
    const int K = static_cast<int>(scan.results.size()) - 1;
    if (K < 1) {
        throw usage_error("change-point fit needs a scan over k_max >= 1");
    }
    std::vector<int> candidates;
    for (int k = 1; k <= K; ++k) {
        if (scan.results[static_cast<std::size_t>(k)].p_value > p_floor) {
            candidates.push_back(k);
        }
    }
    if (candidates.empty()) {
        for (int k = 1; k <= K; ++k) candidates.push_back(k);
    }
    const DiffSequence diffs = diff_sequence(scan, 0.0, K + 1);
    return change_point_estimator(diffs.values, candidates, span);
}

SquareMatrix sample_covariance(const DataMatrix& data) {
    std::vector<std::size_t> rows(data.n());
    std::iota(rows.begin(), rows.end(), 0);
    return sample_covariance(data, rows);
}

SquareMatrix sample_covariance(const DataMatrix& data,
                               const std::vector<std::size_t>& rows) {
    const std::size_t m = rows.size();
    if (m < 2) {
        throw data_error("sample covariance needs at least 2 observations");
    }
    const std::size_t p = data.p();
    std::vector<double> centered(m * p);
    for (std::size_t j = 0; j < p; ++j) {
        const double* c = data.col(j);
        double mean = 0.0;
        for (std::size_t r = 0; r < m; ++r) mean += c[rows[r]];
        mean /= static_cast<double>(m);
        double* dst = centered.data() + j * m;
        for (std::size_t r = 0; r < m; ++r) dst[r] = c[rows[r]] - mean;
    }
    SquareMatrix s(p);
    const double denom = static_cast<double>(m - 1);
    for (std::size_t i = 0; i < p; ++i) {
        const double* ci = centered.data() + i * m;
        for (std::size_t j = i; j < p; ++j) {
            const double* cj = centered.data() + j * m;
            double acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) acc += ci[r] * cj[r];
            const double val = acc / denom;
            s.at(i, j) = val;
            s.at(j, i) = val;
        }
    }
    return s;
}

SquareMatrix band_matrix(const SquareMatrix& m, int k) {
    const std::size_t p = m.p();
    if (k < 0 || static_cast<std::size_t>(k) >= p) {
        throw usage_error("banding level k = " + std::to_string(k) +
                          " outside [0, p-1] with p = " + std::to_string(p));
    }
    SquareMatrix out(p);
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t lo = i > static_cast<std::size_t>(k)
                                   ? i - static_cast<std::size_t>(k)
                                   : 0;
        const std::size_t hi = std::min(p - 1, i + static_cast<std::size_t>(k));
        for (std::size_t j = lo; j <= hi; ++j) out.at(i, j) = m.at(i, j);
    }
    return out;
}

double norm_11(const SquareMatrix& m) {
    const std::size_t p = m.p();
    double best = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double colsum = 0.0;
        for (std::size_t i = 0; i < p; ++i) colsum += std::fabs(m.at(i, j));
        best = std::max(best, colsum);
    }
    return best;
}

double norm_frobenius(const SquareMatrix& m) {
    double acc = 0.0;
    for (double x : m.data()) acc += x * x;
    return std::sqrt(acc);
}

int default_bl_k_max(std::size_t n, std::size_t p) {
    return static_cast<int>(std::min(p - 1, 4 * n));
}

namespace {

std::size_t bl_split_size(std::size_t n, BandwidthMethod variant) {
    double frac;
    if (variant == BandwidthMethod::BLa) {
        frac = static_cast<double>(n) / 3.0;
    } else {
        frac = static_cast<double>(n) *
               (1.0 - 1.0 / std::log(static_cast<double>(n)));
    }
    auto n1 = static_cast<std::size_t>(std::floor(frac));
    return std::clamp<std::size_t>(n1, 2, n - 2);
}

// Per-split risk curve over k = 0..k_max, O(p^2 + k_max * p) after the two
// covariances are built.
//
// Frobenius: ||B_k(S1) - S2||_F^2 = sum_{q<=k} Aq + sum_{q>k} Bq with
//   Aq = sum over lag-q entries of (S1-S2)^2, Bq = same of S2^2.
// (1,1): per-column absolute sums are maintained incrementally; raising k by
// one swaps at most two entries per column from |S2| to |S1-S2|.
void accumulate_split_risk(const SquareMatrix& s1, const SquareMatrix& s2,
                           BandwidthMethod variant, int k_max,
                           std::vector<double>& rhat) {
    const std::size_t p = s1.p();
    const auto kmax = static_cast<std::size_t>(k_max);
    if (variant == BandwidthMethod::BLb) {
        std::vector<double> in_band(p, 0.0), out_band(p, 0.0);
        for (std::size_t q = 0; q < p; ++q) {
            double aq = 0.0, bq = 0.0;
            for (std::size_t i = 0; i + q < p; ++i) {
                const double d = s1.at(i, i + q) - s2.at(i, i + q);
                const double o = s2.at(i, i + q);
                aq += d * d;
                bq += o * o;
            }
            if (q > 0) {  // symmetric counterpart
                aq *= 2.0;
                bq *= 2.0;
            }
            in_band[q] = aq;
            out_band[q] = bq;
        }
        double tail = 0.0;
        for (std::size_t q = 1; q < p; ++q) tail += out_band[q];
        double head = 0.0;
        for (std::size_t k = 0; k <= kmax; ++k) {
            head += in_band[k];
            rhat[k] += std::sqrt(head + tail);
            if (k + 1 < p) tail -= out_band[k + 1];
        }
    } else {
        // start at k = 0: band holds the diagonal only
        std::vector<double> colsum(p);
        for (std::size_t j = 0; j < p; ++j) {
            double acc = std::fabs(s1.at(j, j) - s2.at(j, j));
            for (std::size_t i = 0; i < p; ++i) {
                if (i != j) acc += std::fabs(s2.at(i, j));
            }
            colsum[j] = acc;
        }
        rhat[0] += *std::max_element(colsum.begin(), colsum.end());
        for (std::size_t k = 1; k <= kmax; ++k) {
            for (std::size_t j = 0; j < p; ++j) {
                if (j >= k) {
                    const std::size_t i = j - k;
                    colsum[j] += std::fabs(s1.at(i, j) - s2.at(i, j)) -
                                 std::fabs(s2.at(i, j));
                }
                if (j + k < p) {
                    const std::size_t i = j + k;
                    colsum[j] += std::fabs(s1.at(i, j) - s2.at(i, j)) -
                                 std::fabs(s2.at(i, j));
                }
            }
            rhat[k] += *std::max_element(colsum.begin(), colsum.end());
        }
    }
}

}  // namespace

BandwidthEstimate bl_bandwidth(const DataMatrix& data, BandwidthMethod variant,
                               int n_splits, int k_max, std::uint64_t seed) {
    if (variant != BandwidthMethod::BLa && variant != BandwidthMethod::BLb) {
        throw usage_error("resampling selector expects variant bl-a or bl-b");
    }
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    if (n < 6) {
        throw data_error("resampling selector needs n >= 6 so both split "
                         "halves keep at least 2 rows (got n = " +
                         std::to_string(n) + ")");
    }
    if (n_splits < 1) {
        throw usage_error("number of splits must be >= 1");
    }
    if (k_max < 0 || static_cast<std::size_t>(k_max) >= p) {
        throw usage_error("search ceiling k_max = " + std::to_string(k_max) +
                          " outside [0, p-1] with p = " + std::to_string(p));
    }
    data.validate(6);

    BandwidthEstimate e;
    e.method = variant;
    e.seed = seed;
    e.n_splits = static_cast<std::size_t>(n_splits);
    e.n1 = bl_split_size(n, variant);
    e.n2 = n - e.n1;
    e.rhat.assign(static_cast<std::size_t>(k_max) + 1, 0.0);

    std::vector<std::size_t> idx(n);
    for (int v = 0; v < n_splits; ++v) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(v));
        std::iota(idx.begin(), idx.end(), 0);
        // partial Fisher-Yates: the first n1 entries form the first half
        for (std::size_t i = 0; i < e.n1; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(
                                          rng.below(static_cast<std::uint64_t>(
                                              n - i)));
            std::swap(idx[i], idx[j]);
        }
        const std::vector<std::size_t> first(idx.begin(),
                                             idx.begin() +
                                                 static_cast<long>(e.n1));
        const std::vector<std::size_t> second(idx.begin() +
                                                  static_cast<long>(e.n1),
                                              idx.end());
        const SquareMatrix s1 = sample_covariance(data, first);
        const SquareMatrix s2 = sample_covariance(data, second);
        accumulate_split_risk(s1, s2, variant, k_max, e.rhat);
    }
    for (double& r : e.rhat) r /= static_cast<double>(n_splits);

    std::size_t best = 0;
    for (std::size_t k = 1; k < e.rhat.size(); ++k) {
        if (e.rhat[k] < e.rhat[best]) best = k;
    }
    e.k_hat = static_cast<int>(best);
    return e;
}

}  // namespace bandcov
