#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bandcov/band_test.hpp"
#include "bandcov/types.hpp"

namespace bandcov {

// First-order differences of the ratio statistics, scaled by n^delta:
// values[k] = n^delta * (tilde_t[k] - tilde_t[k+1]) for k = 0..M-1.
struct DiffSequence {
    double delta = 0.0;
    std::size_t n = 0;
    std::size_t M = 0;
    std::vector<double> values;
};

enum class BandwidthMethod { FixedThreshold, ChangePoint, BLa, BLb };

const char* method_name(BandwidthMethod m);

// Estimate plus the diagnostics needed to recompute it deterministically.
struct BandwidthEstimate {
    BandwidthMethod method = BandwidthMethod::FixedThreshold;
    int k_hat = -1;
    bool no_crossing = false;  // FixedThreshold: no |value| dropped below theta

    // FixedThreshold
    double theta = 0.0;
    double delta = 0.0;
    std::vector<double> diff_values;

    // ChangePoint: err[i] corresponds to candidates[i]
    double span = 0.0;
    std::vector<int> candidates;
    std::vector<double> err;

    // BL resampling variants
    std::vector<double> rhat;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t n_splits = 0;
    std::uint64_t seed = 0;
};

// Differences from a scan. Requires delta > 0 is NOT enforced here: the
// change-point path uses delta = 0 (no scaling), the threshold path a
// positive delta. Requires M >= 1 and M + 1 <= scan.tilde_t.size().
DiffSequence diff_sequence(const TestScan& scan, double delta, int M);

// First k in 0..M-1 with |values[k]| < theta; an explicit no-crossing
// outcome when none qualifies. Requires theta > 0 and a nonempty sequence.
BandwidthEstimate fixed_threshold_estimator(const DiffSequence& diffs,
                                            double theta);

// Locally weighted linear smoother: for each x, a weighted least-squares
// line over the ceil(span*m) nearest points (ties by index), tricube
// weights (1-u^3)^3 on distance normalized by the window maximum. Windows
// are clamped to at least 2 points; a window whose x-spread is zero falls
// back to the weighted mean. Requires >= 2 points with >= 2 distinct x,
// 0 < span <= 1.
std::vector<double> local_linear_fit(const std::vector<int>& xs,
                                     const std::vector<double>& ys,
                                     double span);

// Change-point fit over the unscaled differences d[j], j = 0..M: for each
// candidate k, the left part {0..k} is fitted by an OLS line (k < 5) or the
// local-linear smoother above (k >= 5), the right part {k+1..M} by the flat
// level d[k]; err(k) is the total absolute deviation and k_hat the argmin
// over the candidates, ties to the smallest k. Candidates must be a nonempty
// subset of {1..M}.
BandwidthEstimate change_point_estimator(const std::vector<double>& dseq,
                                         const std::vector<int>& candidates,
                                         double span);

// Threshold estimator driven straight from a scan over k = 0..K: the
// differences use all K+1 available first-order gaps.
BandwidthEstimate estimate_fixed(const TestScan& scan, double delta,
                                 double theta);

// Change-point estimator driven from a scan: candidates are the levels
// k in 1..K whose p-value exceeds p_floor (all of 1..K when none does),
// fitted over the unscaled differences.
BandwidthEstimate estimate_change_point(const TestScan& scan, double span,
                                        double p_floor = 1e-10);

// Mean-centered sample covariance with divisor n-1. The subset overload uses
// the given rows only (indices into data). Requires >= 2 rows.
SquareMatrix sample_covariance(const DataMatrix& data);
SquareMatrix sample_covariance(const DataMatrix& data,
                               const std::vector<std::size_t>& rows);

// Zero all entries with |i-j| > k. Requires 0 <= k <= p-1.
SquareMatrix band_matrix(const SquareMatrix& m, int k);

// max_j sum_i |a_ij| (maximum absolute column sum)
double norm_11(const SquareMatrix& m);
double norm_frobenius(const SquareMatrix& m);

// Resampling selector: average over n_splits seeded random splits of the
// chosen norm of (banded first-half covariance minus second-half
// covariance), minimized over k = 0..k_max. Variant BLa splits off
// n1 = floor(n/3) rows and uses the (1,1) norm; BLb uses
// n1 = floor(n*(1-1/log n)) rows and the Frobenius norm. n1 is clamped to
// [2, n-2]; ties in the argmin go to the smallest k. Split v draws its rows
// from substream v of the given seed, so the curve is reproducible and
// independent of evaluation order. Requires n >= 6, n_splits >= 1,
// 0 <= k_max <= p-1.
BandwidthEstimate bl_bandwidth(const DataMatrix& data, BandwidthMethod variant,
                               int n_splits, int k_max, std::uint64_t seed);

// Default ceiling for the BL argmin search.
int default_bl_k_max(std::size_t n, std::size_t p);

}  // namespace bandcov
