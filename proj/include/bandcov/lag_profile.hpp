#pragma once

#include <cstddef>
#include <vector>

#include "bandcov/types.hpp"

namespace bandcov {

// Vector of unbiased per-lag sums of squared covariances: entry q estimates
// sum_{l=1}^{p-q} sigma_{l,l+q}^2 without bias, for q = 0..p-1.
struct LagProfile {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> dhat;
};

// Unbiased per-lag estimator, computed in O(n p^2) total.
//
// For each column pair (l, l+q) the three distinct-index sums
//   A = sum_{i != j}       (u_i v_i)(u_j v_j)
//   B = sum_{i,j,k dist}   u_i (u_j v_j) v_k
//   C = sum_{i,j,k,m dist} u_i v_j u_k v_m
// (u = column l, v = column l+q) are reduced by inclusion-exclusion to the
// eight O(n) moment sums S1=sum u, S2=sum v, S11=sum uv, S20=sum u^2,
// S02=sum v^2, S21=sum u^2 v, S12=sum u v^2, S22=sum u^2 v^2:
//   A = S11^2 - S22
//   B = S1 S11 S2 - S21 S2 - S11^2 - S12 S1 + 2 S22
//   C = S1^2 S2^2 - S20 S2^2 - S02 S1^2 - 4 S11 S1 S2 + 2 S11^2
//       + S20 S02 + 4 S21 S2 + 4 S12 S1 - 6 S22
// and the pair contributes A/P2 - 2B/P3 + C/P4 with Pb = n(n-1)...(n-b+1).
// The identities are machine-verified against the literal distinct-index
// sums, and lag_profile_bruteforce gates them at runtime in the tests.
//
// Columns are mean-centered first (the statistic is location invariant, so
// this only improves conditioning), and the sum over l within each lag uses
// compensated accumulation in a fixed canonical order. Lags may be computed
// in parallel; each dhat[q] is owned by exactly one worker, so the result is
// bitwise independent of the thread count.
//
// threads = 0 picks the hardware concurrency. Throws data_error for n < 4
// (P4 = 0) or non-finite input.
LagProfile lag_profile(const DataMatrix& data, int threads = 0);

// Literal evaluation of the same three distinct-index sums by explicit
// enumeration of index tuples, O(n^4 p^2). Testing oracle for lag_profile;
// intended for n <= 8.
LagProfile lag_profile_bruteforce(const DataMatrix& data);

// Tail sum 2 * sum_{q=k+1}^{p-1} dhat[q], estimating the squared Frobenius
// distance from the covariance to its k-banded version. Compensated
// accumulation, ascending q. Requires 0 <= k <= p-1.
double w_stat(const LagProfile& profile, int k);

// Band sum dhat[0] + 2 * sum_{q=1}^{k} dhat[q], estimating the squared
// Frobenius mass within the band. Requires 0 <= k <= p-1.
double v_stat(const LagProfile& profile, int k);

// Standardized statistic n * w / v, asymptotically N(0,4) when the
// covariance is k-banded. Throws compute_error when v <= 0 (degenerate
// data, e.g. all columns constant).
double t_stat(double w, double v, std::size_t n);

// One-sided upper-tail p-value 1 - Phi(t/2). Throws on non-finite t.
double p_value(double t);

}  // namespace bandcov
