#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bandcov {

// Error taxonomy. The CLI maps these onto distinct exit codes, so library
// code must pick the right class: bad user-supplied values -> usage_error,
// malformed or out-of-contract input data -> data_error, numerically
// degenerate situations discovered mid-computation -> compute_error.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct usage_error : error {
    using error::error;
};
struct data_error : error {
    using error::error;
};
struct compute_error : error {
    using error::error;
};

// n x p observation matrix, rows = observations. Stored column-major because
// every hot path walks one or two full columns at a time.
class DataMatrix {
public:
    DataMatrix() = default;
    DataMatrix(std::size_t n, std::size_t p)
        : n_(n), p_(p), values_(n * p, 0.0) {}

    std::size_t n() const { return n_; }
    std::size_t p() const { return p_; }

    double& at(std::size_t i, std::size_t j) { return values_[j * n_ + i]; }
    double at(std::size_t i, std::size_t j) const { return values_[j * n_ + i]; }

    const double* col(std::size_t j) const { return values_.data() + j * n_; }
    double* col(std::size_t j) { return values_.data() + j * n_; }

    // Throws data_error if any entry is NaN/Inf or if n < min_n.
    void validate(std::size_t min_n) const {
        if (n_ < min_n) {
            throw data_error("observation count n = " + std::to_string(n_) +
                             " is below the required minimum " +
                             std::to_string(min_n));
        }
        if (p_ < 2) {
            throw data_error("dimension p = " + std::to_string(p_) +
                             " is below the required minimum 2");
        }
        for (std::size_t j = 0; j < p_; ++j) {
            const double* c = col(j);
            for (std::size_t i = 0; i < n_; ++i) {
                if (!std::isfinite(c[i])) {
                    throw data_error("non-finite value at row " +
                                     std::to_string(i + 1) + ", column " +
                                     std::to_string(j + 1));
                }
            }
        }
    }

private:
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::vector<double> values_;
};

// Dense square matrix, row-major. Used for covariance matrices and the
// population covariance; banded structure is exploited by iteration bounds,
// not by storage.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t p) : p_(p), a_(p * p, 0.0) {}

    std::size_t p() const { return p_; }
    double& at(std::size_t i, std::size_t j) { return a_[i * p_ + j]; }
    double at(std::size_t i, std::size_t j) const { return a_[i * p_ + j]; }
    const std::vector<double>& data() const { return a_; }

private:
    std::size_t p_ = 0;
    std::vector<double> a_;
};

}  // namespace bandcov
