#pragma once

#include <cmath>

namespace bandcov {

// Neumaier's improved Kahan accumulator. Used wherever many mixed-sign terms
// are folded (the per-lag sum over column pairs, the tail sums over lags).
struct CompensatedSum {
    double s = 0.0;
    double c = 0.0;

    void add(double x) {
        const double t = s + x;
        if (std::fabs(s) >= std::fabs(x)) {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }

    double value() const { return s + c; }
};

}  // namespace bandcov
