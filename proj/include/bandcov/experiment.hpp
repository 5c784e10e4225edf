#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bandcov/bandwidth.hpp"
#include "bandcov/simulate.hpp"

namespace bandcov {

// A calibration run draws data under the model, applies the band test at
// one level, and reports rejection frequency (size when the level is the
// true bandwidth, power when it is below). A recovery run applies the
// bandwidth estimators and reports bias against the model bandwidth.
enum class ExperimentKind { TestCalibration, BandwidthRecovery };

struct ExperimentDesign {
    std::string name = "custom";
    ExperimentKind kind = ExperimentKind::TestCalibration;
    std::vector<double> gammas{1.0};
    Innovation innovation = Innovation::StandardNormal;
    std::size_t n = 40;
    std::size_t p = 100;
    std::size_t reps = 1000;

    int test_k = -1;     // banding level under test; -1 means the model bandwidth
    double alpha = 0.05;

    std::vector<BandwidthMethod> methods{
        BandwidthMethod::FixedThreshold, BandwidthMethod::ChangePoint,
        BandwidthMethod::BLa, BandwidthMethod::BLb};
    double delta = 0.5;
    double theta = 0.06;
    double span = 0.75;
    int n_splits = 50;
    int scan_k_max = 0;  // estimator scan ceiling; 0 means min(p-2, n, 30)
    int bl_k_max = 0;    // BL search ceiling; 0 means default_bl_k_max(n, p)

    std::uint64_t master_seed = 20260815;
    int threads = 0;     // replication workers; 0 means all hardware threads

    // Largest lag with nonzero model autocovariance.
    int model_bandwidth() const;
    int resolved_test_k() const;
    int resolved_scan_k_max() const;
    int resolved_bl_k_max() const;
    void validate() const;
};

// Named single-cell designs. table1a-d: size of the level-k test under the
// matching banded truth. table2a-b: power one level below the truth.
// table3 and table3bw{3,5,10,15}: estimator recovery (table3 = table3bw5).
ExperimentDesign preset_design(const std::string& name);
std::vector<std::string> preset_names();

// Flat key = value text (one pair per line, '#' comments). Keys: preset,
// n, p, gammas, innovation, reps, alpha, delta, theta, master_seed. The
// preset (default custom) is applied first, remaining keys in file order.
// Unknown keys are rejected. `where` labels the source in error messages.
ExperimentDesign parse_design_text(std::istream& in, const std::string& where);

struct TestCalibrationSummary {
    std::size_t reps = 0;
    std::size_t reject_count = 0;
    double reject_rate = 0.0;
    double reject_se = 0.0;    // binomial Monte-Carlo standard error
    double mean_w = 0.0;
    double sd_w = 0.0;
    double mean_half_t = 0.0;  // moments of T/2, the N(0,1) scale
    double var_half_t = 0.0;
    std::vector<double> w_values;  // per replication, in replication order
    std::vector<double> t_values;
    std::vector<std::uint8_t> rejects;
};

struct MethodRecoverySummary {
    BandwidthMethod method = BandwidthMethod::FixedThreshold;
    std::vector<long long> k_hat;  // per replication; -1 when no crossing
    std::size_t exact_count = 0;   // replications with k_hat == model bandwidth
    std::size_t no_crossing_count = 0;
    double mean_bias = 0.0;        // over crossing replications
    double sd_bias = 0.0;
    double bias_se = 0.0;          // sd_bias / sqrt(#crossing)
};

struct ExperimentResult {
    ExperimentDesign design;
    TestCalibrationSummary test;               // TestCalibration only
    std::vector<MethodRecoverySummary> recovery;  // BandwidthRecovery only
};

// Seeded replication loop. Replication r derives its seeds from substream r
// of the master seed; workers fill per-replication slots and the summaries
// are reduced serially in replication order, so the result is identical for
// any worker count.
ExperimentResult run_experiment(const ExperimentDesign& design);

}  // namespace bandcov
