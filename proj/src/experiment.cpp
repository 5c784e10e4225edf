#include "bandcov/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <thread>

#include "bandcov/accum.hpp"
#include "bandcov/rng.hpp"

namespace bandcov {

int ExperimentDesign::model_bandwidth() const {
    const int k0 = static_cast<int>(gammas.size()) - 1;
    for (int q = k0; q > 0; --q) {
        double acc = 0.0;
        for (int l = 0; l + q <= k0; ++l) acc += gammas[l] * gammas[l + q];
        if (acc != 0.0) return q;
    }
    return 0;
}

int ExperimentDesign::resolved_test_k() const {
    return test_k >= 0 ? test_k : model_bandwidth();
}

int ExperimentDesign::resolved_scan_k_max() const {
    if (scan_k_max > 0) return scan_k_max;
    const auto cap = static_cast<std::size_t>(30);
    return static_cast<int>(std::min({p - 2, n, cap}));
}

int ExperimentDesign::resolved_bl_k_max() const {
    return bl_k_max > 0 ? bl_k_max : default_bl_k_max(n, p);
}

void ExperimentDesign::validate() const {
    MAModelSpec model;
    model.gammas = gammas;
    model.n = n;
    model.p = p;
    model.validate();
    if (reps < 1) {
        throw usage_error("replication count must be at least 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw usage_error("alpha must lie strictly between 0 and 1");
    }
    if (kind == ExperimentKind::TestCalibration) {
        if (n < 4) {
            throw usage_error("calibration needs n >= 4");
        }
        const int k = resolved_test_k();
        if (k < 0 || static_cast<std::size_t>(k) > p - 2) {
            throw usage_error("tested level " + std::to_string(k) +
                              " outside [0, p-2]");
        }
    } else {
        if (methods.empty()) {
            throw usage_error("recovery run needs at least one method");
        }
        if (n < 4 || p < 3) {
            throw usage_error("recovery needs n >= 4 and p >= 3");
        }
        const int kmax = resolved_scan_k_max();
        if (kmax < 1 || static_cast<std::size_t>(kmax) > p - 2) {
            throw usage_error("scan ceiling " + std::to_string(kmax) +
                              " outside [1, p-2]");
        }
        for (BandwidthMethod m : methods) {
            if ((m == BandwidthMethod::BLa || m == BandwidthMethod::BLb) &&
                n < 6) {
                throw usage_error("resampling selectors need n >= 6");
            }
        }
        if (!(delta >= 0.0) || !(theta > 0.0)) {
            throw usage_error("need delta >= 0 and theta > 0");
        }
        if (!(span > 0.0 && span <= 1.0)) {
            throw usage_error("span must lie in (0, 1]");
        }
        if (n_splits < 1) {
            throw usage_error("need at least one split");
        }
    }
}

namespace {

ExperimentDesign make_table1(const std::string& name,
                             std::vector<double> gammas, Innovation law,
                             std::size_t n, std::size_t p) {
    ExperimentDesign d;
    d.name = name;
    d.kind = ExperimentKind::TestCalibration;
    d.gammas = std::move(gammas);
    d.innovation = law;
    d.n = n;
    d.p = p;
    d.reps = 1000;
    d.test_k = static_cast<int>(d.gammas.size()) - 1;
    return d;
}

ExperimentDesign make_table3(const std::string& name,
                             std::vector<double> gammas) {
    ExperimentDesign d;
    d.name = name;
    d.kind = ExperimentKind::BandwidthRecovery;
    d.gammas = std::move(gammas);
    d.n = 40;
    d.p = 200;
    d.reps = 100;
    return d;
}

std::vector<double> ramp(std::size_t len1, double v1, std::size_t len2,
                         double v2) {
    std::vector<double> g{1.0};
    g.insert(g.end(), len1, v1);
    g.insert(g.end(), len2, v2);
    return g;
}

}  // namespace

ExperimentDesign preset_design(const std::string& name) {
    if (name == "table1a") {
        return make_table1(name, {1.0}, Innovation::StandardNormal, 40, 100);
    }
    if (name == "table1b") {
        return make_table1(name, {1.0, 1.0}, Innovation::StandardNormal, 60,
                           300);
    }
    if (name == "table1c") {
        return make_table1(name, {1.0, 1.0, 1.0}, Innovation::StandardNormal,
                           40, 100);
    }
    if (name == "table1d") {
        return make_table1(name, ramp(5, 0.4, 0, 0.0),
                           Innovation::StandardizedGamma, 40, 300);
    }
    if (name == "table2a") {
        // truth one level above the tested band: power of the hardest case
        ExperimentDesign d = make_table1(name, {1.0, 1.0, 1.0},
                                         Innovation::StandardNormal, 60, 100);
        d.test_k = 1;
        return d;
    }
    if (name == "table2b") {
        ExperimentDesign d = make_table1(name, ramp(5, 0.4, 0, 0.0),
                                         Innovation::StandardNormal, 40, 100);
        d.test_k = 4;
        return d;
    }
    if (name == "table3" || name == "table3bw5") {
        return make_table3(name, ramp(5, 0.4, 0, 0.0));
    }
    if (name == "table3bw3") {
        return make_table3(name, ramp(3, 1.0, 0, 0.0));
    }
    if (name == "table3bw10") {
        return make_table3(name, ramp(5, 0.2, 5, 0.4));
    }
    if (name == "table3bw15") {
        return make_table3(name, ramp(10, 0.2, 5, 0.4));
    }
    std::string known;
    for (const std::string& p : preset_names()) {
        if (!known.empty()) known += ", ";
        known += p;
    }
    throw usage_error("unknown preset '" + name + "' (known: " + known + ")");
}

std::vector<std::string> preset_names() {
    return {"table1a", "table1b", "table1c",   "table1d",
            "table2a", "table2b", "table3",    "table3bw3",
            "table3bw5", "table3bw10", "table3bw15"};
}

namespace {

std::string trim(const std::string& s) {
    const std::size_t lo = s.find_first_not_of(" \t");
    if (lo == std::string::npos) return {};
    const std::size_t hi = s.find_last_not_of(" \t");
    return s.substr(lo, hi - lo + 1);
}

double parse_double(const std::string& value, const std::string& where) {
    double out = 0.0;
    const char* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out)) {
        throw usage_error(where + ": cannot parse '" + value +
                          "' as a number");
    }
    return out;
}

unsigned long long parse_uint(const std::string& value,
                              const std::string& where) {
    unsigned long long out = 0;
    const char* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) {
        throw usage_error(where + ": cannot parse '" + value +
                          "' as a nonnegative integer");
    }
    return out;
}

std::vector<double> parse_gammas(const std::string& value,
                                 const std::string& where) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        const std::string cell = trim(value.substr(start, comma - start));
        if (cell.empty()) {
            throw usage_error(where + ": empty coefficient");
        }
        out.push_back(parse_double(cell, where));
        start = comma + 1;
    }
    return out;
}

Innovation parse_innovation(const std::string& value,
                            const std::string& where) {
    if (value == "normal") return Innovation::StandardNormal;
    if (value == "gamma") return Innovation::StandardizedGamma;
    throw usage_error(where + ": innovation must be 'normal' or 'gamma', got '" +
                      value + "'");
}

}  // namespace

ExperimentDesign parse_design_text(std::istream& in,
                                   const std::string& where) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        const std::string at = where + ":" + std::to_string(lineno);
        if (eq == std::string::npos) {
            throw usage_error(at + ": expected 'key = value'");
        }
        std::string key = trim(stripped.substr(0, eq));
        std::replace(key.begin(), key.end(), '-', '_');
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw usage_error(at + ": expected 'key = value'");
        }
        pairs.emplace_back(key, value);
    }
    if (in.bad()) {
        throw usage_error(where + ": read failure");
    }

    // The preset is applied first no matter where its line appears, so every
    // other key overrides it.
    ExperimentDesign design;
    for (const auto& [key, value] : pairs) {
        if (key == "preset") design = preset_design(value);
    }
    bool seen_preset = false;
    for (const auto& [key, value] : pairs) {
        const std::string at = where + " key '" + key + "'";
        if (key == "preset") {
            if (seen_preset) {
                throw usage_error(at + ": given twice");
            }
            seen_preset = true;
        } else if (key == "n") {
            design.n = static_cast<std::size_t>(parse_uint(value, at));
        } else if (key == "p") {
            design.p = static_cast<std::size_t>(parse_uint(value, at));
        } else if (key == "gammas") {
            design.gammas = parse_gammas(value, at);
        } else if (key == "innovation") {
            design.innovation = parse_innovation(value, at);
        } else if (key == "reps") {
            design.reps = static_cast<std::size_t>(parse_uint(value, at));
        } else if (key == "alpha") {
            design.alpha = parse_double(value, at);
        } else if (key == "delta") {
            design.delta = parse_double(value, at);
        } else if (key == "theta") {
            design.theta = parse_double(value, at);
        } else if (key == "master_seed") {
            design.master_seed = parse_uint(value, at);
        } else {
            throw usage_error(where + ": unknown key '" + key +
                              "' (known: preset, n, p, gammas, innovation, "
                              "reps, alpha, delta, theta, master_seed)");
        }
    }
    return design;
}

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Workers pull replication indices from a shared counter; any scheduling
// order is fine because each replication writes only its own slot.
template <typename Body>
void run_replications(std::size_t reps, int threads, const Body& body) {
    const int workers =
        static_cast<int>(std::min<std::size_t>(reps, resolve_threads(threads)));
    if (workers <= 1) {
        for (std::size_t r = 0; r < reps; ++r) body(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex fail_mutex;
    std::exception_ptr failure;
    auto loop = [&] {
        while (true) {
            const std::size_t r = next.fetch_add(1);
            if (r >= reps) return;
            try {
                body(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) failure = std::current_exception();
                next.store(reps);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(loop);
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& v) {
    MeanSd out;
    if (v.empty()) return out;
    CompensatedSum sum;
    for (double x : v) sum.add(x);
    out.mean = sum.value() / static_cast<double>(v.size());
    if (v.size() < 2) return out;
    CompensatedSum sq;
    for (double x : v) sq.add((x - out.mean) * (x - out.mean));
    out.sd = std::sqrt(sq.value() / static_cast<double>(v.size() - 1));
    return out;
}

ExperimentResult run_calibration(const ExperimentDesign& design) {
    ExperimentResult result;
    result.design = design;
    TestCalibrationSummary& s = result.test;
    const std::size_t reps = design.reps;
    s.reps = reps;
    s.w_values.resize(reps);
    s.t_values.resize(reps);
    s.rejects.resize(reps);
    const int k = design.resolved_test_k();

    run_replications(reps, design.threads, [&](std::size_t r) {
        const std::uint64_t rep_seed = substream_seed(design.master_seed, r);
        MAModelSpec model;
        model.gammas = design.gammas;
        model.innovation = design.innovation;
        model.n = design.n;
        model.p = design.p;
        model.seed = substream_seed(rep_seed, 0);
        const DataMatrix data = generate(model);
        const BandTestResult res = run_test(data, k, design.alpha, 1);
        s.w_values[r] = res.w;
        s.t_values[r] = res.t;
        s.rejects[r] = res.reject ? 1 : 0;
    });

    for (std::uint8_t rej : s.rejects) s.reject_count += rej;
    s.reject_rate = static_cast<double>(s.reject_count) /
                    static_cast<double>(reps);
    s.reject_se = std::sqrt(s.reject_rate * (1.0 - s.reject_rate) /
                            static_cast<double>(reps));
    const MeanSd w = mean_sd(s.w_values);
    s.mean_w = w.mean;
    s.sd_w = w.sd;
    std::vector<double> half(reps);
    for (std::size_t r = 0; r < reps; ++r) half[r] = 0.5 * s.t_values[r];
    const MeanSd ht = mean_sd(half);
    s.mean_half_t = ht.mean;
    s.var_half_t = ht.sd * ht.sd;
    return result;
}

ExperimentResult run_recovery(const ExperimentDesign& design) {
    ExperimentResult result;
    result.design = design;
    const std::size_t reps = design.reps;
    const std::size_t nm = design.methods.size();
    result.recovery.resize(nm);
    for (std::size_t m = 0; m < nm; ++m) {
        result.recovery[m].method = design.methods[m];
        result.recovery[m].k_hat.assign(reps, -1);
    }

    const int scan_kmax = design.resolved_scan_k_max();
    const int bl_kmax = design.resolved_bl_k_max();
    bool need_scan = false;
    for (BandwidthMethod m : design.methods) {
        need_scan = need_scan || m == BandwidthMethod::FixedThreshold ||
                    m == BandwidthMethod::ChangePoint;
    }

    run_replications(reps, design.threads, [&](std::size_t r) {
        const std::uint64_t rep_seed = substream_seed(design.master_seed, r);
        MAModelSpec model;
        model.gammas = design.gammas;
        model.innovation = design.innovation;
        model.n = design.n;
        model.p = design.p;
        model.seed = substream_seed(rep_seed, 0);
        const DataMatrix data = generate(model);

        TestScan sc;
        if (need_scan) sc = scan(data, scan_kmax, design.alpha, 1);

        for (std::size_t m = 0; m < nm; ++m) {
            BandwidthEstimate est;
            switch (design.methods[m]) {
                case BandwidthMethod::FixedThreshold:
                    est = estimate_fixed(sc, design.delta, design.theta);
                    break;
                case BandwidthMethod::ChangePoint:
                    est = estimate_change_point(sc, design.span);
                    break;
                case BandwidthMethod::BLa:
                    est = bl_bandwidth(data, BandwidthMethod::BLa,
                                       design.n_splits, bl_kmax,
                                       substream_seed(rep_seed, 1));
                    break;
                case BandwidthMethod::BLb:
                    est = bl_bandwidth(data, BandwidthMethod::BLb,
                                       design.n_splits, bl_kmax,
                                       substream_seed(rep_seed, 2));
                    break;
            }
            result.recovery[m].k_hat[r] = est.no_crossing ? -1 : est.k_hat;
        }
    });

    const int truth = design.model_bandwidth();
    for (MethodRecoverySummary& s : result.recovery) {
        std::vector<double> bias;
        bias.reserve(reps);
        for (long long k : s.k_hat) {
            if (k < 0) {
                ++s.no_crossing_count;
                continue;
            }
            if (k == truth) ++s.exact_count;
            bias.push_back(static_cast<double>(k - truth));
        }
        const MeanSd b = mean_sd(bias);
        s.mean_bias = b.mean;
        s.sd_bias = b.sd;
        s.bias_se = bias.empty()
                        ? 0.0
                        : b.sd / std::sqrt(static_cast<double>(bias.size()));
    }
    return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentDesign& design) {
    design.validate();
    if (design.kind == ExperimentKind::TestCalibration) {
        return run_calibration(design);
    }
    return run_recovery(design);
}

}  // namespace bandcov
