// bandcov: test whether a covariance matrix is banded, estimate the
// bandwidth, and run the simulation presets. Input CSVs hold observations in
// rows and variables in columns; there is no transpose option, so a matrix
// stored the other way round must be transposed before use.
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bandcov/band_test.hpp"
#include "bandcov/bandwidth.hpp"
#include "bandcov/csv_io.hpp"
#include "bandcov/experiment.hpp"
#include "bandcov/format.hpp"
#include "bandcov/lag_profile.hpp"
#include "bandcov/rng.hpp"
#include "bandcov/types.hpp"

namespace {

using namespace bandcov;

// ---------------------------------------------------------------- utilities

std::string trim(const std::string& s) {
    const std::size_t lo = s.find_first_not_of(" \t");
    if (lo == std::string::npos) return {};
    const std::size_t hi = s.find_last_not_of(" \t");
    return s.substr(lo, hi - lo + 1);
}

double parse_double(const std::string& value, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(value, &pos);
        if (pos == value.size()) return out;
    } catch (const std::exception&) {
    }
    throw usage_error(where + ": cannot parse '" + value + "' as a number");
}

long long parse_int(const std::string& value, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long long out = std::stoll(value, &pos);
        if (pos == value.size()) return out;
    } catch (const std::exception&) {
    }
    throw usage_error(where + ": cannot parse '" + value + "' as an integer");
}

std::uint64_t parse_seed(const std::string& value, const std::string& where) {
    try {
        std::size_t pos = 0;
        const unsigned long long out = std::stoull(value, &pos);
        if (pos == value.size()) return out;
    } catch (const std::exception&) {
    }
    throw usage_error(where + ": cannot parse '" + value + "' as a seed");
}

bool parse_bool(const std::string& value, const std::string& where) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw usage_error(where + ": cannot parse '" + value + "' as true/false");
}

BandwidthMethod parse_method(const std::string& value,
                             const std::string& where) {
    if (value == "fixed") return BandwidthMethod::FixedThreshold;
    if (value == "changepoint") return BandwidthMethod::ChangePoint;
    if (value == "bl-a") return BandwidthMethod::BLa;
    if (value == "bl-b") return BandwidthMethod::BLb;
    throw usage_error(where +
                      ": method must be fixed, changepoint, bl-a or bl-b, "
                      "got '" +
                      value + "'");
}

void check_format(const std::string& format) {
    if (format != "json" && format != "csv") {
        throw usage_error("format must be json or csv, got '" + format + "'");
    }
}

void write_output(const std::string& output, const std::string& content) {
    if (output.empty() || output == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream f(output, std::ios::binary);
    if (!f) {
        throw data_error(output + ": cannot open for writing");
    }
    f << content;
    f.flush();
    if (!f) {
        throw data_error(output + ": write failure");
    }
}

// -------------------------------------------------- flat key = value config

using ConfigPairs = std::vector<std::pair<std::string, std::string>>;

ConfigPairs read_config_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw usage_error(path + ": cannot open config file");
    }
    ConfigPairs pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw usage_error(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        std::string key = trim(stripped.substr(0, eq));
        std::replace(key.begin(), key.end(), '-', '_');
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw usage_error(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        pairs.emplace_back(key, value);
    }
    return pairs;
}

struct KeyBinding {
    const char* key;
    CLI::Option* opt;  // the flag that overrides this key; may be null
    std::function<void(const std::string& value, const std::string& at)> apply;
};

// A config file fills in whatever the command line left unset: a key is
// skipped when its flag was given explicitly. Unknown keys are rejected.
void apply_flat_config(const std::string& path,
                       const std::vector<KeyBinding>& bindings) {
    if (path.empty()) return;
    for (const auto& [key, value] : read_config_pairs(path)) {
        const KeyBinding* hit = nullptr;
        for (const KeyBinding& b : bindings) {
            if (key == b.key) {
                hit = &b;
                break;
            }
        }
        if (!hit) {
            std::string known;
            for (const KeyBinding& b : bindings) {
                if (!known.empty()) known += ", ";
                known += b.key;
            }
            throw usage_error(path + ": unknown key '" + key +
                              "' for this command (known: " + known + ")");
        }
        if (hit->opt && hit->opt->count() > 0) continue;
        hit->apply(value, path + " key '" + key + "'");
    }
}

// ------------------------------------------------------------ shared option

struct IoOptions {
    std::string input;
    bool header = false;
    int threads = 0;
    std::string format = "json";
    std::string output = "-";
    std::string config;

    CLI::Option* input_opt = nullptr;
    CLI::Option* header_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* format_opt = nullptr;
    CLI::Option* output_opt = nullptr;
};

void add_io_options(CLI::App* sub, IoOptions& io, bool with_input) {
    if (with_input) {
        io.input_opt = sub->add_option(
            "--input", io.input,
            "CSV file, '-' for standard input; rows are observations");
        io.header_opt =
            sub->add_flag("--header", io.header, "skip the first data line");
    }
    io.threads_opt = sub->add_option("--threads", io.threads,
                                     "worker threads, 0 = all hardware");
    io.format_opt = sub->add_option("--format", io.format, "json or csv");
    io.output_opt =
        sub->add_option("--output", io.output, "output path, '-' for stdout");
    sub->add_option("--config", io.config,
                    "flat key = value file; explicit flags win");
}

std::vector<KeyBinding> io_bindings(IoOptions& io, bool with_input) {
    std::vector<KeyBinding> b;
    if (with_input) {
        b.push_back({"input", io.input_opt,
                     [&io](const std::string& v, const std::string&) {
                         io.input = v;
                     }});
        b.push_back({"header", io.header_opt,
                     [&io](const std::string& v, const std::string& at) {
                         io.header = parse_bool(v, at);
                     }});
    }
    b.push_back({"threads", io.threads_opt,
                 [&io](const std::string& v, const std::string& at) {
                     io.threads = static_cast<int>(parse_int(v, at));
                 }});
    b.push_back({"format", io.format_opt,
                 [&io](const std::string& v, const std::string&) {
                     io.format = v;
                 }});
    b.push_back({"output", io.output_opt,
                 [&io](const std::string& v, const std::string&) {
                     io.output = v;
                 }});
    return b;
}

DataMatrix load_input(const IoOptions& io) {
    if (io.input.empty()) {
        throw usage_error("no input given (use --input PATH or a config file)");
    }
    return read_csv_file(io.input, io.header);
}

// ------------------------------------------------------------------- test

struct TestOptions {
    IoOptions io;
    int k = 0;
    double alpha = 0.05;
    CLI::Option* k_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
};

void run_test_cmd(TestOptions& o) {
    std::vector<KeyBinding> binds = io_bindings(o.io, true);
    binds.push_back({"k", o.k_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.k = static_cast<int>(parse_int(v, at));
                     }});
    binds.push_back({"alpha", o.alpha_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.alpha = parse_double(v, at);
                     }});
    apply_flat_config(o.io.config, binds);
    check_format(o.io.format);

    const DataMatrix data = load_input(o.io);
    const BandTestResult r = run_test(data, o.k, o.alpha, o.io.threads);

    std::string out;
    if (o.io.format == "json") {
        out += "{\n";
        out += "  \"command\": \"test\",\n";
        out += "  \"n\": " + std::to_string(data.n()) + ",\n";
        out += "  \"p\": " + std::to_string(data.p()) + ",\n";
        out += "  \"alpha\": " + json_number(r.alpha) + ",\n";
        out += "  \"k\": " + std::to_string(r.k) + ",\n";
        out += "  \"W\": " + json_number(r.w) + ",\n";
        out += "  \"V\": " + json_number(r.v) + ",\n";
        out += "  \"T\": " + json_number(r.t) + ",\n";
        out += "  \"p_value\": " + json_number(r.p_value) + ",\n";
        out += std::string("  \"reject\": ") + (r.reject ? "true" : "false") +
               "\n";
        out += "}\n";
    } else {
        out += "k,W,V,T,p_value,reject,alpha\n";
        out += std::to_string(r.k) + "," + fmt17(r.w) + "," + fmt17(r.v) +
               "," + fmt17(r.t) + "," + fmt17(r.p_value) + "," +
               (r.reject ? "1" : "0") + "," + fmt17(r.alpha) + "\n";
    }
    write_output(o.io.output, out);
}

// ------------------------------------------------------------------- scan

struct ScanOptions {
    IoOptions io;
    int k_max = 0;  // 0 = data-driven default
    double alpha = 0.05;
    double delta = 0.0;
    CLI::Option* k_max_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* delta_opt = nullptr;
};

void run_scan_cmd(ScanOptions& o) {
    std::vector<KeyBinding> binds = io_bindings(o.io, true);
    binds.push_back({"k_max", o.k_max_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.k_max = static_cast<int>(parse_int(v, at));
                     }});
    binds.push_back({"alpha", o.alpha_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.alpha = parse_double(v, at);
                     }});
    binds.push_back({"delta", o.delta_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.delta = parse_double(v, at);
                     }});
    apply_flat_config(o.io.config, binds);
    check_format(o.io.format);

    const DataMatrix data = load_input(o.io);
    const int k_max =
        o.k_max > 0 ? o.k_max : default_k_max(data.n(), data.p());
    const TestScan sc = scan(data, k_max, o.alpha, o.io.threads);
    const DiffSequence diffs = diff_sequence(sc, o.delta, k_max + 1);

    std::string out;
    if (o.io.format == "json") {
        out += "{\n";
        out += "  \"command\": \"scan\",\n";
        out += "  \"n\": " + std::to_string(sc.n) + ",\n";
        out += "  \"p\": " + std::to_string(sc.p) + ",\n";
        out += "  \"alpha\": " + json_number(sc.alpha) + ",\n";
        out += "  \"k_max\": " + std::to_string(k_max) + ",\n";
        out += "  \"delta\": " + json_number(o.delta) + ",\n";
        out += "  \"results\": [\n";
        for (std::size_t i = 0; i < sc.results.size(); ++i) {
            const BandTestResult& r = sc.results[i];
            out += "    {\"k\": " + std::to_string(r.k) +
                   ", \"W\": " + json_number(r.w) +
                   ", \"V\": " + json_number(r.v) +
                   ", \"T\": " + json_number(r.t) +
                   ", \"p_value\": " + json_number(r.p_value) +
                   ", \"tilde_t\": " + json_number(sc.tilde_t[i]) +
                   ", \"d_nk\": " + json_number(diffs.values[i]) + "}";
            out += i + 1 < sc.results.size() ? ",\n" : "\n";
        }
        out += "  ]\n";
        out += "}\n";
    } else {
        out += "k,W,V,T,p_value,tilde_t,d_nk\n";
        for (std::size_t i = 0; i < sc.results.size(); ++i) {
            const BandTestResult& r = sc.results[i];
            out += std::to_string(r.k) + "," + fmt17(r.w) + "," + fmt17(r.v) +
                   "," + fmt17(r.t) + "," + fmt17(r.p_value) + "," +
                   fmt17(sc.tilde_t[i]) + "," + fmt17(diffs.values[i]) + "\n";
        }
    }
    write_output(o.io.output, out);
}

// -------------------------------------------------------------- bandwidth

struct BandwidthOptions {
    IoOptions io;
    std::string method;
    int k_max = 0;
    double alpha = 0.05;
    double delta = 0.5;
    double theta = 0.06;
    double span = 0.75;
    int splits = 50;
    std::uint64_t seed = ExperimentDesign{}.master_seed;
    CLI::Option* method_opt = nullptr;
    CLI::Option* k_max_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* delta_opt = nullptr;
    CLI::Option* theta_opt = nullptr;
    CLI::Option* span_opt = nullptr;
    CLI::Option* splits_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
};

void run_bandwidth_cmd(BandwidthOptions& o) {
    std::vector<KeyBinding> binds = io_bindings(o.io, true);
    binds.push_back({"method", o.method_opt,
                     [&o](const std::string& v, const std::string&) {
                         o.method = v;
                     }});
    binds.push_back({"k_max", o.k_max_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.k_max = static_cast<int>(parse_int(v, at));
                     }});
    binds.push_back({"alpha", o.alpha_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.alpha = parse_double(v, at);
                     }});
    binds.push_back({"delta", o.delta_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.delta = parse_double(v, at);
                     }});
    binds.push_back({"theta", o.theta_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.theta = parse_double(v, at);
                     }});
    binds.push_back({"span", o.span_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.span = parse_double(v, at);
                     }});
    binds.push_back({"splits", o.splits_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.splits = static_cast<int>(parse_int(v, at));
                     }});
    binds.push_back({"seed", o.seed_opt,
                     [&o](const std::string& v, const std::string& at) {
                         o.seed = parse_seed(v, at);
                     }});
    apply_flat_config(o.io.config, binds);
    check_format(o.io.format);
    if (o.method.empty()) {
        throw usage_error("no method given (fixed, changepoint, bl-a, bl-b)");
    }
    const BandwidthMethod method = parse_method(o.method, "--method");

    const DataMatrix data = load_input(o.io);
    BandwidthEstimate est;
    if (method == BandwidthMethod::FixedThreshold ||
        method == BandwidthMethod::ChangePoint) {
        const int k_max =
            o.k_max > 0 ? o.k_max : default_k_max(data.n(), data.p());
        const TestScan sc = scan(data, k_max, o.alpha, o.io.threads);
        est = method == BandwidthMethod::FixedThreshold
                  ? estimate_fixed(sc, o.delta, o.theta)
                  : estimate_change_point(sc, o.span);
    } else {
        const int k_max =
            o.k_max > 0 ? o.k_max : default_bl_k_max(data.n(), data.p());
        est = bl_bandwidth(data, method, o.splits, k_max, o.seed);
    }

    const std::string status = est.no_crossing ? "no_crossing" : "ok";
    const std::string k_hat_json =
        est.no_crossing ? "null" : std::to_string(est.k_hat);

    std::string out;
    if (o.io.format == "json") {
        out += "{\n";
        out += "  \"command\": \"bandwidth\",\n";
        out += "  \"method\": " + json_quote(method_name(method)) + ",\n";
        out += "  \"n\": " + std::to_string(data.n()) + ",\n";
        out += "  \"p\": " + std::to_string(data.p()) + ",\n";
        out += "  \"status\": " + json_quote(status) + ",\n";
        out += "  \"k_hat\": " + k_hat_json + ",\n";
        out += "  \"diagnostics\": {";
        switch (method) {
            case BandwidthMethod::FixedThreshold:
                out += "\"delta\": " + json_number(est.delta) +
                       ", \"theta\": " + json_number(est.theta) +
                       ", \"diff\": " + json_number_array(est.diff_values);
                break;
            case BandwidthMethod::ChangePoint: {
                out += "\"span\": " + json_number(est.span) +
                       ", \"candidates\": [";
                for (std::size_t i = 0; i < est.candidates.size(); ++i) {
                    if (i) out += ",";
                    out += std::to_string(est.candidates[i]);
                }
                out += "], \"err\": " + json_number_array(est.err);
                break;
            }
            default:
                out += "\"n1\": " + std::to_string(est.n1) +
                       ", \"n2\": " + std::to_string(est.n2) +
                       ", \"n_splits\": " + std::to_string(est.n_splits) +
                       ", \"seed\": " + std::to_string(est.seed) +
                       ", \"rhat\": " + json_number_array(est.rhat);
        }
        out += "}\n";
        out += "}\n";
    } else {
        out += "# method," + std::string(method_name(method)) + "\n";
        out += "# n," + std::to_string(data.n()) + "\n";
        out += "# p," + std::to_string(data.p()) + "\n";
        out += "# status," + status + "\n";
        out += "# k_hat," + (est.no_crossing ? "" : std::to_string(est.k_hat)) +
               "\n";
        switch (method) {
            case BandwidthMethod::FixedThreshold:
                out += "# delta," + fmt17(est.delta) + "\n";
                out += "# theta," + fmt17(est.theta) + "\n";
                out += "k,diff\n";
                for (std::size_t i = 0; i < est.diff_values.size(); ++i) {
                    out += std::to_string(i) + "," + fmt17(est.diff_values[i]) +
                           "\n";
                }
                break;
            case BandwidthMethod::ChangePoint:
                out += "# span," + fmt17(est.span) + "\n";
                out += "candidate,err\n";
                for (std::size_t i = 0; i < est.candidates.size(); ++i) {
                    out += std::to_string(est.candidates[i]) + "," +
                           fmt17(est.err[i]) + "\n";
                }
                break;
            default:
                out += "# n1," + std::to_string(est.n1) + "\n";
                out += "# n2," + std::to_string(est.n2) + "\n";
                out += "# n_splits," + std::to_string(est.n_splits) + "\n";
                out += "# seed," + std::to_string(est.seed) + "\n";
                out += "k,rhat\n";
                for (std::size_t i = 0; i < est.rhat.size(); ++i) {
                    out += std::to_string(i) + "," + fmt17(est.rhat[i]) + "\n";
                }
        }
    }
    write_output(o.io.output, out);
}

// ---------------------------------------------------------------- profile

void run_profile_cmd(IoOptions& io) {
    apply_flat_config(io.config, io_bindings(io, true));
    check_format(io.format);
    const DataMatrix data = load_input(io);
    const LagProfile prof = lag_profile(data, io.threads);

    std::string out;
    if (io.format == "json") {
        out += "{\n";
        out += "  \"command\": \"profile\",\n";
        out += "  \"n\": " + std::to_string(prof.n) + ",\n";
        out += "  \"p\": " + std::to_string(prof.p) + ",\n";
        out += "  \"dhat\": " + json_number_array(prof.dhat) + "\n";
        out += "}\n";
    } else {
        out += "q,dhat\n";
        for (std::size_t q = 0; q < prof.dhat.size(); ++q) {
            out += std::to_string(q) + "," + fmt17(prof.dhat[q]) + "\n";
        }
    }
    write_output(io.output, out);
}

// --------------------------------------------------------------- simulate

struct SimulateOptions {
    IoOptions io;  // threads/format/output/config only
    std::string preset;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    int k = -2;      // -2 = unset
    int k_max = 0;   // 0 = unset
    double alpha = -1.0;
    double delta = -1.0;
    double theta = -1.0;
    double span = -1.0;
    int splits = 0;
    std::string method = "all";
    std::vector<double> gammas;
    std::string innovation;
    std::size_t n = 0;
    std::size_t p = 0;
    CLI::Option* preset_opt = nullptr;
    CLI::Option* reps_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* k_max_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* delta_opt = nullptr;
    CLI::Option* theta_opt = nullptr;
    CLI::Option* span_opt = nullptr;
    CLI::Option* splits_opt = nullptr;
    CLI::Option* method_opt = nullptr;
    CLI::Option* gammas_opt = nullptr;
    CLI::Option* innovation_opt = nullptr;
    CLI::Option* n_opt = nullptr;
    CLI::Option* p_opt = nullptr;
};

std::string gammas_joined(const std::vector<double>& g, char sep) {
    std::string out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i) out.push_back(sep);
        out += fmt17(g[i]);
    }
    return out;
}

std::string simulate_artifact(const ExperimentResult& res,
                              const std::string& format) {
    const ExperimentDesign& d = res.design;
    const bool calibration = d.kind == ExperimentKind::TestCalibration;
    const std::string kind = calibration ? "calibration" : "recovery";
    const std::string law = InnovationLaw{d.innovation}.name();

    std::string out;
    if (format == "json") {
        out += "{\n";
        out += "  \"command\": \"simulate\",\n";
        out += "  \"design\": {\n";
        out += "    \"name\": " + json_quote(d.name) + ",\n";
        out += "    \"kind\": " + json_quote(kind) + ",\n";
        out += "    \"gammas\": " + json_number_array(d.gammas) + ",\n";
        out += "    \"innovation\": " + json_quote(law) + ",\n";
        out += "    \"n\": " + std::to_string(d.n) + ",\n";
        out += "    \"p\": " + std::to_string(d.p) + ",\n";
        out += "    \"reps\": " + std::to_string(d.reps) + ",\n";
        if (calibration) {
            out += "    \"test_k\": " + std::to_string(d.resolved_test_k()) +
                   ",\n";
            out += "    \"alpha\": " + json_number(d.alpha) + ",\n";
        } else {
            out += "    \"true_k\": " + std::to_string(d.model_bandwidth()) +
                   ",\n";
            out += "    \"alpha\": " + json_number(d.alpha) + ",\n";
            out += "    \"delta\": " + json_number(d.delta) + ",\n";
            out += "    \"theta\": " + json_number(d.theta) + ",\n";
            out += "    \"span\": " + json_number(d.span) + ",\n";
            out += "    \"n_splits\": " + std::to_string(d.n_splits) + ",\n";
            out += "    \"scan_k_max\": " +
                   std::to_string(d.resolved_scan_k_max()) + ",\n";
            out += "    \"bl_k_max\": " +
                   std::to_string(d.resolved_bl_k_max()) + ",\n";
        }
        out += "    \"master_seed\": " + std::to_string(d.master_seed) + ",\n";
        out += "    \"rng\": " + json_quote(kRngName) + "\n";
        out += "  },\n";
        if (calibration) {
            const TestCalibrationSummary& s = res.test;
            out += "  \"reject_count\": " + std::to_string(s.reject_count) +
                   ",\n";
            out += "  \"reject_rate\": " + json_number(s.reject_rate) + ",\n";
            out += "  \"mc_se\": " + json_number(s.reject_se) + ",\n";
            out += "  \"mean_W\": " + json_number(s.mean_w) + ",\n";
            out += "  \"sd_W\": " + json_number(s.sd_w) + ",\n";
            out += "  \"mean_half_T\": " + json_number(s.mean_half_t) + ",\n";
            out += "  \"var_half_T\": " + json_number(s.var_half_t) + "\n";
        } else {
            out += "  \"methods\": [\n";
            for (std::size_t m = 0; m < res.recovery.size(); ++m) {
                const MethodRecoverySummary& s = res.recovery[m];
                out += "    {\"method\": " +
                       json_quote(method_name(s.method)) +
                       ", \"mean_bias\": " + json_number(s.mean_bias) +
                       ", \"sd_bias\": " + json_number(s.sd_bias) +
                       ", \"mc_se\": " + json_number(s.bias_se) +
                       ", \"exact_count\": " + std::to_string(s.exact_count) +
                       ", \"no_crossing_count\": " +
                       std::to_string(s.no_crossing_count) +
                       ", \"k_hat\": " + json_int_array(s.k_hat) + "}";
                out += m + 1 < res.recovery.size() ? ",\n" : "\n";
            }
            out += "  ]\n";
        }
        out += "}\n";
        return out;
    }

    if (calibration) {
        const TestCalibrationSummary& s = res.test;
        out +=
            "name,kind,n,p,innovation,gammas,reps,test_k,alpha,master_seed,"
            "reject_count,reject_rate,mc_se,mean_W,sd_W,mean_half_T,"
            "var_half_T\n";
        out += d.name + "," + kind + "," + std::to_string(d.n) + "," +
               std::to_string(d.p) + "," + law + "," +
               gammas_joined(d.gammas, ';') + "," + std::to_string(d.reps) +
               "," + std::to_string(d.resolved_test_k()) + "," +
               fmt17(d.alpha) + "," + std::to_string(d.master_seed) + "," +
               std::to_string(s.reject_count) + "," + fmt17(s.reject_rate) +
               "," + fmt17(s.reject_se) + "," + fmt17(s.mean_w) + "," +
               fmt17(s.sd_w) + "," + fmt17(s.mean_half_t) + "," +
               fmt17(s.var_half_t) + "\n";
        return out;
    }
    out +=
        "name,kind,n,p,innovation,gammas,reps,true_k,master_seed,method,"
        "mean_bias,sd_bias,mc_se,exact_count,no_crossing_count\n";
    for (const MethodRecoverySummary& s : res.recovery) {
        out += d.name + "," + kind + "," + std::to_string(d.n) + "," +
               std::to_string(d.p) + "," + law + "," +
               gammas_joined(d.gammas, ';') + "," + std::to_string(d.reps) +
               "," + std::to_string(d.model_bandwidth()) + "," +
               std::to_string(d.master_seed) + "," + method_name(s.method) +
               "," + fmt17(s.mean_bias) + "," + fmt17(s.sd_bias) + "," +
               fmt17(s.bias_se) + "," + std::to_string(s.exact_count) + "," +
               std::to_string(s.no_crossing_count) + "\n";
    }
    return out;
}

void run_simulate_cmd(SimulateOptions& o) {
    check_format(o.io.format);

    ExperimentDesign design;
    if (!o.io.config.empty()) {
        std::ifstream in(o.io.config);
        if (!in) {
            throw usage_error(o.io.config + ": cannot open config file");
        }
        design = parse_design_text(in, o.io.config);
    } else if (o.preset_opt->count() > 0) {
        design = preset_design(o.preset);
    }

    if (o.n_opt->count() > 0) design.n = o.n;
    if (o.p_opt->count() > 0) design.p = o.p;
    if (o.gammas_opt->count() > 0) design.gammas = o.gammas;
    if (o.innovation_opt->count() > 0) {
        if (o.innovation != "normal" && o.innovation != "gamma") {
            throw usage_error("innovation must be 'normal' or 'gamma', got '" +
                              o.innovation + "'");
        }
        design.innovation = o.innovation == "gamma"
                                ? Innovation::StandardizedGamma
                                : Innovation::StandardNormal;
    }
    if (o.reps_opt->count() > 0) design.reps = o.reps;
    if (o.seed_opt->count() > 0) design.master_seed = o.seed;
    if (o.alpha_opt->count() > 0) design.alpha = o.alpha;
    if (o.delta_opt->count() > 0) design.delta = o.delta;
    if (o.theta_opt->count() > 0) design.theta = o.theta;
    if (o.span_opt->count() > 0) design.span = o.span;
    if (o.splits_opt->count() > 0) design.n_splits = o.splits;
    if (o.io.threads_opt->count() > 0) design.threads = o.io.threads;

    const bool calibration = design.kind == ExperimentKind::TestCalibration;
    if (o.k_opt->count() > 0) {
        if (!calibration) {
            throw usage_error("--k picks the tested level; it applies to "
                              "calibration designs only");
        }
        design.test_k = o.k;
    }
    if (o.k_max_opt->count() > 0) {
        if (calibration) {
            throw usage_error("--k-max bounds the estimator scans; it applies "
                              "to recovery designs only");
        }
        design.scan_k_max = o.k_max;
    }
    if (o.method_opt->count() > 0 && o.method != "all") {
        if (calibration) {
            throw usage_error("--method selects estimators; it applies to "
                              "recovery designs only");
        }
        design.methods = {parse_method(o.method, "--method")};
    }

    const ExperimentResult res = run_experiment(design);
    write_output(o.io.output, simulate_artifact(res, o.io.format));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Tests whether a high-dimensional covariance matrix is banded and "
        "estimates its bandwidth"};
    app.require_subcommand(1);

    TestOptions test_o;
    CLI::App* test_cmd = app.add_subcommand(
        "test", "test 'the covariance is banded with bandwidth k'");
    add_io_options(test_cmd, test_o.io, true);
    test_o.k_opt =
        test_cmd->add_option("--k", test_o.k, "banding level under test");
    test_o.alpha_opt =
        test_cmd->add_option("--alpha", test_o.alpha, "nominal level");
    test_cmd->callback([&] { run_test_cmd(test_o); });

    ScanOptions scan_o;
    CLI::App* scan_cmd = app.add_subcommand(
        "scan", "run the test for every level k = 0..k_max");
    add_io_options(scan_cmd, scan_o.io, true);
    scan_o.k_max_opt = scan_cmd->add_option(
        "--k-max", scan_o.k_max, "largest level, 0 = min(p-2, n)");
    scan_o.alpha_opt =
        scan_cmd->add_option("--alpha", scan_o.alpha, "nominal level");
    scan_o.delta_opt = scan_cmd->add_option(
        "--delta", scan_o.delta, "scale d_nk by n^delta (0 = plain)");
    scan_cmd->callback([&] { run_scan_cmd(scan_o); });

    BandwidthOptions bw_o;
    CLI::App* bw_cmd =
        app.add_subcommand("bandwidth", "estimate the covariance bandwidth");
    add_io_options(bw_cmd, bw_o.io, true);
    bw_o.method_opt = bw_cmd->add_option(
        "--method", bw_o.method, "fixed, changepoint, bl-a or bl-b");
    bw_o.k_max_opt = bw_cmd->add_option("--k-max", bw_o.k_max,
                                        "search ceiling, 0 = method default");
    bw_o.alpha_opt = bw_cmd->add_option("--alpha", bw_o.alpha,
                                        "nominal level for the scan");
    bw_o.delta_opt = bw_cmd->add_option("--delta", bw_o.delta,
                                        "difference scale exponent (fixed)");
    bw_o.theta_opt =
        bw_cmd->add_option("--theta", bw_o.theta, "threshold (fixed)");
    bw_o.span_opt =
        bw_cmd->add_option("--span", bw_o.span, "smoother span (changepoint)");
    bw_o.splits_opt =
        bw_cmd->add_option("--splits", bw_o.splits, "resampling splits (bl)");
    bw_o.seed_opt =
        bw_cmd->add_option("--seed", bw_o.seed, "resampling seed (bl)");
    bw_cmd->callback([&] { run_bandwidth_cmd(bw_o); });

    SimulateOptions sim_o;
    CLI::App* sim_cmd = app.add_subcommand(
        "simulate", "run a seeded replication study of the model designs");
    add_io_options(sim_cmd, sim_o.io, false);
    sim_o.preset_opt = sim_cmd->add_option(
        "--preset", sim_o.preset,
        "named design (see README); excludes --config");
    sim_o.reps_opt =
        sim_cmd->add_option("--reps", sim_o.reps, "replication count");
    sim_o.seed_opt = sim_cmd->add_option("--seed", sim_o.seed, "master seed");
    sim_o.n_opt = sim_cmd->add_option("--n", sim_o.n, "observations per draw");
    sim_o.p_opt = sim_cmd->add_option("--p", sim_o.p, "variables per draw");
    sim_o.gammas_opt =
        sim_cmd->add_option("--gammas", sim_o.gammas, "model coefficients")
            ->delimiter(',');
    sim_o.innovation_opt = sim_cmd->add_option(
        "--innovation", sim_o.innovation, "normal or gamma");
    sim_o.k_opt = sim_cmd->add_option("--k", sim_o.k,
                                      "tested level (calibration designs)");
    sim_o.k_max_opt = sim_cmd->add_option(
        "--k-max", sim_o.k_max, "estimator scan ceiling (recovery designs)");
    sim_o.alpha_opt =
        sim_cmd->add_option("--alpha", sim_o.alpha, "nominal level");
    sim_o.delta_opt = sim_cmd->add_option("--delta", sim_o.delta,
                                          "difference scale exponent");
    sim_o.theta_opt = sim_cmd->add_option("--theta", sim_o.theta, "threshold");
    sim_o.span_opt = sim_cmd->add_option("--span", sim_o.span, "smoother span");
    sim_o.splits_opt =
        sim_cmd->add_option("--splits", sim_o.splits, "resampling splits");
    sim_o.method_opt = sim_cmd->add_option(
        "--method", sim_o.method, "restrict recovery to one estimator");
    sim_o.preset_opt->excludes(
        sim_cmd->get_option("--config"));
    sim_cmd->callback([&] { run_simulate_cmd(sim_o); });

    IoOptions prof_o;
    CLI::App* prof_cmd = app.add_subcommand(
        "profile", "emit the per-lag squared-covariance profile");
    add_io_options(prof_cmd, prof_o, true);
    prof_cmd->callback([&] { run_profile_cmd(prof_o); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        std::cerr << "bandcov: " << e.what() << "\n";
        return 2;
    } catch (const usage_error& e) {
        std::cerr << "bandcov: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "bandcov: " << e.what() << "\n";
        return 3;
    } catch (const compute_error& e) {
        std::cerr << "bandcov: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "bandcov: internal error: " << e.what() << "\n";
        return 1;
    }
}
