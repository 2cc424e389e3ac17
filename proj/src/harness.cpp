#include "xcfo/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <omp.h>

#include "xcfo/estimators.hpp"

namespace xcfo {

void SweepSpec::validate() const {
    if (trials < 1) {
        throw ConfigError("sweep: trials must be >= 1");
    }
    if (sinr_points_db.empty()) {
        throw ConfigError("sweep: sinr_points_db must not be empty");
    }
    if (workers < 1) {
        throw ConfigError("sweep: workers must be >= 1");
    }
    std::set<std::string> seen;
    for (const auto& m : methods) {
        if (std::find(all_methods().begin(), all_methods().end(), m) == all_methods().end()) {
            throw ConfigError("sweep: unknown method '" + m + "'");
        }
        if (!seen.insert(m).second) {
            throw ConfigError("sweep: method '" + m + "' listed twice");
        }
    }
    if (!(joint.epsilon > 0.0) || joint.max_iter < 1) {
        throw ConfigError("sweep: epsilon must be positive and max_iter >= 1");
    }
    cp.validate();
    base_config.validate();
}

TrialSetup make_trial_setup(const ScenarioConfig& config, std::uint64_t seed, const CpWrapConfig& cp,
                            const JointOptions& joint) {
    TrialSetup s;
    s.config = config;
    s.seed = seed;
    s.cp = cp;
    s.joint = joint;
    s.sigma_c2 = scenario_sigma_c2(config);
    return s;
}

GroundTruth trial_truth(const TrialSetup& setup, int trial_index) {
    Rng rng = substream(setup.seed, static_cast<std::uint64_t>(trial_index), 0);
    return draw_ground_truth(setup.config, rng);
}

namespace {

// Interference-plus-noise variances of BS k's 2P correlations, interference from the other rows of `alphas`.
std::vector<double> correlation_vars(const Eigen::MatrixXcd& alphas, std::span<const double> mus, int k, double sigma_c2,
                                double sigma_n2, int n) {
    std::vector<double> out;
    std::vector<cd> others;
    for (Eigen::Index p = 0; p < alphas.cols(); ++p) {
        others.clear();
        for (Eigen::Index q = 0; q < alphas.rows(); ++q) {
            if (q != k) others.push_back(alphas(q, p));
        }
        for (int i = 0; i < 2; ++i) {
            out.push_back(std::max(noise_variance(others, mus[static_cast<std::size_t>(k)], i, sigma_c2, sigma_n2, n),
                                   1e-300));
        }
    }
    return out;
}

std::vector<cd> row_of(const Eigen::MatrixXcd& m, Eigen::Index k) {
    std::vector<cd> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index p = 0; p < m.cols(); ++p) out[static_cast<std::size_t>(p)] = m(k, p);
    return out;
}

double nmse_of(const Eigen::MatrixXcd& est, const Eigen::MatrixXcd& truth) {
    return (est.row(0) - truth.row(0)).squaredNorm() / truth.row(0).squaredNorm();
}

// Lazily computed pieces shared between the one-shot methods of a trial.
struct TrialState {
    const TrialSetup& setup;
    const GroundTruth& truth;
    const ReceivedBurst& burst;
    KnownParams known;
    std::vector<double> nominal_mus;
    std::optional<CorrelationGrid> grid;
    std::optional<Eigen::MatrixXcd> alpha0;

    const CorrelationGrid& get_grid() {
        if (!grid) {
            grid = compute_grid(burst.samples, known.preambles, known.delays, known.num_frames, known.frame_len);
        }
        return *grid;
    }
    const Eigen::MatrixXcd& get_alpha0() {
        if (!alpha0) alpha0 = zero_cfo_channel(burst.samples, known);
        return *alpha0;
    }
};

std::vector<double> one_shot_omegas(const std::string& method, TrialState& st) {
    const auto& cfg = st.setup.config;
    const int num_bs = cfg.num_bs;
    std::vector<double> omegas(static_cast<std::size_t>(num_bs));
    if (method == "cross_preamble") {
        CorrelationGrid grid = st.get_grid();
        const auto& a0 = st.get_alpha0();
        assign_noise_vars(grid, a0, st.nominal_mus, st.known.sigma_c2, cfg.noise_var, cfg.seq_len);
        for (int k = 0; k < num_bs; ++k) {
            omegas[static_cast<std::size_t>(k)] =
                cross_preamble_cfo(grid, k, row_of(a0, k), st.nominal_mus[static_cast<std::size_t>(k)]);
        }
    } else if (method == "separate") {
        const auto& grid = st.get_grid();
        for (int k = 0; k < num_bs; ++k) {
            omegas[static_cast<std::size_t>(k)] = separate_cfo(grid, k, st.nominal_mus[static_cast<std::size_t>(k)]);
        }
    } else if (method == "weighted_avg") {
        const auto& grid = st.get_grid();
        const auto& a0 = st.get_alpha0();
        std::vector<double> per_frame(static_cast<std::size_t>(cfg.num_frames));
        std::vector<double> weights(static_cast<std::size_t>(cfg.num_frames));
        for (int k = 0; k < num_bs; ++k) {
            for (int p = 0; p < cfg.num_frames; ++p) {
                per_frame[static_cast<std::size_t>(p)] =
                    separate_cfo_frame(grid, k, p, st.nominal_mus[static_cast<std::size_t>(k)]);
                weights[static_cast<std::size_t>(p)] = std::norm(a0(k, p));
            }
            omegas[static_cast<std::size_t>(k)] = weighted_average_cfo(per_frame, weights);
        }
    } else if (method == "autocorr_split") {
        for (int k = 0; k < num_bs; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            omegas[ku] = autocorr_split_burst(st.burst.samples, cfg.preambles[ku], st.known.delays[ku], cfg.num_frames,
                                              cfg.frame_len, st.setup.autocorr_pooling);
        }
    }
    return omegas;
}

}  // namespace

TrialResult run_trial(const TrialSetup& setup, int trial_index, const std::vector<std::string>& methods) {
    using clock = std::chrono::steady_clock;
    const ScenarioConfig& cfg = setup.config;
    const GroundTruth truth = trial_truth(setup, trial_index);
    Rng noise_rng = substream(setup.seed, static_cast<std::uint64_t>(trial_index), 1);
    const ReceivedBurst burst = synthesize_burst(cfg, truth, noise_rng);

    TrialState st{setup, truth, burst, {}, {}, {}, {}};
    st.known.delays = truth.delays;
    st.known.preambles = cfg.preambles;
    st.known.num_frames = cfg.num_frames;
    st.known.frame_len = cfg.frame_len;
    st.known.sigma_c2 = setup.sigma_c2;
    st.known.noise_var = cfg.noise_var;
    for (const auto& pre : cfg.preambles) st.nominal_mus.push_back(pre.mu);

    // Bounds: one-shot methods face the full interference model; the joint
    // algorithm is compared against the post-cancellation (noise-only) bound.
    const double r_mag = std::abs(autocorrelation(cfg.preambles[0].seq0, truth.omegas[0]));
    const auto full_vars = correlation_vars(truth.alphas, truth.mus, 0, setup.sigma_c2, cfg.noise_var, cfg.seq_len);
    const auto [g0_full, g1_full] = aggregate_sinr(row_of(truth.alphas, 0), truth.mus[0], full_vars);
    const std::vector<double> noise_vars(full_vars.size(),
                                         std::max(cfg.noise_var / static_cast<double>(cfg.seq_len), 1e-300));
    const auto [g0_noise, g1_noise] = aggregate_sinr(row_of(truth.alphas, 0), truth.mus[0], noise_vars);

    TrialResult result;
    result.trial_index = trial_index;
    for (const auto& method : methods) {
        MethodOutcome out;
        out.method = method;
        const bool is_joint = method == "joint_algorithm";
        // After pre-compensation the joint algorithm correlates at a residual CFO near zero, where |r| = 1.
        out.r_mag = is_joint ? 1.0 : r_mag;
        out.gamma0 = is_joint ? g0_noise : g0_full;
        out.gamma1 = is_joint ? g1_noise : g1_full;
        const auto t0 = clock::now();
        try {
            if (is_joint) {
                const EstimationResult est = joint_estimate(burst.samples, st.known, setup.joint);
                out.omega_err = est.omegas_hat[0] - truth.omegas[0];
                out.nmse = nmse_of(est.alphas_hat, truth.alphas);
            } else {
                std::vector<double> omegas;
                if (method == "cp_blind") {
                    Rng cp_rng = substream(setup.seed, static_cast<std::uint64_t>(trial_index), 2);
                    const ReceivedBurst cp_burst = synthesize_cp_burst(cfg, truth, setup.cp, cp_rng);
                    for (int k = 0; k < cfg.num_bs; ++k) {
                        omegas.push_back(cp_blind_cfo(cp_burst.samples, cfg, setup.cp, truth.delays[static_cast<std::size_t>(k)]));
                    }
                } else {
                    omegas = one_shot_omegas(method, st);
                }
                out.omega_err = omegas[0] - truth.omegas[0];
                const DesignMatrix design = build_design_matrix(st.known.delays, omegas, st.nominal_mus,
                                                                cfg.preambles, cfg.frame_len, cfg.num_frames);
                out.nmse = nmse_of(estimate_channel(burst.samples, design).alphas, truth.alphas);
            }
            out.ok = std::isfinite(out.omega_err) && std::isfinite(out.nmse);
            if (!out.ok) out.error = "non-finite estimate";
        } catch (const DegenerateError& e) {
            out.ok = false;
            out.error = e.what();
        }
        if (setup.timing) {
            out.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        }
        result.outcomes.push_back(std::move(out));
    }
    return result;
}

std::vector<MetricsRow> aggregate_point(double sinr_db, const std::vector<std::string>& methods,
                                        const std::vector<TrialResult>& trials, int tau_c,
                                        std::optional<double> sample_rate) {
    std::vector<MetricsRow> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < methods.size(); ++j) {
        MetricsRow row;
        row.sinr_db = sinr_db;
        row.method = methods[j];
        row.trials = static_cast<int>(trials.size());
        double abs_sum = 0.0, sq_sum = 0.0, nmse_sum = 0.0;
        double g0 = 0.0, g1 = 0.0, r = 0.0, secs = 0.0;
        for (const auto& t : trials) {
            const auto& o = t.outcomes[j];
            g0 += o.gamma0;
            g1 += o.gamma1;
            r += o.r_mag;
            secs += o.seconds;
            if (!o.ok) continue;
            ++row.trials_ok;
            abs_sum += std::abs(o.omega_err);
            sq_sum += o.omega_err * o.omega_err;
            nmse_sum += o.nmse;
        }
        const double n_all = static_cast<double>(trials.size());
        row.gamma0 = trials.empty() ? nan : g0 / n_all;
        row.gamma1 = trials.empty() ? nan : g1 / n_all;
        row.r_mag = trials.empty() ? nan : r / n_all;
        row.wall_time_s = secs;
        if (row.trials_ok > 0) {
            const double n_ok = static_cast<double>(row.trials_ok);
            row.cfo_mae = abs_sum / n_ok;
            row.cfo_mse = sq_sum / n_ok;
            row.chan_nmse_db = 10.0 * std::log10(nmse_sum / n_ok);
        } else {
            row.cfo_mae = row.cfo_mse = row.chan_nmse_db = nan;
        }
        try {
            row.crlb = crlb_cfo(row.gamma0, row.gamma1, row.r_mag, tau_c).bound;
        } catch (const ParameterError&) {
            row.crlb = nan;
        }
        row.suspect = static_cast<double>(row.trials - row.trials_ok) > 0.1 * n_all;
        if (sample_rate) {
            row.cfo_mae_hz = row.cfo_mae * *sample_rate / (2.0 * kPi);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::atomic<bool>& sweep_interrupt_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

std::vector<MetricsRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<std::string> methods = spec.methods;
    std::sort(methods.begin(), methods.end());
    std::vector<double> points = spec.sinr_points_db;
    std::sort(points.begin(), points.end());

    TrialSetup setup = make_trial_setup(spec.base_config, spec.seed, spec.cp, spec.joint);
    setup.timing = spec.timing;
    setup.autocorr_pooling = spec.autocorr_pooling;
    std::vector<MetricsRow> rows;
    for (double sinr : points) {
        setup.config.target_sinr_db = sinr;
        std::vector<TrialResult> results(static_cast<std::size_t>(spec.trials));
        if (spec.workers == 1) {
            for (int t = 0; t < spec.trials; ++t) {
                results[static_cast<std::size_t>(t)] = run_trial(setup, t, methods);
            }
        } else {
            // Each slot is written by exactly one iteration; exceptions are
            // parked and rethrown in trial order after the team joins.
            std::vector<std::exception_ptr> errors(static_cast<std::size_t>(spec.trials));
#pragma omp parallel for num_threads(spec.workers) schedule(dynamic)
            for (int t = 0; t < spec.trials; ++t) {
                try {
                    results[static_cast<std::size_t>(t)] = run_trial(setup, t, methods);
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            }
            for (const auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
        }
        auto point_rows = aggregate_point(sinr, methods, results, spec.base_config.tau_c(), spec.base_config.sample_rate);
        rows.insert(rows.end(), point_rows.begin(), point_rows.end());
        if (sweep_interrupt_flag().load()) {
            break;
        }
    }
    return rows;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string csv_header(bool with_hz) {
    std::string h = "sinr_db,method,cfo_mae,cfo_mse,chan_nmse_db,crlb,trials_ok,wall_time_s,gamma0,gamma1,r_mag,trials,suspect";
    if (with_hz) h += ",cfo_mae_hz";
    return h;
}

std::string format_csv(std::vector<MetricsRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
        if (a.sinr_db != b.sinr_db) return a.sinr_db < b.sinr_db;
        return a.method < b.method;
    });
    const bool with_hz = std::any_of(rows.begin(), rows.end(), [](const MetricsRow& r) { return r.cfo_mae_hz.has_value(); });
    std::ostringstream os;
    os << csv_header(with_hz) << '\n';
    for (const auto& r : rows) {
        os << format_double(r.sinr_db) << ',' << r.method << ',' << format_double(r.cfo_mae) << ','
           << format_double(r.cfo_mse) << ',' << format_double(r.chan_nmse_db) << ',' << format_double(r.crlb) << ','
           << r.trials_ok << ',' << format_double(r.wall_time_s) << ',' << format_double(r.gamma0) << ','
           << format_double(r.gamma1) << ',' << format_double(r.r_mag) << ',' << r.trials << ','
           << (r.suspect ? 1 : 0);
        if (with_hz) os << ',' << (r.cfo_mae_hz ? format_double(*r.cfo_mae_hz) : std::string("nan"));
        os << '\n';
    }
    return os.str();
}

void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << format_csv(rows);
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

namespace {

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw IoError("csv: bad number '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw IoError("csv: bad integer '" + s + "'");
    }
    return v;
}

}  // namespace

std::vector<MetricsRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("csv: missing header");
    }
    bool with_hz = false;
    if (line == csv_header(true)) {
        with_hz = true;
    } else if (line != csv_header(false)) {
        throw IoError("csv: unexpected header '" + line + "'");
    }
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != (with_hz ? 14U : 13U)) {
            throw IoError("csv: wrong field count in '" + line + "'");
        }
        MetricsRow r;
        r.sinr_db = parse_double(f[0]);
        r.method = f[1];
        r.cfo_mae = parse_double(f[2]);
        r.cfo_mse = parse_double(f[3]);
        r.chan_nmse_db = parse_double(f[4]);
        r.crlb = parse_double(f[5]);
        r.trials_ok = parse_int(f[6]);
        r.wall_time_s = parse_double(f[7]);
        r.gamma0 = parse_double(f[8]);
        r.gamma1 = parse_double(f[9]);
        r.r_mag = parse_double(f[10]);
        r.trials = parse_int(f[11]);
        r.suspect = parse_int(f[12]) != 0;
        if (with_hz) r.cfo_mae_hz = parse_double(f[13]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<CrlbReport> scenario_crlb(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const TrialSetup setup = make_trial_setup(cfg, seed);
    const GroundTruth truth = trial_truth(setup, 0);
    std::vector<CrlbReport> out;
    for (int k = 0; k < cfg.num_bs; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const auto vars = correlation_vars(truth.alphas, truth.mus, k, setup.sigma_c2, cfg.noise_var, cfg.seq_len);
        const auto [g0, g1] = aggregate_sinr(row_of(truth.alphas, k), truth.mus[ku], vars);
        const double r = std::abs(autocorrelation(cfg.preambles[ku].seq0, truth.omegas[ku]));
        out.push_back(crlb_cfo(g0, g1, r, cfg.tau_c()));
    }
    return out;
}

std::string format_crlb_csv(const std::vector<CrlbReport>& reports) {
    std::ostringstream os;
    os << "k,gamma0,gamma1,r_mag,bound\n";
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        os << k << ',' << format_double(r.gamma0) << ',' << format_double(r.gamma1) << ',' << format_double(r.r_mag)
           << ',' << format_double(r.bound) << '\n';
    }
    return os.str();
}

}  // namespace xcfo
