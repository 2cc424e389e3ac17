// Command-line front end: simulate, estimate, sweep, crlb, selftest.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "xcfo/burst_io.hpp"
#include "xcfo/config.hpp"
#include "xcfo/harness.hpp"
#include "xcfo/joint.hpp"

namespace {

using namespace xcfo;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitIo = 4;
constexpr int kExitInterrupted = 130;

AppConfig load_or_default(const std::string& path) {
    return path.empty() ? parse_config_text("") : load_config(path);
}

void write_text(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

int cmd_simulate(const std::string& config_path, const std::string& out_path, int trial,
                 std::optional<double> sinr) {
    AppConfig app = load_or_default(config_path);
    ScenarioConfig cfg = app.scenario;
    if (sinr) cfg.target_sinr_db = *sinr;
    Rng truth_rng = substream(cfg.seed, static_cast<std::uint64_t>(trial), 0);
    const GroundTruth truth = draw_ground_truth(cfg, truth_rng);
    Rng noise_rng = substream(cfg.seed, static_cast<std::uint64_t>(trial), 1);
    const ReceivedBurst burst = synthesize_burst(cfg, truth, noise_rng);
    write_burst(burst, out_path);
    std::cerr << "wrote " << burst.samples.size() << " samples to " << out_path << " (+ " << sidecar_path(out_path)
              << "), SINR " << calibrate_sinr(truth, cfg) << " dB\n";
    return kExitOk;
}

nlohmann::json result_json(const EstimationResult& est) {
    nlohmann::json alphas = nlohmann::json::array();
    for (Eigen::Index k = 0; k < est.alphas_hat.rows(); ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index p = 0; p < est.alphas_hat.cols(); ++p) {
            row.push_back({est.alphas_hat(k, p).real(), est.alphas_hat(k, p).imag()});
        }
        alphas.push_back(row);
    }
    return {{"omegas_hat", est.omegas_hat},
            {"alphas_hat", alphas},
            {"mus_hat", est.mus_hat},
            {"iteration_trace", est.iteration_trace},
            {"iterations", est.iterations},
            {"converged", est.converged},
            {"mu_clamped", est.mu_clamped},
            {"regularized_blocks", est.regularized_blocks}};
}

int cmd_estimate(const std::string& burst_path, const std::string& config_path, const std::string& out_path) {
    const ReceivedBurst burst = read_burst(burst_path);
    JointOptions opts;
    if (!config_path.empty()) opts = load_config(config_path).sweep.joint;
    const KnownParams known = known_from_burst(burst);
    const EstimationResult est = joint_estimate(burst.samples, known, opts);
    nlohmann::json j = result_json(est);
    if (burst.truth) {
        nlohmann::json err = nlohmann::json::array();
        for (std::size_t k = 0; k < est.omegas_hat.size(); ++k) {
            err.push_back(est.omegas_hat[k] - burst.truth->omegas[k]);
        }
        j["omega_errors"] = err;
    }
    write_text(j.dump(2) + "\n", out_path);
    return kExitOk;
}

extern "C" void on_sigint(int) {
    sweep_interrupt_flag().store(true);
}

int cmd_sweep(const std::string& config_path, const std::string& out_path, std::optional<int> workers) {
    AppConfig app = load_or_default(config_path);
    if (workers) app.sweep.workers = *workers;
    std::signal(SIGINT, on_sigint);
    const auto rows = run_sweep(app.sweep);
    if (out_path.empty() || out_path == "-") {
        std::cout << format_csv(rows);
    } else {
        emit_csv(rows, out_path);
    }
    if (sweep_interrupt_flag().load()) {
        std::cerr << "interrupted: wrote " << rows.size() << " rows of completed SINR points\n";
        return kExitInterrupted;
    }
    return kExitOk;
}

int cmd_crlb(const std::string& config_path, const std::string& out_path) {
    const AppConfig app = load_or_default(config_path);
    write_text(format_crlb_csv(scenario_crlb(app.scenario, app.scenario.seed)), out_path);
    return kExitOk;
}

// Quick invariant suite for a deployed binary; the full checks live in the test targets.
int cmd_selftest() {
    int failures = 0;
    auto check = [&](const std::string& name, const std::function<bool()>& fn) {
        bool ok = false;
        std::string detail;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            detail = std::string(" (") + e.what() + ")";
        }
        std::cout << (ok ? "PASS " : "FAIL ") << name << detail << '\n';
        if (!ok) ++failures;
    };

    check("zc sequences are unit modulus with ideal autocorrelation", [] {
        const auto c = generate_zc(25, 127);
        for (const auto& s : c.samples) {
            if (std::abs(std::abs(s) - 1.0) > 1e-12) return false;
        }
        cd cyc{0.0, 0.0};
        for (int m = 0; m < 127; ++m) cyc += c.samples[static_cast<std::size_t>(m)] * std::conj(c.samples[static_cast<std::size_t>((m + 3) % 127)]);
        return std::abs(cyc) < 1e-9 && std::abs(std::abs(autocorrelation(c, 0.0)) - 1.0) < 1e-12;
    });

    check("single-BS noiseless joint recovery", [] {
        ScenarioConfig cfg = default_scenario();
        cfg.num_bs = 1;
        cfg.num_frames = 4;
        assign_zc_preambles(cfg, default_root_pairs(1), {1.0});
        cfg.noise_var = 0.0;
        cfg.delays = {5};
        GroundTruth truth;
        truth.omegas = {0.5 * kPi / cfg.tau_c()};
        truth.mus = {1.0};
        truth.delays = {5};
        truth.alphas = Eigen::MatrixXcd::Constant(1, 4, cd{0.6, -0.8});
        const cvec y = synthesize_clean(cfg, truth);
        KnownParams known;
        known.delays = truth.delays;
        known.preambles = cfg.preambles;
        known.num_frames = cfg.num_frames;
        known.frame_len = cfg.frame_len;
        const auto est = joint_estimate(y, known);
        return std::abs(est.omegas_hat[0] - truth.omegas[0]) < 1e-10;
    });

    check("closed-form CRLB matches numeric Fisher bound", [] {
        CorrelationModel m;
        m.seq = generate_zc(1, 127);
        m.tau_c = 254;
        m.alphas = {cd{1.0, 0.0}, cd{0.0, 0.5}, cd{-0.3, 0.2}};
        m.noise_vars.assign(6, 0.01);
        const double omega = 0.05 / 254.0;
        const auto [g0, g1] = aggregate_sinr(m.alphas, m.mu, m.noise_vars);
        const double closed = crlb_cfo(g0, g1, std::abs(autocorrelation(m.seq, omega)), m.tau_c).bound;
        return std::abs(fisher_numeric(m, omega) - closed) / closed < 1e-2;
    });

    check("trials are reproducible and CSV round-trips", [] {
        SweepSpec spec;
        spec.trials = 3;
        spec.sinr_points_db = {-10.0};
        spec.methods = {"cross_preamble", "separate"};
        const auto a = run_sweep(spec);
        const auto b = run_sweep(spec);
        return format_csv(a) == format_csv(b) && parse_csv(format_csv(a)) == a;
    });

    check("unknown config keys are rejected", [] {
        try {
            parse_config_text("[scenario]\nbogus = 1\n");
        } catch (const ConfigError&) {
            return true;
        }
        return false;
    });

    std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures == 0 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint channel and CFO estimation for beam-swept multi-transmitter bursts"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string burst_path;
    int trial = 0;
    std::optional<double> sinr;
    std::optional<int> workers;

    auto* sim = app.add_subcommand("simulate", "Synthesize one burst and write it as cf64le + JSON sidecar");
    sim->add_option("-c,--config", config_path, "INI config file");
    sim->add_option("-o,--out", out_path, "Output sample file")->required();
    sim->add_option("--trial", trial, "Trial index selecting the RNG substream");
    sim->add_option("--sinr", sinr, "Override target_sinr_db");

    auto* est = app.add_subcommand("estimate", "Run the joint estimator on a burst file, print JSON");
    est->add_option("-b,--burst", burst_path, "Burst sample file (sidecar at <file>.json)")->required();
    est->add_option("-c,--config", config_path, "INI config for epsilon / max_iter");
    est->add_option("-o,--out", out_path, "Output JSON file (default stdout)");

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep to CSV");
    sweep->add_option("-c,--config", config_path, "INI config file");
    sweep->add_option("-o,--out", out_path, "Output CSV (default stdout)");
    sweep->add_option("-j,--workers", workers, "Worker threads (overrides [sweep] workers)");

    auto* crlb = app.add_subcommand("crlb", "Per-BS CRLB of the configured scenario to CSV");
    crlb->add_option("-c,--config", config_path, "INI config file");
    crlb->add_option("-o,--out", out_path, "Output CSV (default stdout)");

    auto* self = app.add_subcommand("selftest", "Run the built-in invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(config_path, out_path, trial, sinr);
        if (*est) return cmd_estimate(burst_path, config_path, out_path);
        if (*sweep) return cmd_sweep(config_path, out_path, workers);
        if (*crlb) return cmd_crlb(config_path, out_path);
        if (*self) return cmd_selftest();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParameterError& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DegenerateError& e) {
        std::cerr << "numerical degeneracy: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitOk;
}
