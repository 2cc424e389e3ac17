#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xcfo/baselines.hpp"
#include "xcfo/bounds.hpp"
#include "xcfo/joint.hpp"
#include "xcfo/synthesis.hpp"

namespace xcfo {

/// Method identifiers, in the ascending name order used for CSV rows.
inline const std::vector<std::string>& all_methods() {
    static const std::vector<std::string> names{"autocorr_split", "cp_blind",  "cross_preamble",
                                                "joint_algorithm", "separate", "weighted_avg"};
    return names;
}

struct SweepSpec {
    std::vector<double> sinr_points_db{-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0};
    int trials = 200;
    std::vector<std::string> methods = all_methods();
    ScenarioConfig base_config = default_scenario();
    std::uint64_t seed = 1;

    CpWrapConfig cp;
    SplitPooling autocorr_pooling = SplitPooling::ProductSum;
    JointOptions joint;
    int workers = 1;
    bool timing = false;  // wall_time_s stays 0 unless set, so CSVs are reproducible byte for byte

    void validate() const;
};

/// Outcome of one method on one trial, for the target BS 0.
struct MethodOutcome {
    std::string method;
    bool ok = false;
    std::string error;      // degeneracy message when !ok
    double omega_err = 0.0; // omega_hat_0 - omega_0
    double nmse = 0.0;      // ||alpha_hat_0 - alpha_0||^2 / ||alpha_0||^2
    double gamma0 = 0.0;    // aggregate SINRs behind this method's bound
    double gamma1 = 0.0;
    double r_mag = 0.0;
    double seconds = 0.0;
};

struct TrialResult {
    int trial_index = 0;
    std::vector<MethodOutcome> outcomes;  // same order as the requested methods
};

/// Everything a trial needs besides its index. `config.target_sinr_db` is the point.
struct TrialSetup {
    ScenarioConfig config;
    std::uint64_t seed = 1;
    CpWrapConfig cp;
    SplitPooling autocorr_pooling = SplitPooling::ProductSum;
    JointOptions joint;
    double sigma_c2 = 1.0;
    bool timing = false;
};

TrialSetup make_trial_setup(const ScenarioConfig& config, std::uint64_t seed, const CpWrapConfig& cp = {},
                            const JointOptions& joint = {});

/// Ground truth of a trial: stream 0 of (seed, trial). The geometry does not
/// depend on the SINR point; only BS 0's gains are rescaled.
GroundTruth trial_truth(const TrialSetup& setup, int trial_index);

/// Synthesizes one burst from (seed, trial_index) and runs each method.
/// Degenerate results are recorded per method and never abort the trial.
TrialResult run_trial(const TrialSetup& setup, int trial_index, const std::vector<std::string>& methods);

struct MetricsRow {
    double sinr_db = 0.0;
    std::string method;
    double cfo_mae = 0.0;       // rad/sample
    double cfo_mse = 0.0;
    double chan_nmse_db = 0.0;
    double crlb = 0.0;
    int trials_ok = 0;
    double wall_time_s = 0.0;
    // Supplementary columns.
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double r_mag = 0.0;
    int trials = 0;
    bool suspect = false;  // more than 10% of trials degenerate
    std::optional<double> cfo_mae_hz;

    bool operator==(const MetricsRow&) const = default;
};

/// Folds per-trial results (in trial-index order) into one row per method.
std::vector<MetricsRow> aggregate_point(double sinr_db, const std::vector<std::string>& methods,
                                        const std::vector<TrialResult>& trials, int tau_c,
                                        std::optional<double> sample_rate);

/// Set from a signal handler to stop after the SINR point in progress.
std::atomic<bool>& sweep_interrupt_flag();

/// Runs every SINR point; rows sorted by (sinr ascending, method ascending).
/// workers == 1 runs the plain serial loop; otherwise trials are spread over
/// an OpenMP team and folded in index order.
std::vector<MetricsRow> run_sweep(const SweepSpec& spec);

std::string csv_header(bool with_hz);
std::string format_csv(std::vector<MetricsRow> rows);
void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> parse_csv(const std::string& text);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Per-BS CRLB of a scenario from one draw of the ground truth (trial 0),
/// with interference-plus-noise variances.
std::vector<CrlbReport> scenario_crlb(const ScenarioConfig& cfg, std::uint64_t seed);
std::string format_crlb_csv(const std::vector<CrlbReport>& reports);

}  // namespace xcfo
