#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "xcfo/common.hpp"
#include "xcfo/sequences.hpp"

namespace xcfo {

using Rng = std::mt19937_64;

/// Two-sequence preamble: seq0, tau0 zeros, then mu * seq1.
struct PreambleSpec {
    TrainingSequence seq0;
    TrainingSequence seq1;
    double mu = 1.0;
    int tau0 = 0;

    int seq_len() const { return static_cast<int>(seq0.size()); }
    int length() const { return 2 * seq_len() + tau0; }
    int tau_c() const { return seq_len() + tau0; }
    void validate() const;
};

enum class BeamProfile { FlatRayleigh, DominantBeam };

struct ScenarioConfig {
    int num_bs = 12;       // K
    int num_frames = 12;   // P
    int seq_len = 127;     // N
    int frame_len = 1024;  // N_f
    int tau0 = 127;
    std::vector<PreambleSpec> preambles;  // one per BS

    double cfo_min = 0.0;  // rad/sample
    double cfo_max = 0.0;

    // Fixed per-BS delays; when empty, draw_ground_truth picks each delay
    // uniformly in [0, delay_max].
    std::vector<int> delays;
    int delay_max = 16;

    double noise_var = 0.001;
    double target_sinr_db = -10.0;
    BeamProfile beam_profile = BeamProfile::DominantBeam;
    double beam_rolloff = 2.0;         // main-lobe half width in frames
    double beam_sidelobe_db = -20.0;   // power floor outside the main lobe
    std::uint64_t seed = 1;

    int extra_samples = 0;             // noise-only tail appended after the last frame
    std::optional<double> sample_rate; // Hz, reporting only

    int tau_c() const { return seq_len + tau0; }
    int preamble_len() const { return 2 * seq_len + tau0; }
    int burst_len() const { return num_frames * frame_len + extra_samples; }
    int max_delay() const;

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

/// Defaults mirroring the Monte-Carlo setup: K = P = 12, N = 127, tau0 = 127,
/// N_f = 1024, mu = 1, ZC roots (2k+1, 2k+2), CFO range +-0.8 pi / tau_c.
ScenarioConfig default_scenario();

/// Rebuilds `preambles` from ZC root pairs and per-BS mu values.
void assign_zc_preambles(ScenarioConfig& cfg, const std::vector<std::pair<int, int>>& root_pairs,
                         const std::vector<double>& mus);

/// Default distinct ordered root pairs (2k+1, 2k+2), k = 0..K-1.
std::vector<std::pair<int, int>> default_root_pairs(int num_bs);

struct GroundTruth {
    std::vector<double> omegas;  // rad/sample
    Eigen::MatrixXcd alphas;     // K x P
    std::vector<double> mus;
    std::vector<int> delays;
};

struct ReceivedBurst {
    cvec samples;
    ScenarioConfig config;
    std::optional<GroundTruth> truth;
};

/// Independent generator for (seed, trial, stream); identical inputs give identical streams.
Rng substream(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream);

cvec assemble_preamble(const PreambleSpec& spec);

/// Beam-gain magnitude of frame p for a beam peaking at `peak`.
double beam_gain(const ScenarioConfig& cfg, int p, int peak);

/// Draws CFOs, delays and gains, then rescales BS 0 to hit target_sinr_db.
GroundTruth draw_ground_truth(const ScenarioConfig& cfg, Rng& rng);

/// 10 log10 of target (BS 0) burst energy over interference-plus-noise energy
/// per frame. Returns +infinity when the denominator vanishes.
double calibrate_sinr(const GroundTruth& truth, const ScenarioConfig& cfg);

/// Rescales BS 0's gains in place so calibrate_sinr returns `sinr_db`.
/// No-op when the interference-plus-noise energy is zero or sinr_db is infinite.
void scale_target_to_sinr(GroundTruth& truth, const ScenarioConfig& cfg, double sinr_db);

/// Noise-free part of the received signal, length cfg.burst_len().
cvec synthesize_clean(const ScenarioConfig& cfg, const GroundTruth& truth);

/// y[m] = sum_k sum_p alpha_k^p c_k[m - p N_f - tau_k] exp(+j omega_k m) + CN(0, noise_var).
ReceivedBurst synthesize_burst(const ScenarioConfig& cfg, const GroundTruth& truth, Rng& rng);

/// Adds i.i.d. CN(0, noise_var) samples.
void add_noise(cvec& samples, double noise_var, Rng& rng);

}  // namespace xcfo
