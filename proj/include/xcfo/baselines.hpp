#pragma once

#include <span>

#include "xcfo/common.hpp"
#include "xcfo/estimators.hpp"
#include "xcfo/synthesis.hpp"

namespace xcfo {

// Comparison estimators. The cross-correlation separate estimator lives in
// estimators.hpp (separate_cfo) and is used from there.

/// Cyclic-prefix wrapping of each training sequence: a symbol body of n_fft
/// samples (the sequence repeated cyclically) preceded by its last n_cp samples.
struct CpWrapConfig {
    int n_fft = 256;
    int n_cp = 32;

    int symbol_len() const { return n_fft + n_cp; }
    void validate() const;
};

/// sym(seq0), tau0 zeros, mu * sym(seq1).
cvec cp_wrap_preamble(const PreambleSpec& spec, const CpWrapConfig& cp);

/// Same truth and noise model as synthesize_burst, with CP-wrapped preambles.
/// Throws ConfigError if the wrapped preamble plus delay does not fit in a frame.
ReceivedBurst synthesize_cp_burst(const ScenarioConfig& cfg, const GroundTruth& truth, const CpWrapConfig& cp,
                                  Rng& rng);

/// CP correlator over both symbols of every frame of BS k:
///   (1/n_fft) angle(sum_m conj(y[m]) y[m + n_fft]), m over the CP samples.
double cp_blind_cfo(std::span<const cd> y, const ScenarioConfig& cfg, const CpWrapConfig& cp, int tau_k);

struct HalfCorrelations {
    cd early{0.0, 0.0};
    cd late{0.0, 0.0};
    int baseline = 0;  // sample distance between the two halves
};

/// Correlates the first and second halves of c_{k,i} against the received
/// window separately (odd N drops the middle sample).
HalfCorrelations half_correlations(std::span<const cd> y, const TrainingSequence& c, long start);

/// Single window: angle(z_late conj(z_early)) / baseline.
double autocorr_split_cfo(const ReceivedBurst& burst, int k, int p, int i, int tau_k);

enum class SplitPooling {
    ProductSum,    // sum_{p,i} z_late conj(z_early): each frame's product is phase-coherent
    FrameAverage,  // average z_early / z_late over frames first, as separate_cfo does
};

/// Burst-level split estimator for BS k: pools the half-correlation phase
/// products of both sequences and all frames before taking one angle.
double autocorr_split_burst(std::span<const cd> y, const PreambleSpec& pre, int tau_k, int num_frames,
                            int frame_len, SplitPooling pooling = SplitPooling::ProductSum);

/// sum_p w_p est_p / sum_p w_p. Throws ParameterError when all weights are zero.
double weighted_average_cfo(std::span<const double> per_frame_estimates, std::span<const double> weights);

}  // namespace xcfo
