#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xcfo/common.hpp"
#include "xcfo/estimators.hpp"
#include "xcfo/synthesis.hpp"

namespace xcfo {

/// What the receiver knows up front: timing, preamble structure and the
/// interference/noise statistics used to weight the cross-preamble sums.
struct KnownParams {
    std::vector<int> delays;
    std::vector<PreambleSpec> preambles;
    int num_frames = 0;
    int frame_len = 0;
    double sigma_c2 = 1.0;
    double noise_var = 0.0;

    int num_bs() const { return static_cast<int>(preambles.size()); }
    int seq_len() const { return preambles.empty() ? 0 : preambles.front().seq_len(); }
};

/// Known parameters for a burst: delays from the ground truth when present
/// (otherwise config.delays), sigma_c^2 estimated from the configured family.
KnownParams known_from_burst(const ReceivedBurst& burst);

/// sigma_c^2 of a scenario: estimate_sigma_c over all configured training
/// sequences and every delay difference the scenario can produce.
double scenario_sigma_c2(const ScenarioConfig& cfg);

struct EstimationResult {
    std::vector<double> omegas_hat;
    Eigen::MatrixXcd alphas_hat;  // K x P
    std::vector<double> mus_hat;
    std::vector<double> iteration_trace;  // sum_k |delta_k| per iteration
    bool converged = false;
    int iterations = 0;
    std::vector<bool> mu_clamped;
    int regularized_blocks = 0;
};

/// Zero-initialised estimates (omega = 0, alpha = 0, mu = 1).
EstimationResult initial_estimates(int num_bs, int num_frames);

/// (y - sum_{q != k} A_q alpha_q) .* exp(-j omega_k m): cancels every other
/// BS with the current estimates and removes BS k's current CFO estimate.
cvec sic_residual(std::span<const cd> y, const KnownParams& known, const EstimationResult& est, int k);

struct JointOptions {
    double epsilon = 1e-6;  // rad/sample
    int max_iter = 20;
};

/// Alternates LLS channel / scaling updates with a Jacobi sweep of SIC,
/// pre-compensation and cross-preamble re-estimation of the residual CFO,
/// until sum_k |delta_k| < epsilon or max_iter sweeps.
EstimationResult joint_estimate(std::span<const cd> y, const KnownParams& known, const JointOptions& opts = {});

/// One-shot LLS channel estimate with zero-CFO designs and mu = 1.
Eigen::MatrixXcd zero_cfo_channel(std::span<const cd> y, const KnownParams& known);

}  // namespace xcfo
