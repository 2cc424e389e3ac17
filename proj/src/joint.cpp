#include "xcfo/joint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "xcfo/kernels.hpp"

namespace xcfo {

double scenario_sigma_c2(const ScenarioConfig& cfg) {
    std::vector<TrainingSequence> family;
    for (const auto& pre : cfg.preambles) {
        family.push_back(pre.seq0);
        family.push_back(pre.seq1);
    }
    int spread = cfg.delay_max;
    if (!cfg.delays.empty()) {
        const auto [lo, hi] = std::minmax_element(cfg.delays.begin(), cfg.delays.end());
        spread = *hi - *lo;
    }
    std::vector<int> taus;
    for (int t = -spread; t <= spread; ++t) {
        taus.push_back(t);
    }
    if (family.size() < 2) {
        return 1.0;
    }
    return estimate_sigma_c(family, taus);
}

KnownParams known_from_burst(const ReceivedBurst& burst) {
    const auto& cfg = burst.config;
    KnownParams known;
    if (burst.truth) {
        known.delays = burst.truth->delays;
    } else if (!cfg.delays.empty()) {
        known.delays = cfg.delays;
    } else {
        throw ParameterError("known_from_burst: burst carries neither ground-truth nor configured delays");
    }
    known.preambles = cfg.preambles;
    known.num_frames = cfg.num_frames;
    known.frame_len = cfg.frame_len;
    known.sigma_c2 = scenario_sigma_c2(cfg);
    known.noise_var = cfg.noise_var;
    return known;
}

EstimationResult initial_estimates(int num_bs, int num_frames) {
    EstimationResult est;
    est.omegas_hat.assign(static_cast<std::size_t>(num_bs), 0.0);
    est.alphas_hat = Eigen::MatrixXcd::Zero(num_bs, num_frames);
    est.mus_hat.assign(static_cast<std::size_t>(num_bs), 1.0);
    est.mu_clamped.assign(static_cast<std::size_t>(num_bs), false);
    return est;
}

namespace {

DesignMatrix full_design(const KnownParams& known, const EstimationResult& est) {
    return build_design_matrix(known.delays, est.omegas_hat, est.mus_hat, known.preambles, known.frame_len,
                               known.num_frames, DesignPart::Full);
}

struct SplitDesigns {
    DesignMatrix seq0;
    DesignMatrix seq1;
};

SplitDesigns split_designs(const KnownParams& known, const EstimationResult& est) {
    return {build_design_matrix(known.delays, est.omegas_hat, est.mus_hat, known.preambles, known.frame_len,
                                known.num_frames, DesignPart::Seq0),
            build_design_matrix(known.delays, est.omegas_hat, est.mus_hat, known.preambles, known.frame_len,
                                known.num_frames, DesignPart::Seq1)};
}

// A = A_0 + A_1 diag(mu), the full design without rebuilding the ramps.
DesignMatrix combine(const SplitDesigns& d, std::span<const double> mus) {
    DesignMatrix out = d.seq0;
    for (std::size_t p = 0; p < out.blocks.size(); ++p) {
        for (Eigen::Index k = 0; k < out.blocks[p].cols(); ++k) {
            out.blocks[p].col(k) += mus[static_cast<std::size_t>(k)] * d.seq1.blocks[p].col(k);
        }
    }
    return out;
}

// Step 1: alpha from the (omega, mu) design, then mu from the (omega, alpha)
// split designs. Returns the full design rebuilt with the new mu.
DesignMatrix update_channel(std::span<const cd> y, const KnownParams& known, EstimationResult& est) {
    const SplitDesigns split = split_designs(known, est);
    const ChannelEstimate ch = estimate_channel(y, combine(split, est.mus_hat));
    est.alphas_hat = ch.alphas;
    est.regularized_blocks += static_cast<int>(ch.regularized_frames.size());

    const MuEstimate mu = estimate_mu(y, split.seq0, split.seq1, est.alphas_hat, est.mus_hat);
    est.mus_hat = mu.mus;
    for (std::size_t k = 0; k < mu.clamped.size(); ++k) {
        est.mu_clamped[k] = mu.clamped[k];
    }
    return combine(split, est.mus_hat);
}

// Correlation grid of BS k on the SIC residual, evaluated only on its own windows.
CorrelationGrid residual_grid(std::span<const cd> y, const KnownParams& known, const DesignMatrix& design,
                              const cvec& model_all, const EstimationResult& est, int k) {
    CorrelationGrid grid;
    grid.num_bs = known.num_bs();
    grid.num_frames = known.num_frames;
    grid.frame_len = known.frame_len;
    const auto& pre = known.preambles[static_cast<std::size_t>(k)];
    grid.tau_c = pre.tau_c();
    grid.delays = known.delays;
    grid.values.assign(static_cast<std::size_t>(grid.num_bs) * static_cast<std::size_t>(grid.num_frames) * 2,
                       cd{0.0, 0.0});
    grid.noise_vars.assign(grid.values.size(), 1.0);

    const int n = pre.seq_len();
    const double omega = est.omegas_hat[static_cast<std::size_t>(k)];
    const cvec derot = kernels::phasor_ramp(-omega, 0, n);
    const int tau_k = known.delays[static_cast<std::size_t>(k)];
    for (int p = 0; p < known.num_frames; ++p) {
        const auto& block = design.blocks[static_cast<std::size_t>(p)];
        const cd own_gain = est.alphas_hat(k, p);
        for (int i = 0; i < 2; ++i) {
            const int row0 = tau_k + i * pre.tau_c();
            const long abs0 = static_cast<long>(p) * known.frame_len + row0;
            const cd head = std::polar(1.0, -omega * static_cast<double>(abs0));
            const auto& c = i == 0 ? pre.seq0 : pre.seq1;
            cd acc{0.0, 0.0};
            for (int m = 0; m < n; ++m) {
                const auto a = static_cast<std::size_t>(abs0 + m);
                const cd resid = y[a] - model_all[a] + block(row0 - design.row_lo + m, k) * own_gain;
                acc += resid * derot[static_cast<std::size_t>(m)] * std::conj(c.samples[static_cast<std::size_t>(m)]);
            }
            grid.values[grid.index(k, p, i)] = head * acc / static_cast<double>(n);
        }
    }
    assign_noise_vars(grid, est.alphas_hat, est.mus_hat, known.sigma_c2, known.noise_var, known.seq_len());
    return grid;
}

std::vector<int> sweep_order(const EstimationResult& est) {
    std::vector<int> order(static_cast<std::size_t>(est.alphas_hat.rows()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return est.alphas_hat.row(a).squaredNorm() > est.alphas_hat.row(b).squaredNorm();
    });
    return order;
}

}  // namespace

cvec sic_residual(std::span<const cd> y, const KnownParams& known, const EstimationResult& est, int k) {
    EstimationResult others = est;
    others.alphas_hat.row(k).setZero();
    const DesignMatrix design = full_design(known, others);
    const cvec model = design.apply(others.alphas_hat);
    const double omega = est.omegas_hat[static_cast<std::size_t>(k)];
    cvec out(y.begin(), y.end());
    for (std::size_t m = 0; m < out.size(); ++m) {
        if (m < model.size()) {
            out[m] -= model[m];
        }
        out[m] *= std::polar(1.0, -omega * static_cast<double>(m));
    }
    return out;
}

Eigen::MatrixXcd zero_cfo_channel(std::span<const cd> y, const KnownParams& known) {
    std::vector<double> zeros(static_cast<std::size_t>(known.num_bs()), 0.0);
    std::vector<double> mus;
    for (const auto& pre : known.preambles) {
        mus.push_back(pre.mu);
    }
    const DesignMatrix design =
        build_design_matrix(known.delays, zeros, mus, known.preambles, known.frame_len, known.num_frames);
    return estimate_channel(y, design).alphas;
}

EstimationResult joint_estimate(std::span<const cd> y, const KnownParams& known, const JointOptions& opts) {
    if (opts.max_iter < 1) {
        throw ParameterError("joint_estimate: max_iter must be positive");
    }
    const int num_bs = known.num_bs();
    EstimationResult est = initial_estimates(num_bs, known.num_frames);

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        DesignMatrix design;
        try {
            design = update_channel(y, known, est);
        } catch (const RankError& e) {
            throw RankError("joint_estimate: iteration " + std::to_string(iter) + ": " + e.what());
        } catch (const DegenerateError& e) {
            throw DegenerateError("joint_estimate: iteration " + std::to_string(iter) + ": " + e.what());
        }

        // Jacobi sweep: every BS sees the snapshot taken here.
        const cvec model_all = design.apply(est.alphas_hat);
        std::vector<double> delta(static_cast<std::size_t>(num_bs), 0.0);
        for (int k : sweep_order(est)) {
            try {
                const CorrelationGrid grid = residual_grid(y, known, design, model_all, est, k);
                std::vector<cd> gains(static_cast<std::size_t>(known.num_frames));
                for (int p = 0; p < known.num_frames; ++p) {
                    gains[static_cast<std::size_t>(p)] = est.alphas_hat(k, p);
                }
                delta[static_cast<std::size_t>(k)] =
                    cross_preamble_cfo(grid, k, gains, est.mus_hat[static_cast<std::size_t>(k)]);
            } catch (const DegenerateError& e) {
                throw DegenerateError("joint_estimate: iteration " + std::to_string(iter) + ", BS " +
                                      std::to_string(k) + ": " + e.what());
            }
        }
        double total = 0.0;
        for (int k = 0; k < num_bs; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            // The two-sequence phase baseline cannot tell omega from omega + 2 pi / tau_c,
            // so keep the accumulated estimate in the unambiguous interval.
            const double tau_c = known.preambles[ku].tau_c();
            est.omegas_hat[ku] = wrap_phase((est.omegas_hat[ku] + delta[ku]) * tau_c) / tau_c;
            total += std::abs(delta[ku]);
        }
        est.iteration_trace.push_back(total);
        est.iterations = iter;
        if (total < opts.epsilon) {
            est.converged = true;
            break;
        }
    }
    // Refresh alpha and mu against the final CFO estimates.
    update_channel(y, known, est);
    return est;
}

}  // namespace xcfo
