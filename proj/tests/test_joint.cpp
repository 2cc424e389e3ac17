#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "xcfo/harness.hpp"
#include "xcfo/joint.hpp"

using namespace xcfo;
using namespace testutil;

namespace {

std::vector<cd> row(const Eigen::MatrixXcd& a, int k) {
    std::vector<cd> out;
    for (Eigen::Index p = 0; p < a.cols(); ++p) out.push_back(a(k, p));
    return out;
}

// Slow reference of the joint loop built only from public pieces: full-vector
// SIC residuals, a fresh correlation grid per BS and the Jacobi update.
EstimationResult reference_joint(std::span<const cd> y, const KnownParams& known, const JointOptions& opts) {
    EstimationResult est = initial_estimates(known.num_bs(), known.num_frames);
    auto refresh = [&] {
        const auto full = build_design_matrix(known.delays, est.omegas_hat, est.mus_hat, known.preambles,
                                              known.frame_len, known.num_frames);
        est.alphas_hat = estimate_channel(y, full).alphas;
        const auto d0 = build_design_matrix(known.delays, est.omegas_hat, est.mus_hat, known.preambles,
                                            known.frame_len, known.num_frames, DesignPart::Seq0);
        const auto d1 = build_design_matrix(known.delays, est.omegas_hat, est.mus_hat, known.preambles,
                                            known.frame_len, known.num_frames, DesignPart::Seq1);
        est.mus_hat = estimate_mu(y, d0, d1, est.alphas_hat, est.mus_hat).mus;
    };
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        refresh();
        std::vector<double> delta(static_cast<std::size_t>(known.num_bs()));
        for (int k = 0; k < known.num_bs(); ++k) {
            const cvec r = sic_residual(y, known, est, k);
            CorrelationGrid g = compute_grid(r, known.preambles, known.delays, known.num_frames, known.frame_len);
            assign_noise_vars(g, est.alphas_hat, est.mus_hat, known.sigma_c2, known.noise_var, known.seq_len());
            delta[static_cast<std::size_t>(k)] =
                cross_preamble_cfo(g, k, row(est.alphas_hat, k), est.mus_hat[static_cast<std::size_t>(k)]);
        }
        double total = 0.0;
        for (int k = 0; k < known.num_bs(); ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const double tc = known.preambles[ku].tau_c();
            est.omegas_hat[ku] = wrap_phase((est.omegas_hat[ku] + delta[ku]) * tc) / tc;
            total += std::abs(delta[ku]);
        }
        est.iteration_trace.push_back(total);
        est.iterations = iter;
        if (total < opts.epsilon) {
            est.converged = true;
            break;
        }
    }
    refresh();
    return est;
}

}  // namespace

TEST_CASE("sic_residual: K = 1 is the de-rotated burst; zero estimates return y") {
    auto cfg = small_scenario(1, 2, {3});
    const auto truth = fixed_truth(cfg, {0.002}, unit_gains(1, 2, 1));
    const cvec y = synthesize_clean(cfg, truth);
    auto known = known_for(cfg);
    EstimationResult est = initial_estimates(1, 2);
    est.omegas_hat[0] = 0.0013;
    est.alphas_hat = truth.alphas;
    const cvec r = sic_residual(y, known, est, 0);
    for (std::size_t m = 0; m < y.size(); m += 7) CHECK(std::abs(r[m] - y[m] * std::polar(1.0, -0.0013 * static_cast<double>(m))) < 1e-12);

    auto cfg3 = small_scenario(3, 2, {0, 4, 9});
    const cvec y3 = synthesize_clean(cfg3, fixed_truth(cfg3, {0.001, 0.002, -0.001}, unit_gains(3, 2, 2)));
    const auto zero = initial_estimates(3, 2);
    const cvec r3 = sic_residual(y3, known_for(cfg3), zero, 1);
    for (std::size_t m = 0; m < y3.size(); ++m) CHECK(r3[m] == y3[m]);
}

TEST_CASE("sic_residual: perfect estimates of the others leave only BS k") {
    auto cfg = small_scenario(3, 3, {0, 5, 12}, {1.0, 1.3, 0.9});
    const auto a = unit_gains(3, 3, 3);
    const std::vector<double> w{0.002, -0.003, 0.001};
    const auto truth = fixed_truth(cfg, w, a);
    const cvec y = synthesize_clean(cfg, truth);
    EstimationResult est = initial_estimates(3, 3);
    est.omegas_hat = w;
    est.alphas_hat = a;
    est.mus_hat = truth.mus;
    GroundTruth only1 = truth;
    only1.alphas.setZero();
    only1.alphas.row(1) = a.row(1);
    const cvec y1 = synthesize_clean(cfg, only1);
    const cvec r = sic_residual(y, known_for(cfg), est, 1);
    for (std::size_t m = 0; m < y.size(); ++m) CHECK(std::abs(r[m] - y1[m] * std::polar(1.0, -w[1] * static_cast<double>(m))) < 1e-12);
}

TEST_CASE("joint_estimate: single BS, clean, converges fast and exactly") {
    auto cfg = small_scenario(1, 4, {6});
    const auto a = unit_gains(1, 4, 5);
    const auto truth = fixed_truth(cfg, {0.003}, a);
    const cvec y = synthesize_clean(cfg, truth);
    const auto est = joint_estimate(y, known_for(cfg));
    CHECK(est.converged);
    CHECK(est.iterations <= 3);
    CHECK(std::abs(est.omegas_hat[0] - 0.003) < 1e-10);
    CHECK((est.alphas_hat - a).norm() / a.norm() < 1e-8);
    CHECK(est.mus_hat[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(est.iteration_trace.size() == static_cast<std::size_t>(est.iterations));
    CHECK(est.iteration_trace.back() < 1e-6);
}

TEST_CASE("joint_estimate: large epsilon stops after one converged iteration") {
    auto cfg = small_scenario(2, 3, {0, 8});
    const cvec y = synthesize_clean(cfg, fixed_truth(cfg, {0.002, -0.004}, unit_gains(2, 3, 6)));
    JointOptions opts;
    opts.epsilon = 1.0;
    const auto est = joint_estimate(y, known_for(cfg), opts);
    CHECK(est.iterations == 1);
    CHECK(est.converged);
    opts.max_iter = 0;
    CHECK_THROWS_AS(joint_estimate(y, known_for(cfg), opts), ParameterError);
}

TEST_CASE("joint_estimate: hitting max_iter is reported, not thrown") {
    auto cfg = small_scenario(2, 3, {0, 8});
    const cvec y = synthesize_clean(cfg, fixed_truth(cfg, {0.002, -0.004}, unit_gains(2, 3, 6)));
    JointOptions opts;
    opts.epsilon = 1e-300;
    opts.max_iter = 2;
    const auto est = joint_estimate(y, known_for(cfg), opts);
    CHECK_FALSE(est.converged);
    CHECK(est.iterations == 2);
}

TEST_CASE("joint_estimate: degeneracy is annotated with iteration and BS") {
    auto cfg = small_scenario(2, 2, {0, 3});
    const cvec zeros(static_cast<std::size_t>(cfg.burst_len()), cd{0.0, 0.0});
    CHECK_THROWS_WITH_AS(joint_estimate(zeros, known_for(cfg)), doctest::Contains("iteration 1, BS"), DegenerateError);
}

TEST_CASE("joint_estimate: windowed fast path equals the full-vector SIC reference") {
    ScenarioConfig cfg = default_scenario();
    cfg.num_bs = 4;
    cfg.num_frames = 4;
    assign_zc_preambles(cfg, default_root_pairs(4), {1.0, 1.2, 0.8, 1.0});
    cfg.target_sinr_db = -5.0;
    cfg.delays = {3, 0, 16, 9};
    Rng t = substream(5, 0, 0), n = substream(5, 0, 1);
    const auto truth = draw_ground_truth(cfg, t);
    const auto b = synthesize_burst(cfg, truth, n);
    const auto known = known_for(cfg);
    JointOptions opts;
    opts.max_iter = 4;
    const auto fast = joint_estimate(b.samples, known, opts);
    const auto ref = reference_joint(b.samples, known, opts);
    REQUIRE(fast.iterations == ref.iterations);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::abs(fast.omegas_hat[k] - ref.omegas_hat[k]) < 1e-12);
        CHECK(fast.mus_hat[k] == doctest::Approx(ref.mus_hat[k]).epsilon(1e-10));
    }
    for (std::size_t i = 0; i < ref.iteration_trace.size(); ++i)
        CHECK(fast.iteration_trace[i] == doctest::Approx(ref.iteration_trace[i]).epsilon(1e-8));
    CHECK((fast.alphas_hat - ref.alphas_hat).norm() / ref.alphas_hat.norm() < 1e-10);
}

TEST_CASE("fixed point: the clean truth yields zero residual CFO corrections") {
    auto cfg = small_scenario(3, 4, {0, 7, 14}, {1.0, 1.5, 0.7});
    const std::vector<double> w{0.003, -0.002, 0.0045};
    const auto truth = fixed_truth(cfg, w, unit_gains(3, 4, 15));
    const cvec y = synthesize_clean(cfg, truth);
    const auto known = known_for(cfg);
    EstimationResult est = initial_estimates(3, 4);
    est.omegas_hat = w;
    est.alphas_hat = truth.alphas;
    est.mus_hat = truth.mus;
    for (int k = 0; k < 3; ++k) {
        const cvec r = sic_residual(y, known, est, k);
        CorrelationGrid g = compute_grid(r, known.preambles, known.delays, 4, cfg.frame_len);
        assign_noise_vars(g, est.alphas_hat, est.mus_hat, known.sigma_c2, 1e-3, 127);
        CHECK(std::abs(cross_preamble_cfo(g, k, row(truth.alphas, k), truth.mus[static_cast<std::size_t>(k)])) < 1e-12);
    }
}

TEST_CASE("property: relabelling the BSs permutes the estimates") {
    ScenarioConfig cfg = default_scenario();
    cfg.num_bs = 4;
    cfg.num_frames = 6;
    assign_zc_preambles(cfg, default_root_pairs(4), {1.0, 1.0, 1.0, 1.0});
    cfg.target_sinr_db = 0.0;
    cfg.delays = {2, 11, 0, 7};
    Rng t = substream(9, 0, 0), n = substream(9, 0, 1);
    const auto truth = draw_ground_truth(cfg, t);
    const auto b = synthesize_burst(cfg, truth, n);
    const auto est = joint_estimate(b.samples, known_for(cfg));

    const std::vector<std::size_t> perm{2, 0, 3, 1};
    KnownParams shuffled = known_for(cfg);
    for (std::size_t j = 0; j < 4; ++j) {
        shuffled.preambles[j] = cfg.preambles[perm[j]];
        shuffled.delays[j] = cfg.delays[perm[j]];
    }
    const auto est2 = joint_estimate(b.samples, shuffled);
    // Within a small fraction of the error itself.
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(est2.omegas_hat[j] - est.omegas_hat[perm[j]]) < 1e-9);
}

TEST_CASE("property: Fig.-2 geometry at -10 dB, trace non-increasing and iteration 2 refines iteration 1") {
    ScenarioConfig cfg = default_scenario();
    cfg.target_sinr_db = -10.0;
    const TrialSetup setup = make_trial_setup(cfg, 1);
    const int trials = 200;
    int monotone = 0;
    std::vector<double> err1, err2;
    for (int t = 0; t < trials; ++t) {
        const auto truth = trial_truth(setup, t);
        Rng n = substream(1, static_cast<std::uint64_t>(t), 1);
        const auto b = synthesize_burst(cfg, truth, n);
        KnownParams known = known_for(cfg);
        known.delays = truth.delays;
        known.sigma_c2 = setup.sigma_c2;
        const auto est = joint_estimate(b.samples, known);
        bool ok = true;
        for (std::size_t i = 1; i < est.iteration_trace.size(); ++i) ok = ok && est.iteration_trace[i] <= est.iteration_trace[i - 1];
        monotone += ok ? 1 : 0;
        if (t < 50) {
            JointOptions one, two;
            one.max_iter = 1;
            two.max_iter = 2;
            const auto e1 = joint_estimate(b.samples, known, one);
            const auto e2 = joint_estimate(b.samples, known, two);
            for (std::size_t k = 0; k < truth.omegas.size(); ++k) {
                err1.push_back(std::abs(e1.omegas_hat[k] - truth.omegas[k]));
                err2.push_back(std::abs(e2.omegas_hat[k] - truth.omegas[k]));
            }
        }
    }
    CHECK(monotone >= 0.95 * trials);
    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
        return v[v.size() / 2];
    };
    CHECK(median(err2) <= median(err1));
}
