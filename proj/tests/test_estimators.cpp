#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "xcfo/estimators.hpp"

using namespace xcfo;
using namespace testutil;

namespace {

CorrelationGrid grid_of(const ScenarioConfig& cfg, const cvec& y) {
    return compute_grid(y, cfg.preambles, cfg.delays, cfg.num_frames, cfg.frame_len);
}

std::vector<cd> row(const Eigen::MatrixXcd& a, int k) {
    std::vector<cd> out;
    for (Eigen::Index p = 0; p < a.cols(); ++p) out.push_back(a(k, p));
    return out;
}

}  // namespace

TEST_CASE("correlation_statistic: matched term of a clean single BS") {
    auto cfg = small_scenario(1, 3, {9}, {1.7});
    const double w = 0.0021;
    const auto a = unit_gains(1, 3, 2);
    ReceivedBurst b;
    b.config = cfg;
    b.samples = synthesize_clean(cfg, fixed_truth(cfg, {w}, a));
    const cd g = std::conj(autocorrelation(cfg.preambles[0].seq0, w));
    for (int p = 0; p < 3; ++p) {
        const double start = p * cfg.frame_len + 9;
        const cd r0 = correlation_statistic(b, 0, p, 0, 9);
        CHECK(std::abs(r0 - a(0, p) * g * std::polar(1.0, w * start)) < 1e-12);
        const cd r1 = correlation_statistic(b, 0, p, 1, 9);
        CHECK(std::abs(r1 / r0 - 1.7 * std::polar(1.0, w * cfg.tau_c())) < 1e-12);
    }
    CHECK_THROWS_AS(correlation_statistic(b, 0, 3, 0, 9), ParameterError);
}

TEST_CASE("correlation_statistic: pure noise has zero mean and N * variance = sigma_n^2") {
    auto cfg = small_scenario(1, 1, {0});
    cfg.noise_var = 0.7;
    const auto truth = fixed_truth(cfg, {0.0}, Eigen::MatrixXcd::Zero(1, 1));
    const int draws = 10000;
    cd sum{0.0, 0.0};
    double sum_sq = 0.0;
    for (int d = 0; d < draws; ++d) {
        Rng rng = substream(42, static_cast<std::uint64_t>(d), 1);
        const auto b = synthesize_burst(cfg, truth, rng);
        const cd r = correlation_statistic(b, 0, 0, 1, 0);
        sum += r;
        sum_sq += std::norm(r);
    }
    const cd mean = sum / static_cast<double>(draws);
    const double var = sum_sq / draws - std::norm(mean);
    const double se = std::sqrt(0.7 / 127.0 / draws);
    CHECK(std::abs(mean.real()) < 4.0 * se);
    CHECK(std::abs(mean.imag()) < 4.0 * se);
    CHECK(127.0 * var == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("noise_variance: worked values") {
    CHECK(noise_variance({}, 1.0, 0, 1.0, 0.3, 127) == doctest::Approx(0.3 / 127.0));
    const std::vector<cd> one{cd{0.6, 0.8}};
    CHECK(noise_variance(one, 1.0, 1, 1.0, 1.0, 127) == doctest::Approx(2.0 / 127.0));
    const std::vector<cd> base{cd{0.3, 0.1}, cd{-0.2, 0.5}};
    const std::vector<cd> twice{cd{0.6, 0.2}, cd{-0.4, 1.0}};
    CHECK(noise_variance(twice, 1.3, 1, 0.9, 0.0, 63) == doctest::Approx(4.0 * noise_variance(base, 1.3, 1, 0.9, 0.0, 63)));
    // mu^2 scales only the second sequence's interference term.
    CHECK(noise_variance(one, 2.0, 1, 1.0, 0.0, 1) == doctest::Approx(4.0));
    CHECK(noise_variance(one, 2.0, 0, 1.0, 0.0, 1) == doctest::Approx(1.0));
}

TEST_CASE("design matrix: raw preambles at zero CFO and delay, equal column norms") {
    auto cfg = small_scenario(2, 2, {0, 0});
    const std::vector<double> zeros{0.0, 0.0}, ones{1.0, 1.0};
    const auto d = build_design_matrix(cfg.delays, zeros, ones, cfg.preambles, cfg.frame_len, 2);
    const auto full = d.assembled();
    REQUIRE(full.rows() == 2 * cfg.frame_len);
    REQUIRE(full.cols() == 4);
    for (int k = 0; k < 2; ++k) {
        const cvec pre = assemble_preamble(cfg.preambles[static_cast<std::size_t>(k)]);
        for (int p = 0; p < 2; ++p) {
            for (int m = 0; m < cfg.frame_len; m += 5) {
                const cd expect = m < static_cast<int>(pre.size()) ? pre[static_cast<std::size_t>(m)] : cd{0.0, 0.0};
                CHECK(full(p * cfg.frame_len + m, p * 2 + k) == expect);
            }
        }
    }
    const std::vector<double> w{0.01, -0.002}, mus{1.0, 2.0};
    const auto d2 = build_design_matrix(std::vector<int>{4, 13}, w, mus, cfg.preambles, cfg.frame_len, 2);
    const auto f2 = d2.assembled();
    for (int p = 0; p < 2; ++p) {
        CHECK(f2.col(p * 2).norm() == doctest::Approx(std::sqrt(127.0 * 2.0)));
        CHECK(f2.col(p * 2 + 1).norm() == doctest::Approx(std::sqrt(127.0 * 5.0)));
    }
}

TEST_CASE("design matrix reproduces the clean burst and apply agrees with the dense operator") {
    auto cfg = small_scenario(3, 3, {0, 6, 15}, {1.0, 1.4, 0.8});
    const auto a = unit_gains(3, 3, 4);
    const std::vector<double> w{0.003, -0.001, 0.0025};
    const auto truth = fixed_truth(cfg, w, a);
    const cvec y = synthesize_clean(cfg, truth);
    const auto d = build_design_matrix(cfg.delays, w, truth.mus, cfg.preambles, cfg.frame_len, 3);
    const cvec model = d.apply(a);
    Eigen::VectorXcd vec_a(9);
    for (int p = 0; p < 3; ++p)
        for (int k = 0; k < 3; ++k) vec_a(p * 3 + k) = a(k, p);
    const Eigen::VectorXcd dense = d.assembled() * vec_a;
    for (std::size_t m = 0; m < model.size(); ++m) {
        CHECK(std::abs(model[m] - y[m]) < 1e-12);
        CHECK(std::abs(dense(static_cast<Eigen::Index>(m)) - model[m]) < 1e-12);
    }
}

TEST_CASE("estimate_channel: exact on clean data, zero on zero input, projection under CFO mismatch") {
    auto cfg = small_scenario(3, 4, {2, 8, 16});
    const auto a = unit_gains(3, 4, 6);
    const std::vector<double> w{0.002, 0.0, -0.003};
    const auto truth = fixed_truth(cfg, w, a);
    const cvec y = synthesize_clean(cfg, truth);
    const auto d = build_design_matrix(cfg.delays, w, truth.mus, cfg.preambles, cfg.frame_len, 4);
    const auto est = estimate_channel(y, d);
    CHECK((est.alphas - a).norm() / a.norm() < 1e-9);
    CHECK(est.regularized_frames.empty());

    const cvec zero(y.size(), cd{0.0, 0.0});
    CHECK(estimate_channel(zero, d).alphas.norm() == 0.0);

    auto one = small_scenario(1, 1, {3});
    const double w1 = 0.004;
    const Eigen::MatrixXcd a1 = Eigen::MatrixXcd::Constant(1, 1, cd{0.8, -0.3});
    const cvec y1 = synthesize_clean(one, fixed_truth(one, {w1}, a1));
    const std::vector<double> wrong{0.0}, mu1{1.0};
    const auto dm = build_design_matrix(one.delays, wrong, mu1, one.preambles, one.frame_len, 1);
    const cd got = estimate_channel(y1, dm).alphas(0, 0);
    const Eigen::VectorXcd col = dm.assembled().col(0);
    const Eigen::Map<const Eigen::VectorXcd> yv(y1.data(), col.size());
    const cd proj = col.dot(yv) / col.squaredNorm();
    CHECK(std::abs(got - proj) < 1e-12);
    CHECK(std::abs(got) < std::abs(a1(0, 0)));
}

TEST_CASE("estimate_channel: identical columns raise a rank error naming the frame") {
    auto cfg = small_scenario(2, 2, {4, 4});
    cfg.preambles[1] = cfg.preambles[0];
    const std::vector<double> w{0.0, 0.0}, mus{1.0, 1.0};
    const auto d = build_design_matrix(cfg.delays, w, mus, cfg.preambles, cfg.frame_len, 2);
    const cvec y(static_cast<std::size_t>(cfg.burst_len()), cd{1.0, 0.0});
    CHECK_THROWS_WITH_AS(estimate_channel(y, d), doctest::Contains("frame 0"), RankError);
}

TEST_CASE("estimate_mu: recovers 1 and 2 exactly, clamps a missing second sequence") {
    for (double mu_true : {1.0, 2.0}) {
        auto cfg = small_scenario(2, 3, {1, 10}, {mu_true, 1.0});
        const auto a = unit_gains(2, 3, 10);
        const std::vector<double> w{0.001, -0.002};
        const auto truth = fixed_truth(cfg, w, a);
        const cvec y = synthesize_clean(cfg, truth);
        const std::vector<double> prior{1.0, 1.0};
        const auto d0 = build_design_matrix(cfg.delays, w, prior, cfg.preambles, cfg.frame_len, 3, DesignPart::Seq0);
        const auto d1 = build_design_matrix(cfg.delays, w, prior, cfg.preambles, cfg.frame_len, 3, DesignPart::Seq1);
        const auto est = estimate_mu(y, d0, d1, a, prior);
        CHECK(est.mus[0] == doctest::Approx(mu_true).epsilon(1e-9));
        CHECK(est.mus[1] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK_FALSE(est.clamped[0]);

        const cvec only0 = d0.apply(a);
        const auto zero = estimate_mu(only0, d0, d1, a, prior);
        CHECK(zero.clamped[0]);
        CHECK(zero.mus[0] == 1e-6);
    }
}

TEST_CASE("estimate_mu: negligible channel energy keeps the prior") {
    auto cfg = small_scenario(2, 2, {0, 5});
    Eigen::MatrixXcd a = unit_gains(2, 2, 1);
    a.row(1).setZero();
    const std::vector<double> w{0.0, 0.0}, prior{1.0, 0.7};
    const cvec y = synthesize_clean(cfg, fixed_truth(cfg, w, a));
    const auto d0 = build_design_matrix(cfg.delays, w, prior, cfg.preambles, cfg.frame_len, 2, DesignPart::Seq0);
    const auto d1 = build_design_matrix(cfg.delays, w, prior, cfg.preambles, cfg.frame_len, 2, DesignPart::Seq1);
    const auto est = estimate_mu(y, d0, d1, a, prior);
    CHECK(est.skipped[1]);
    CHECK(est.mus[1] == 0.7);
}

TEST_CASE("separate_cfo: exact phase baseline and aliasing beyond pi / tau_c") {
    auto cfg = small_scenario(1, 4, {3});
    const auto a = unit_gains(1, 4, 3);
    for (double w : {0.001, 0.0, -0.0105}) {
        const auto g = grid_of(cfg, synthesize_clean(cfg, fixed_truth(cfg, {w}, a)));
        CHECK(separate_cfo(g, 0, 1.0) == doctest::Approx(w).epsilon(1e-12).scale(1e-9));
    }
    const double tau_c = cfg.tau_c();
    const double beyond = 1.2 * kPi / tau_c;
    auto wide = cfg;
    const auto g = grid_of(wide, synthesize_clean(wide, fixed_truth(wide, {beyond}, a)));
    CHECK(separate_cfo(g, 0, 1.0) == doctest::Approx(beyond - 2.0 * kPi / tau_c).epsilon(1e-9));

    const auto zero = grid_of(cfg, cvec(static_cast<std::size_t>(cfg.burst_len()), cd{0.0, 0.0}));
    CHECK_THROWS_AS(separate_cfo(zero, 0, 1.0), DegenerateError);
}

TEST_CASE("cross_preamble_cfo: exact on clean data, equals separate_cfo for one frame") {
    auto cfg = small_scenario(1, 5, {0});
    const auto a = unit_gains(1, 5, 12);
    const auto g = grid_of(cfg, synthesize_clean(cfg, fixed_truth(cfg, {0.002}, a)));
    CHECK(std::abs(cross_preamble_cfo(g, 0, row(a, 0), 1.0) - 0.002) < 1e-12);

    auto one = small_scenario(1, 1, {4});
    one.noise_var = 0.5;
    Rng rng = substream(5, 0, 1);
    const Eigen::MatrixXcd a1 = Eigen::MatrixXcd::Constant(1, 1, cd{0.3, 0.9});
    const auto b = synthesize_burst(one, fixed_truth(one, {0.007}, a1), rng);
    CorrelationGrid g1 = grid_of(one, b.samples);
    g1.noise_vars = {0.3, 0.9};
    CHECK(cross_preamble_cfo(g1, 0, row(a1, 0), 1.0) == doctest::Approx(separate_cfo(g1, 0, 1.0)).epsilon(1e-12));

    const std::vector<cd> zeros(5, cd{0.0, 0.0});
    CHECK_THROWS_AS(cross_preamble_cfo(g, 0, zeros, 1.0), DegenerateError);
}

TEST_CASE("cross_preamble_cfo: positive rescaling of gains and variances leaves the estimate unchanged") {
    auto cfg = small_scenario(2, 6, {0, 9});
    cfg.noise_var = 0.2;
    const auto a = unit_gains(2, 6, 21);
    Rng rng = substream(2, 0, 1);
    const auto b = synthesize_burst(cfg, fixed_truth(cfg, {0.001, -0.002}, a), rng);
    CorrelationGrid g = grid_of(cfg, b.samples);
    assign_noise_vars(g, a, std::vector<double>{1.0, 1.0}, 1.0, cfg.noise_var, 127);
    const double base = cross_preamble_cfo(g, 0, row(a, 0), 1.0);
    CorrelationGrid scaled = g;
    for (auto& v : scaled.noise_vars) v *= 3.7;
    std::vector<cd> ascaled = row(a, 0);
    for (auto& x : ascaled) x *= 2.5;
    CHECK(cross_preamble_cfo(scaled, 0, ascaled, 1.0) == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("log_likelihood: zero at the clean truth, negative elsewhere") {
    auto cfg = small_scenario(1, 3, {5}, {1.3});
    const auto a = unit_gains(1, 3, 31);
    const double w = 0.0017;
    const auto g = grid_of(cfg, synthesize_clean(cfg, fixed_truth(cfg, {w}, a)));
    const cd gain = std::conj(autocorrelation(cfg.preambles[0].seq0, w));
    CHECK(std::abs(log_likelihood(g, 0, w, row(a, 0), 1.3, gain, w)) < 1e-18);
    CHECK(log_likelihood(g, 0, w + 1e-4, row(a, 0), 1.3, gain, w) < 0.0);
    CHECK(log_likelihood(g, 0, w - 1e-5, row(a, 0), 1.3, gain, w) < 0.0);
}

TEST_CASE("property: cross_preamble_cfo is the grid argmax of the phase-profiled likelihood") {
    // The common carrier phase is unknown, so the likelihood is maximized over
    // it for every candidate omega. LL(g) is quadratic in g, so its phase
    // derivative at |g| = 1 comes from evaluations at +-1 and +-j.
    const double step = 1e-6;
    for (int inst = 0; inst < 50; ++inst) {
        Rng setup = substream(77, static_cast<std::uint64_t>(inst), 0);
        std::uniform_int_distribution<int> pick(1, 6);
        const int frames = pick(setup);
        auto cfg = small_scenario(2, frames, {0, 11});
        cfg.noise_var = 0.5;
        const auto a = unit_gains(2, frames, 1000 + static_cast<std::uint64_t>(inst));
        std::uniform_real_distribution<double> wd(-0.008, 0.008);
        const auto truth = fixed_truth(cfg, {wd(setup), wd(setup)}, a);
        Rng noise = substream(77, static_cast<std::uint64_t>(inst), 1);
        const auto b = synthesize_burst(cfg, truth, noise);
        CorrelationGrid g = grid_of(cfg, b.samples);
        assign_noise_vars(g, a, truth.mus, scenario_sigma_c2(cfg), cfg.noise_var, 127);
        const auto ak = row(a, 0);
        const double est = cross_preamble_cfo(g, 0, ak, 1.0);

        auto profiled = [&](double w) {
            const double re = log_likelihood(g, 0, w, ak, 1.0, cd{1, 0}) - log_likelihood(g, 0, w, ak, 1.0, cd{-1, 0});
            const double im = log_likelihood(g, 0, w, ak, 1.0, cd{0, 1}) - log_likelihood(g, 0, w, ak, 1.0, cd{0, -1});
            return log_likelihood(g, 0, w, ak, 1.0, std::polar(1.0, std::atan2(im, re)));
        };
        double best_w = 0.0, best = -1e300;
        for (int j = -2000; j <= 2000; ++j) {
            const double w = est + j * step;
            const double v = profiled(w);
            if (v > best) {
                best = v;
                best_w = w;
            }
        }
        CHECK(std::abs(best_w - est) <= step);
    }
}

TEST_CASE("property: LLS channel estimate is unbiased with the true design") {
    auto cfg = small_scenario(2, 2, {0, 7}, {1.0, 1.2});
    cfg.noise_var = 0.5;
    const auto a = unit_gains(2, 2, 55);
    const std::vector<double> w{0.002, -0.001};
    const auto truth = fixed_truth(cfg, w, a);
    const cvec clean = synthesize_clean(cfg, truth);
    const auto d = build_design_matrix(cfg.delays, w, truth.mus, cfg.preambles, cfg.frame_len, 2);
    const int draws = 1000;
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(2, 2);
    Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(2, 2);
    for (int t = 0; t < draws; ++t) {
        cvec y = clean;
        Rng rng = substream(8, static_cast<std::uint64_t>(t), 1);
        add_noise(y, cfg.noise_var, rng);
        const auto e = estimate_channel(y, d).alphas;
        sum += e;
        sum_sq += (e - a).cwiseAbs2();
    }
    const Eigen::MatrixXcd mean = sum / draws;
    for (int k = 0; k < 2; ++k)
        for (int p = 0; p < 2; ++p) {
            const double se = std::sqrt(sum_sq(k, p) / draws / draws);
            CHECK(std::abs(mean(k, p) - a(k, p)) < 3.0 * se);
        }
}
