#pragma once

#include <vector>

#include "xcfo/joint.hpp"
#include "xcfo/synthesis.hpp"

namespace testutil {

using namespace xcfo;

// Small scenario with fixed delays; noise_var 0 unless set by the caller.
inline ScenarioConfig small_scenario(int num_bs, int num_frames, std::vector<int> delays, std::vector<double> mus = {}) {
    ScenarioConfig cfg = default_scenario();
    cfg.num_bs = num_bs;
    cfg.num_frames = num_frames;
    if (mus.empty()) mus.assign(static_cast<std::size_t>(num_bs), 1.0);
    assign_zc_preambles(cfg, default_root_pairs(num_bs), mus);
    cfg.delays = std::move(delays);
    cfg.noise_var = 0.0;
    return cfg;
}

inline GroundTruth fixed_truth(const ScenarioConfig& cfg, std::vector<double> omegas, const Eigen::MatrixXcd& alphas) {
    GroundTruth t;
    t.omegas = std::move(omegas);
    t.alphas = alphas;
    t.delays = cfg.delays;
    for (const auto& pre : cfg.preambles) t.mus.push_back(pre.mu);
    return t;
}

inline KnownParams known_for(const ScenarioConfig& cfg) {
    KnownParams k;
    k.delays = cfg.delays;
    k.preambles = cfg.preambles;
    k.num_frames = cfg.num_frames;
    k.frame_len = cfg.frame_len;
    k.sigma_c2 = cfg.num_bs > 1 ? scenario_sigma_c2(cfg) : 1.0;
    k.noise_var = cfg.noise_var;
    return k;
}

inline Eigen::MatrixXcd unit_gains(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    Eigen::MatrixXcd a(rows, cols);
    for (int k = 0; k < rows; ++k)
        for (int p = 0; p < cols; ++p) a(k, p) = std::polar(mag(rng), ph(rng));
    return a;
}

}  // namespace testutil
