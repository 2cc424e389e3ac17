#include "xcfo/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xcfo/kernels.hpp"

namespace xcfo {

void PreambleSpec::validate() const {
    if (seq0.size() != seq1.size()) {
        throw ParameterError("preamble sequences differ in length");
    }
    if (!(mu > 0.0)) {
        throw ParameterError("preamble scaling mu must be positive");
    }
    if (tau0 < 0) {
        throw ParameterError("preamble gap tau0 must be nonnegative");
    }
}

int ScenarioConfig::max_delay() const {
    if (delays.empty()) {
        return delay_max;
    }
    return *std::max_element(delays.begin(), delays.end());
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("scenario: " + msg); };
    if (num_bs < 1) fail("K must be >= 1");
    if (num_frames < 1) fail("P must be >= 1");
    if (seq_len < 3) fail("N must be >= 3");
    if (tau0 < 0) fail("tau0 must be >= 0");
    if (static_cast<int>(preambles.size()) != num_bs) fail("need exactly K preambles");
    for (const auto& pre : preambles) {
        if (pre.seq_len() != seq_len || pre.tau0 != tau0) fail("preamble shape does not match N / tau0");
        try {
            pre.validate();
        } catch (const ParameterError& e) {
            fail(e.what());
        }
    }
    for (std::size_t a = 0; a < preambles.size(); ++a) {
        for (std::size_t b = a + 1; b < preambles.size(); ++b) {
            if (preambles[a].seq0.samples == preambles[b].seq0.samples &&
                preambles[a].seq1.samples == preambles[b].seq1.samples) {
                fail("preamble pairs must be unique per BS (BS " + std::to_string(a) + " and " +
                     std::to_string(b) + ")");
            }
        }
    }
    if (!delays.empty()) {
        if (static_cast<int>(delays.size()) != num_bs) fail("need exactly K delays");
        for (int d : delays) {
            if (d < 0) fail("delays must be nonnegative");
        }
    } else if (delay_max < 0) {
        fail("delay_max must be nonnegative");
    }
    if (frame_len < preamble_len() + max_delay()) {
        fail("frame_len " + std::to_string(frame_len) + " cannot hold preamble (" + std::to_string(preamble_len()) +
             ") plus max delay (" + std::to_string(max_delay()) + ")");
    }
    const double limit = kPi / tau_c();
    if (cfo_min > cfo_max) fail("cfo_min > cfo_max");
    if (cfo_min <= -limit || cfo_max >= limit) {
        fail("cfo range must lie inside (-pi/tau_c, pi/tau_c) = +-" + std::to_string(limit));
    }
    if (!(noise_var >= 0.0)) fail("noise_var must be nonnegative");
    if (beam_profile == BeamProfile::DominantBeam && !(beam_rolloff > 0.0)) fail("beam_rolloff must be positive");
    if (extra_samples < 0) fail("extra_samples must be nonnegative");
}

std::vector<std::pair<int, int>> default_root_pairs(int num_bs) {
    std::vector<std::pair<int, int>> pairs;
    for (int k = 0; k < num_bs; ++k) {
        pairs.emplace_back(2 * k + 1, 2 * k + 2);
    }
    return pairs;
}

void assign_zc_preambles(ScenarioConfig& cfg, const std::vector<std::pair<int, int>>& root_pairs,
                         const std::vector<double>& mus) {
    if (static_cast<int>(root_pairs.size()) != cfg.num_bs || static_cast<int>(mus.size()) != cfg.num_bs) {
        throw ConfigError("scenario: root pairs and mu list must have K entries");
    }
    cfg.preambles.clear();
    for (int k = 0; k < cfg.num_bs; ++k) {
        try {
            cfg.preambles.push_back(PreambleSpec{generate_zc(root_pairs[k].first, cfg.seq_len),
                                                 generate_zc(root_pairs[k].second, cfg.seq_len), mus[k], cfg.tau0});
        } catch (const ParameterError& e) {
            throw ConfigError(std::string("scenario: ") + e.what());
        }
    }
}

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    assign_zc_preambles(cfg, default_root_pairs(cfg.num_bs), std::vector<double>(cfg.num_bs, 1.0));
    cfg.cfo_max = 0.8 * kPi / cfg.tau_c();
    cfg.cfo_min = -cfg.cfo_max;
    return cfg;
}

Rng substream(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

cvec assemble_preamble(const PreambleSpec& spec) {
    spec.validate();
    cvec out;
    out.reserve(static_cast<std::size_t>(spec.length()));
    out.insert(out.end(), spec.seq0.samples.begin(), spec.seq0.samples.end());
    out.insert(out.end(), static_cast<std::size_t>(spec.tau0), cd{0.0, 0.0});
    for (const auto& s : spec.seq1.samples) {
        out.push_back(spec.mu * s);
    }
    return out;
}

double beam_gain(const ScenarioConfig& cfg, int p, int peak) {
    const double floor_amp = std::pow(10.0, cfg.beam_sidelobe_db / 20.0);
    const double d = std::abs(static_cast<double>(p - peak));
    if (d >= cfg.beam_rolloff) {
        return floor_amp;
    }
    const double lobe = 0.5 * (1.0 + std::cos(kPi * d / cfg.beam_rolloff));
    return floor_amp + (1.0 - floor_amp) * lobe;
}

GroundTruth draw_ground_truth(const ScenarioConfig& cfg, Rng& rng) {
    const int num_bs = cfg.num_bs;
    const int num_frames = cfg.num_frames;
    GroundTruth truth;
    truth.omegas.resize(static_cast<std::size_t>(num_bs));
    truth.mus.resize(static_cast<std::size_t>(num_bs));
    truth.delays.resize(static_cast<std::size_t>(num_bs));
    truth.alphas.resize(num_bs, num_frames);

    std::uniform_real_distribution<double> cfo(cfg.cfo_min, cfg.cfo_max);
    std::uniform_int_distribution<int> delay(0, cfg.delay_max);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    std::uniform_int_distribution<int> peak_frame(0, num_frames - 1);

    for (int k = 0; k < num_bs; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        truth.omegas[ku] = cfg.cfo_min == cfg.cfo_max ? cfg.cfo_min : cfo(rng);
        truth.mus[ku] = cfg.preambles[ku].mu;
        truth.delays[ku] = cfg.delays.empty() ? delay(rng) : cfg.delays[ku];
    }
    for (int k = 0; k < num_bs; ++k) {
        if (cfg.beam_profile == BeamProfile::FlatRayleigh) {
            for (int p = 0; p < num_frames; ++p) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                truth.alphas(k, p) = cd{re, im};
            }
        } else {
            const int peak = peak_frame(rng);
            for (int p = 0; p < num_frames; ++p) {
                truth.alphas(k, p) = std::polar(beam_gain(cfg, p, peak), phase(rng));
            }
        }
    }
    scale_target_to_sinr(truth, cfg, cfg.target_sinr_db);
    return truth;
}

namespace {

double burst_energy(const GroundTruth& truth, const ScenarioConfig& cfg, int k) {
    const double n = cfg.seq_len;
    const double mu = truth.mus[static_cast<std::size_t>(k)];
    return truth.alphas.row(k).squaredNorm() / static_cast<double>(cfg.num_frames) * n * (1.0 + mu * mu);
}

double interference_plus_noise(const GroundTruth& truth, const ScenarioConfig& cfg) {
    double den = cfg.frame_len * cfg.noise_var;
    for (int q = 1; q < cfg.num_bs; ++q) {
        den += burst_energy(truth, cfg, q);
    }
    return den;
}

}  // namespace

double calibrate_sinr(const GroundTruth& truth, const ScenarioConfig& cfg) {
    const double den = interference_plus_noise(truth, cfg);
    if (den <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(burst_energy(truth, cfg, 0) / den);
}

void scale_target_to_sinr(GroundTruth& truth, const ScenarioConfig& cfg, double sinr_db) {
    const double den = interference_plus_noise(truth, cfg);
    const double num = burst_energy(truth, cfg, 0);
    if (den <= 0.0 || num <= 0.0 || !std::isfinite(sinr_db)) {
        return;
    }
    const double wanted = std::pow(10.0, sinr_db / 10.0) * den;
    truth.alphas.row(0) *= std::sqrt(wanted / num);
}

cvec synthesize_clean(const ScenarioConfig& cfg, const GroundTruth& truth) {
    cvec y(static_cast<std::size_t>(cfg.burst_len()), cd{0.0, 0.0});
    std::vector<cvec> waves;
    waves.reserve(cfg.preambles.size());
    for (std::size_t k = 0; k < cfg.preambles.size(); ++k) {
        PreambleSpec spec = cfg.preambles[k];
        spec.mu = truth.mus[k];
        waves.push_back(assemble_preamble(spec));
    }
    kernels::accumulate_model_omp(y, waves, truth.delays, truth.omegas, truth.alphas, cfg.frame_len);
    return y;
}

void add_noise(cvec& samples, double noise_var, Rng& rng) {
    if (noise_var <= 0.0) {
        return;
    }
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var / 2.0));
    for (auto& s : samples) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        s += cd{re, im};
    }
}

ReceivedBurst synthesize_burst(const ScenarioConfig& cfg, const GroundTruth& truth, Rng& rng) {
    ReceivedBurst burst;
    burst.samples = synthesize_clean(cfg, truth);
    add_noise(burst.samples, cfg.noise_var, rng);
    burst.config = cfg;
    burst.truth = truth;
    return burst;
}

}  // namespace xcfo
