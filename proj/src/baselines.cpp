#include "xcfo/baselines.hpp"

#include <cmath>
#include <string>

#include "xcfo/kernels.hpp"

namespace xcfo {

void CpWrapConfig::validate() const {
    if (n_fft <= 0 || n_cp <= 0 || n_cp >= n_fft) {
        throw ConfigError("baselines: need 0 < n_cp < n_fft");
    }
}

namespace {

cvec cp_symbol(const TrainingSequence& c, const CpWrapConfig& cp, double scale) {
    const std::size_t n = c.size();
    cvec body(static_cast<std::size_t>(cp.n_fft));
    for (std::size_t m = 0; m < body.size(); ++m) {
        body[m] = scale * c.samples[m % n];
    }
    cvec sym(body.end() - cp.n_cp, body.end());
    sym.insert(sym.end(), body.begin(), body.end());
    return sym;
}

}  // namespace

cvec cp_wrap_preamble(const PreambleSpec& spec, const CpWrapConfig& cp) {
    spec.validate();
    cp.validate();
    cvec out = cp_symbol(spec.seq0, cp, 1.0);
    out.insert(out.end(), static_cast<std::size_t>(spec.tau0), cd{0.0, 0.0});
    const cvec s1 = cp_symbol(spec.seq1, cp, spec.mu);
    out.insert(out.end(), s1.begin(), s1.end());
    return out;
}

ReceivedBurst synthesize_cp_burst(const ScenarioConfig& cfg, const GroundTruth& truth, const CpWrapConfig& cp,
                                  Rng& rng) {
    cp.validate();
    const int wrapped_len = 2 * cp.symbol_len() + cfg.tau0;
    int max_delay = 0;
    for (int d : truth.delays) max_delay = std::max(max_delay, d);
    if (wrapped_len + max_delay > cfg.frame_len) {
        throw ConfigError("baselines: CP-wrapped preamble (" + std::to_string(wrapped_len) +
                          " samples) plus delay does not fit in frame_len " + std::to_string(cfg.frame_len));
    }
    std::vector<cvec> waves;
    for (std::size_t k = 0; k < cfg.preambles.size(); ++k) {
        PreambleSpec spec = cfg.preambles[k];
        spec.mu = truth.mus[k];
        waves.push_back(cp_wrap_preamble(spec, cp));
    }
    ReceivedBurst burst;
    burst.samples.assign(static_cast<std::size_t>(cfg.burst_len()), cd{0.0, 0.0});
    kernels::accumulate_model_omp(burst.samples, waves, truth.delays, truth.omegas, truth.alphas, cfg.frame_len);
    add_noise(burst.samples, cfg.noise_var, rng);
    burst.config = cfg;
    burst.truth = truth;
    return burst;
}

double cp_blind_cfo(std::span<const cd> y, const ScenarioConfig& cfg, const CpWrapConfig& cp, int tau_k) {
    cp.validate();
    cd acc{0.0, 0.0};
    for (int p = 0; p < cfg.num_frames; ++p) {
        const long sym0 = static_cast<long>(p) * cfg.frame_len + tau_k;
        const long sym1 = sym0 + cp.symbol_len() + cfg.tau0;
        for (long start : {sym0, sym1}) {
            if (start < 0 || static_cast<std::size_t>(start + cp.symbol_len()) > y.size()) {
                throw ParameterError("cp_blind_cfo: symbol outside burst");
            }
            for (int m = 0; m < cp.n_cp; ++m) {
                const auto idx = static_cast<std::size_t>(start + m);
                acc += std::conj(y[idx]) * y[idx + static_cast<std::size_t>(cp.n_fft)];
            }
        }
    }
    if (std::abs(acc) < kDegenerateMagnitude) {
        throw DegenerateError("cp_blind_cfo: CP correlation magnitude below 1e-15");
    }
    return std::arg(acc) / static_cast<double>(cp.n_fft);
}

HalfCorrelations half_correlations(std::span<const cd> y, const TrainingSequence& c, long start) {
    const std::size_t n = c.size();
    const std::size_t half = n / 2;
    const std::size_t late_off = n - half;  // skips the middle sample when n is odd
    if (start < 0 || static_cast<std::size_t>(start) + n > y.size()) {
        throw ParameterError("autocorr_split: window outside burst");
    }
    HalfCorrelations h;
    h.baseline = static_cast<int>(late_off);
    for (std::size_t m = 0; m < half; ++m) {
        h.early += y[static_cast<std::size_t>(start) + m] * std::conj(c.samples[m]);
        h.late += y[static_cast<std::size_t>(start) + late_off + m] * std::conj(c.samples[late_off + m]);
    }
    h.early /= static_cast<double>(half);
    h.late /= static_cast<double>(half);
    return h;
}

namespace {

double split_angle(cd product, int baseline) {
    if (std::abs(product) < kDegenerateMagnitude) {
        throw DegenerateError("autocorr_split: correlation magnitude below 1e-15");
    }
    return std::arg(product) / static_cast<double>(baseline);
}

}  // namespace

double autocorr_split_cfo(const ReceivedBurst& burst, int k, int p, int i, int tau_k) {
    const auto& cfg = burst.config;
    const auto& pre = cfg.preambles.at(static_cast<std::size_t>(k));
    const long start = static_cast<long>(tau_k) + static_cast<long>(p) * cfg.frame_len + i * pre.tau_c();
    const auto h = half_correlations(burst.samples, i == 0 ? pre.seq0 : pre.seq1, start);
    return split_angle(h.late * std::conj(h.early), h.baseline);
}

double autocorr_split_burst(std::span<const cd> y, const PreambleSpec& pre, int tau_k, int num_frames,
                            int frame_len, SplitPooling pooling) {
    cd product{0.0, 0.0};
    int baseline = 1;
    for (int i = 0; i < 2; ++i) {
        cd early{0.0, 0.0};
        cd late{0.0, 0.0};
        for (int p = 0; p < num_frames; ++p) {
            const long start = static_cast<long>(tau_k) + static_cast<long>(p) * frame_len + i * pre.tau_c();
            const auto h = half_correlations(y, i == 0 ? pre.seq0 : pre.seq1, start);
            baseline = h.baseline;
            if (pooling == SplitPooling::ProductSum) {
                product += h.late * std::conj(h.early);
            } else {
                early += h.early;
                late += h.late;
            }
        }
        if (pooling == SplitPooling::FrameAverage) {
            product += late * std::conj(early);
        }
    }
    return split_angle(product, baseline);
}

double weighted_average_cfo(std::span<const double> per_frame_estimates, std::span<const double> weights) {
    if (per_frame_estimates.size() != weights.size()) {
        throw ParameterError("weighted_average_cfo: estimates and weights differ in length");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t p = 0; p < weights.size(); ++p) {
        if (weights[p] < 0.0) {
            throw ParameterError("weighted_average_cfo: negative weight");
        }
        num += weights[p] * per_frame_estimates[p];
        den += weights[p];
    }
    if (!(den > 0.0)) {
        throw ParameterError("weighted_average_cfo: all weights are zero");
    }
    return num / den;
}

}  // namespace xcfo
