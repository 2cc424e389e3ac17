#include "xcfo/kernels.hpp"

#include <string>

namespace xcfo::kernels {

cvec phasor_ramp(double omega, long start, int len) {
    cvec out(static_cast<std::size_t>(len));
    for (int m = 0; m < len; ++m) {
        out[static_cast<std::size_t>(m)] = std::polar(1.0, omega * static_cast<double>(start + m));
    }
    return out;
}

namespace {

// Adds one (k, p) term. The phase is split into a per-frame constant times a
// short ramp so that only len + 1 sin/cos evaluations are needed.
void add_term(std::span<cd> out, const cvec& wave, const cvec& ramp, long start, double omega, cd alpha) {
    if (alpha == cd{0.0, 0.0}) {
        return;
    }
    const cd head = alpha * std::polar(1.0, omega * static_cast<double>(start));
    const long len = static_cast<long>(wave.size());
    const long stop = std::min<long>(len, static_cast<long>(out.size()) - start);
    for (long m = 0; m < stop; ++m) {
        out[static_cast<std::size_t>(start + m)] += head * wave[static_cast<std::size_t>(m)] * ramp[static_cast<std::size_t>(m)];
    }
}

std::vector<cvec> local_ramps(const std::vector<cvec>& waveforms, std::span<const double> omegas) {
    std::vector<cvec> ramps(waveforms.size());
    for (std::size_t k = 0; k < waveforms.size(); ++k) {
        ramps[k] = phasor_ramp(omegas[k], 0, static_cast<int>(waveforms[k].size()));
    }
    return ramps;
}

void check_window(std::size_t y_len, long start, std::size_t n) {
    if (start < 0 || static_cast<std::size_t>(start) + n > y_len) {
        throw ParameterError("correlation window [" + std::to_string(start) + ", " +
                             std::to_string(start + static_cast<long>(n)) + ") outside burst of length " +
                             std::to_string(y_len));
    }
}

}  // namespace

void accumulate_model_serial(std::span<cd> out, const std::vector<cvec>& waveforms, std::span<const int> delays,
                             std::span<const double> omegas, const Eigen::MatrixXcd& alphas, int frame_len) {
    const auto ramps = local_ramps(waveforms, omegas);
    for (Eigen::Index p = 0; p < alphas.cols(); ++p) {
        for (std::size_t k = 0; k < waveforms.size(); ++k) {
            const long start = static_cast<long>(p) * frame_len + delays[k];
            add_term(out, waveforms[k], ramps[k], start, omegas[k], alphas(static_cast<Eigen::Index>(k), p));
        }
    }
}

void accumulate_model_omp(std::span<cd> out, const std::vector<cvec>& waveforms, std::span<const int> delays,
                          std::span<const double> omegas, const Eigen::MatrixXcd& alphas, int frame_len) {
    const auto ramps = local_ramps(waveforms, omegas);
    const long num_frames = static_cast<long>(alphas.cols());
#pragma omp parallel for schedule(static)
    for (long p = 0; p < num_frames; ++p) {
        for (std::size_t k = 0; k < waveforms.size(); ++k) {
            const long start = p * frame_len + delays[k];
            add_term(out, waveforms[k], ramps[k], start, omegas[k], alphas(static_cast<Eigen::Index>(k), p));
        }
    }
}

cd window_correlation(std::span<const cd> y, long start, const TrainingSequence& c) {
    check_window(y.size(), start, c.size());
    cd acc{0.0, 0.0};
    for (std::size_t m = 0; m < c.size(); ++m) {
        acc += y[static_cast<std::size_t>(start) + m] * std::conj(c.samples[m]);
    }
    return acc / static_cast<double>(c.size());
}

void correlation_grid_serial(std::span<const cd> y, const std::vector<PreambleSpec>& preambles,
                             std::span<const int> delays, int num_frames, int frame_len, std::span<cd> out) {
    const std::size_t num_bs = preambles.size();
    for (std::size_t k = 0; k < num_bs; ++k) {
        const auto& pre = preambles[k];
        for (int p = 0; p < num_frames; ++p) {
            for (int i = 0; i < 2; ++i) {
                const long start = static_cast<long>(delays[k]) + static_cast<long>(p) * frame_len + i * pre.tau_c();
                out[(k * num_frames + static_cast<std::size_t>(p)) * 2 + static_cast<std::size_t>(i)] =
                    window_correlation(y, start, i == 0 ? pre.seq0 : pre.seq1);
            }
        }
    }
}

void correlation_grid_omp(std::span<const cd> y, const std::vector<PreambleSpec>& preambles,
                          std::span<const int> delays, int num_frames, int frame_len, std::span<cd> out) {
    const long total = static_cast<long>(preambles.size()) * num_frames * 2;
    // Validate every window up front; exceptions must not escape the parallel region.
    for (std::size_t k = 0; k < preambles.size(); ++k) {
        const long last = static_cast<long>(delays[k]) + static_cast<long>(num_frames - 1) * frame_len +
                          preambles[k].tau_c();
        check_window(y.size(), delays[k], preambles[k].seq0.size());
        check_window(y.size(), last, preambles[k].seq1.size());
    }
#pragma omp parallel for schedule(static)
    for (long idx = 0; idx < total; ++idx) {
        const long i = idx % 2;
        const long p = (idx / 2) % num_frames;
        const std::size_t k = static_cast<std::size_t>(idx / 2 / num_frames);
        const auto& pre = preambles[k];
        const auto& c = i == 0 ? pre.seq0 : pre.seq1;
        const std::size_t start = static_cast<std::size_t>(delays[k] + p * frame_len + i * pre.tau_c());
        cd acc{0.0, 0.0};
        for (std::size_t m = 0; m < c.size(); ++m) {
            acc += y[start + m] * std::conj(c.samples[m]);
        }
        out[static_cast<std::size_t>(idx)] = acc / static_cast<double>(c.size());
    }
}

}  // namespace xcfo::kernels
