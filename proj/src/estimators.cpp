#include "xcfo/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xcfo/kernels.hpp"

namespace xcfo {

cd CorrelationGrid::deramp(int k, int p, double omega) const {
    const double t = static_cast<double>(p) * frame_len + delays[static_cast<std::size_t>(k)];
    return std::polar(1.0, -omega * t);
}

cd correlation_statistic(const ReceivedBurst& burst, int k, int p, int i, int tau_k) {
    const auto& cfg = burst.config;
    if (k < 0 || k >= cfg.num_bs || p < 0 || p >= cfg.num_frames || (i != 0 && i != 1)) {
        throw ParameterError("correlation_statistic: index out of range");
    }
    const auto& pre = cfg.preambles[static_cast<std::size_t>(k)];
    const long start = static_cast<long>(tau_k) + static_cast<long>(p) * cfg.frame_len + i * pre.tau_c();
    return kernels::window_correlation(burst.samples, start, i == 0 ? pre.seq0 : pre.seq1);
}

CorrelationGrid compute_grid(std::span<const cd> y, const std::vector<PreambleSpec>& preambles,
                             std::span<const int> delays, int num_frames, int frame_len) {
    CorrelationGrid grid;
    grid.num_bs = static_cast<int>(preambles.size());
    grid.num_frames = num_frames;
    grid.frame_len = frame_len;
    grid.tau_c = preambles.empty() ? 0 : preambles.front().tau_c();
    grid.delays.assign(delays.begin(), delays.end());
    grid.values.resize(static_cast<std::size_t>(grid.num_bs) * static_cast<std::size_t>(num_frames) * 2);
    grid.noise_vars.assign(grid.values.size(), 1.0);
    kernels::correlation_grid_omp(y, preambles, delays, num_frames, frame_len, grid.values);
    return grid;
}

double noise_variance(std::span<const cd> alphas_others, double mu_k, int i, double sigma_c2, double sigma_n2, int n) {
    const double scale = i == 0 ? 1.0 : mu_k * mu_k;
    double interference = 0.0;
    for (const auto& a : alphas_others) {
        interference += scale * std::norm(a) * sigma_c2;
    }
    return (interference + sigma_n2) / static_cast<double>(n);
}

void assign_noise_vars(CorrelationGrid& grid, const Eigen::MatrixXcd& alphas, std::span<const double> mus,
                       double sigma_c2, double sigma_n2, int n) {
    std::vector<cd> others;
    others.reserve(static_cast<std::size_t>(grid.num_bs));
    for (int k = 0; k < grid.num_bs; ++k) {
        for (int p = 0; p < grid.num_frames; ++p) {
            others.clear();
            for (int q = 0; q < grid.num_bs; ++q) {
                if (q != k) {
                    others.push_back(alphas(q, p));
                }
            }
            for (int i = 0; i < 2; ++i) {
                double v = noise_variance(others, mus[static_cast<std::size_t>(k)], i, sigma_c2, sigma_n2, n);
                // Keep variances strictly positive even for a noiseless, interference-free model.
                grid.noise_vars[grid.index(k, p, i)] = std::max(v, 1e-300);
            }
        }
    }
}

cvec DesignMatrix::apply(const Eigen::MatrixXcd& alphas) const {
    cvec out(static_cast<std::size_t>(num_frames) * static_cast<std::size_t>(frame_len), cd{0.0, 0.0});
    for (int p = 0; p < num_frames; ++p) {
        const Eigen::VectorXcd seg = blocks[static_cast<std::size_t>(p)] * alphas.col(p);
        std::copy(seg.data(), seg.data() + seg.size(), out.begin() + static_cast<long>(p) * frame_len + row_lo);
    }
    return out;
}

Eigen::MatrixXcd DesignMatrix::assembled() const {
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(num_frames) * frame_len,
                                                   static_cast<Eigen::Index>(num_frames) * num_bs);
    for (int p = 0; p < num_frames; ++p) {
        full.block(static_cast<Eigen::Index>(p) * frame_len + row_lo, static_cast<Eigen::Index>(p) * num_bs,
                   row_hi - row_lo, num_bs) = blocks[static_cast<std::size_t>(p)];
    }
    return full;
}

DesignMatrix build_design_matrix(std::span<const int> delays, std::span<const double> omegas,
                                 std::span<const double> mus, const std::vector<PreambleSpec>& preambles,
                                 int frame_len, int num_frames, DesignPart part) {
    const int num_bs = static_cast<int>(preambles.size());
    if (static_cast<int>(delays.size()) != num_bs || static_cast<int>(omegas.size()) != num_bs ||
        static_cast<int>(mus.size()) != num_bs) {
        throw ParameterError("build_design_matrix: parameter vectors must all have length K");
    }
    DesignMatrix d;
    d.num_bs = num_bs;
    d.num_frames = num_frames;
    d.frame_len = frame_len;
    d.row_lo = frame_len;
    d.row_hi = 0;

    std::vector<cvec> waves(static_cast<std::size_t>(num_bs));
    std::vector<cvec> ramps(static_cast<std::size_t>(num_bs));
    for (int k = 0; k < num_bs; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        PreambleSpec spec = preambles[ku];
        spec.mu = mus[ku];
        cvec w = assemble_preamble(spec);
        const std::size_t n = spec.seq0.size();
        if (part == DesignPart::Seq0) {
            std::fill(w.begin() + static_cast<long>(n), w.end(), cd{0.0, 0.0});
        } else if (part == DesignPart::Seq1) {
            std::fill(w.begin(), w.begin() + spec.tau_c(), cd{0.0, 0.0});
            std::copy(spec.seq1.samples.begin(), spec.seq1.samples.end(), w.begin() + spec.tau_c());
        }
        if (delays[ku] < 0 || delays[ku] + static_cast<int>(w.size()) > frame_len) {
            throw ParameterError("build_design_matrix: preamble of BS " + std::to_string(k) + " leaves the frame");
        }
        d.row_lo = std::min(d.row_lo, delays[ku]);
        d.row_hi = std::max(d.row_hi, delays[ku] + static_cast<int>(w.size()));
        ramps[ku] = kernels::phasor_ramp(omegas[ku], delays[ku], static_cast<int>(w.size()));
        waves[ku] = std::move(w);
    }
    d.blocks.assign(static_cast<std::size_t>(num_frames), Eigen::MatrixXcd::Zero(d.row_hi - d.row_lo, num_bs));
    for (int p = 0; p < num_frames; ++p) {
        auto& block = d.blocks[static_cast<std::size_t>(p)];
        for (int k = 0; k < num_bs; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const cd frame_phase = std::polar(1.0, omegas[ku] * static_cast<double>(p) * frame_len);
            for (std::size_t m = 0; m < waves[ku].size(); ++m) {
                block(delays[ku] - d.row_lo + static_cast<int>(m), k) = frame_phase * ramps[ku][m] * waves[ku][m];
            }
        }
    }
    return d;
}

ChannelEstimate estimate_channel(std::span<const cd> y, const DesignMatrix& design) {
    const std::size_t needed = static_cast<std::size_t>(design.num_frames) * static_cast<std::size_t>(design.frame_len);
    if (y.size() < needed) {
        throw ParameterError("estimate_channel: burst shorter than P * N_f");
    }
    ChannelEstimate est;
    est.alphas = Eigen::MatrixXcd::Zero(design.num_bs, design.num_frames);
    const int rows = design.row_hi - design.row_lo;
    for (int p = 0; p < design.num_frames; ++p) {
        const auto& a = design.blocks[static_cast<std::size_t>(p)];
        const Eigen::Map<const Eigen::VectorXcd> b(y.data() + static_cast<long>(p) * design.frame_len + design.row_lo,
                                                   rows);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
        qr.setThreshold(1e-10);
        if (qr.rank() < design.num_bs) {
            throw RankError("estimate_channel: design block of frame " + std::to_string(p) + " has rank " +
                            std::to_string(qr.rank()) + " < K = " + std::to_string(design.num_bs));
        }
        const auto r_diag = qr.matrixR().diagonal().cwiseAbs();
        const double cond = r_diag.maxCoeff() / r_diag.minCoeff();
        if (cond > 1e8) {
            const Eigen::MatrixXcd gram = a.adjoint() * a;
            const double lambda = 1e-12 * gram.diagonal().real().maxCoeff();
            const Eigen::MatrixXcd reg = gram + lambda * Eigen::MatrixXcd::Identity(design.num_bs, design.num_bs);
            est.alphas.col(p) = reg.ldlt().solve(a.adjoint() * b);
            est.regularized_frames.push_back(p);
        } else {
            est.alphas.col(p) = qr.solve(b);
        }
    }
    return est;
}

MuEstimate estimate_mu(std::span<const cd> y, const DesignMatrix& seq0_design, const DesignMatrix& seq1_design,
                       const Eigen::MatrixXcd& alphas, std::span<const double> prior_mus, double min_energy) {
    const int num_bs = seq0_design.num_bs;
    const int num_frames = seq0_design.num_frames;
    MuEstimate est;
    est.mus.assign(prior_mus.begin(), prior_mus.end());
    est.clamped.assign(static_cast<std::size_t>(num_bs), false);
    est.skipped.assign(static_cast<std::size_t>(num_bs), false);

    std::vector<int> active;
    for (int k = 0; k < num_bs; ++k) {
        if (alphas.row(k).squaredNorm() < min_energy) {
            est.skipped[static_cast<std::size_t>(k)] = true;
        } else {
            active.push_back(k);
        }
    }
    if (active.empty()) {
        return est;
    }
    if (seq0_design.row_lo != seq1_design.row_lo || seq0_design.row_hi != seq1_design.row_hi) {
        throw ParameterError("estimate_mu: seq0 and seq1 designs must share their row support");
    }
    const int lo = seq0_design.row_lo;
    const int rows = seq0_design.row_hi - lo;
    const Eigen::Index total = static_cast<Eigen::Index>(rows) * num_frames;
    const auto n_active = static_cast<Eigen::Index>(active.size());

    // mu is real, so solve the stacked real system [Re B; Im B] mu = [Re r; Im r].
    Eigen::MatrixXd b_real(2 * total, n_active);
    Eigen::VectorXd r_real(2 * total);
    for (int p = 0; p < num_frames; ++p) {
        const auto& a0 = seq0_design.blocks[static_cast<std::size_t>(p)];
        const auto& a1 = seq1_design.blocks[static_cast<std::size_t>(p)];
        const Eigen::VectorXcd model0 = a0 * alphas.col(p);
        const Eigen::Index off = static_cast<Eigen::Index>(p) * rows;
        for (int m = 0; m < rows; ++m) {
            const cd resid = y[static_cast<std::size_t>(p) * static_cast<std::size_t>(seq0_design.frame_len) +
                               static_cast<std::size_t>(lo + m)] -
                             model0(m);
            r_real(off + m) = resid.real();
            r_real(total + off + m) = resid.imag();
            for (Eigen::Index c = 0; c < n_active; ++c) {
                const int k = active[static_cast<std::size_t>(c)];
                const cd v = a1(m, k) * alphas(k, p);
                b_real(off + m, c) = v.real();
                b_real(total + off + m, c) = v.imag();
            }
        }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b_real);
    qr.setThreshold(1e-10);
    if (qr.rank() < n_active) {
        throw RankError("estimate_mu: scaling design B has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(n_active));
    }
    const Eigen::VectorXd mu = qr.solve(r_real);
    for (Eigen::Index c = 0; c < n_active; ++c) {
        const auto k = static_cast<std::size_t>(active[static_cast<std::size_t>(c)]);
        if (mu(c) < 1e-6) {
            est.mus[k] = 1e-6;
            est.clamped[k] = true;
        } else {
            est.mus[k] = mu(c);
        }
    }
    return est;
}

namespace {

double phase_baseline_estimate(cd late, cd early, int baseline, const char* who) {
    if (std::abs(late) < kDegenerateMagnitude || std::abs(early) < kDegenerateMagnitude) {
        throw DegenerateError(std::string(who) + ": correlation magnitude below 1e-15");
    }
    return std::arg(late * std::conj(early)) / static_cast<double>(baseline);
}

}  // namespace

double separate_cfo(const CorrelationGrid& grid, int k, double mu_k) {
    if (grid.num_frames < 1) {
        throw ParameterError("separate_cfo needs at least one frame");
    }
    cd mean0{0.0, 0.0};
    cd mean1{0.0, 0.0};
    for (int p = 0; p < grid.num_frames; ++p) {
        mean0 += grid.value(k, p, 0);
        mean1 += grid.value(k, p, 1);
    }
    mean0 /= static_cast<double>(grid.num_frames);
    mean1 /= static_cast<double>(grid.num_frames);
    return phase_baseline_estimate(mean1 / mu_k, mean0, grid.tau_c, "separate_cfo");
}

double separate_cfo_frame(const CorrelationGrid& grid, int k, int p, double mu_k) {
    return phase_baseline_estimate(grid.value(k, p, 1) / mu_k, grid.value(k, p, 0), grid.tau_c, "separate_cfo");
}

double log_likelihood(const CorrelationGrid& grid, int k, double omega, std::span<const cd> alphas_k, double mu_k,
                      cd gain, double omega_ref) {
    const cd step = mu_k * std::polar(1.0, omega * grid.tau_c);
    double ll = 0.0;
    for (int p = 0; p < grid.num_frames; ++p) {
        const cd d = grid.deramp(k, p, omega_ref);
        cd model = alphas_k[static_cast<std::size_t>(p)] * gain;
        for (int i = 0; i < 2; ++i) {
            ll -= std::norm(grid.value(k, p, i) * d - model) / grid.noise_var(k, p, i);
            model *= step;
        }
    }
    return ll;
}

double cross_preamble_cfo(const CorrelationGrid& grid, int k, std::span<const cd> alphas_k, double mu_k,
                          double omega_ref) {
    // Only relative weights matter; normalizing keeps floored variances from overflowing.
    double v_min = std::numeric_limits<double>::infinity();
    for (int p = 0; p < grid.num_frames; ++p) {
        v_min = std::min({v_min, grid.noise_var(k, p, 0), grid.noise_var(k, p, 1)});
    }
    cd psi0{0.0, 0.0};
    cd psi1{0.0, 0.0};
    for (int p = 0; p < grid.num_frames; ++p) {
        const cd w = std::conj(alphas_k[static_cast<std::size_t>(p)]) * grid.deramp(k, p, omega_ref);
        psi0 += w * grid.value(k, p, 0) * (v_min / grid.noise_var(k, p, 0));
        psi1 += w * mu_k * grid.value(k, p, 1) * (v_min / grid.noise_var(k, p, 1));
    }
    if (std::abs(psi0) < kDegenerateMagnitude || std::abs(psi1) < kDegenerateMagnitude) {
        throw DegenerateError("cross_preamble_cfo: |psi| below 1e-15 for BS " + std::to_string(k));
    }
    return std::arg(psi1 * std::conj(psi0)) / static_cast<double>(grid.tau_c);
}

}  // namespace xcfo
