#include "xcfo/bounds.hpp"

#include <array>
#include <cmath>

namespace xcfo {

std::pair<double, double> aggregate_sinr(std::span<const cd> alphas_k, double mu_k, std::span<const double> noise_vars) {
    if (noise_vars.size() != 2 * alphas_k.size()) {
        throw ParameterError("aggregate_sinr: need 2P noise variances");
    }
    double g0 = 0.0;
    double g1 = 0.0;
    for (std::size_t p = 0; p < alphas_k.size(); ++p) {
        if (!(noise_vars[2 * p] > 0.0) || !(noise_vars[2 * p + 1] > 0.0)) {
            throw ParameterError("aggregate_sinr: noise variances must be positive");
        }
        g0 += std::norm(alphas_k[p]) / noise_vars[2 * p];
        g1 += std::norm(mu_k * alphas_k[p]) / noise_vars[2 * p + 1];
    }
    return {g0, g1};
}

CrlbReport crlb_cfo(double gamma0, double gamma1, double r_mag, int tau_c) {
    if (!(gamma0 > 0.0) || !(gamma1 > 0.0) || !(r_mag > 0.0) || tau_c <= 0) {
        throw ParameterError("crlb_cfo: gamma0, gamma1, r_mag and tau_c must be positive");
    }
    CrlbReport rep;
    rep.gamma0 = gamma0;
    rep.gamma1 = gamma1;
    rep.r_mag = r_mag;
    rep.tau_c = tau_c;
    const double tc = static_cast<double>(tau_c);
    rep.bound = (1.0 / gamma0 + 1.0 / gamma1) / (2.0 * tc * tc * r_mag * r_mag);
    return rep;
}

cd CorrelationModel::mean(int p, int i, double omega, double phi) const {
    cd m = alphas[static_cast<std::size_t>(p)] * std::polar(1.0, phi) * std::conj(autocorrelation(seq, omega));
    if (i == 1) {
        m *= mu * std::polar(1.0, omega * tau_c);
    }
    return m;
}

namespace {

// Fisher matrix entries (I_ww, I_wp, I_pp) from derivative estimates of the mean.
std::array<double, 3> fisher_entries(const CorrelationModel& model, double omega, double step, bool central) {
    std::array<double, 3> f{0.0, 0.0, 0.0};
    const int num_frames = static_cast<int>(model.alphas.size());
    for (int p = 0; p < num_frames; ++p) {
        for (int i = 0; i < 2; ++i) {
            const cd base = model.mean(p, i, omega, 0.0);
            cd d_omega;
            cd d_phi;
            if (central) {
                d_omega = (model.mean(p, i, omega + step, 0.0) - model.mean(p, i, omega - step, 0.0)) / (2.0 * step);
                d_phi = (model.mean(p, i, omega, step) - model.mean(p, i, omega, -step)) / (2.0 * step);
            } else {
                d_omega = (model.mean(p, i, omega + step, 0.0) - base) / step;
                d_phi = (model.mean(p, i, omega, step) - base) / step;
            }
            const double w = 2.0 / model.noise_vars[static_cast<std::size_t>(2 * p + i)];
            f[0] += w * std::norm(d_omega);
            f[1] += w * (std::conj(d_omega) * d_phi).real();
            f[2] += w * std::norm(d_phi);
        }
    }
    return f;
}

double profiled_bound(const std::array<double, 3>& f) {
    const double info = f[0] - f[1] * f[1] / f[2];
    if (!(info > 0.0)) {
        throw DegenerateError("fisher_numeric: singular Fisher information");
    }
    return 1.0 / info;
}

}  // namespace

double fisher_numeric(const CorrelationModel& model, double omega, double step) {
    if (model.noise_vars.size() != 2 * model.alphas.size()) {
        throw ParameterError("fisher_numeric: need 2P noise variances");
    }
    if (!(step > 0.0)) {
        throw ParameterError("fisher_numeric: step must be positive");
    }
    const double central = profiled_bound(fisher_entries(model, omega, step, true));
    const double forward = profiled_bound(fisher_entries(model, omega, step, false));
    if (std::abs(forward - central) > 0.01 * central) {
        throw DegenerateError("fisher_numeric: forward and central differences disagree by more than 1%");
    }
    return central;
}

}  // namespace xcfo
