#pragma once

#include <span>
#include <utility>
#include <vector>

#include "xcfo/common.hpp"
#include "xcfo/sequences.hpp"

namespace xcfo {

struct CrlbReport {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double bound = 0.0;  // rad^2 / sample^2
    double r_mag = 0.0;  // |r_k(omega_k)|
    int tau_c = 0;
};

/// Gamma_0 = sum_p |alpha_p|^2 / var_{p,0},  Gamma_1 = sum_p |mu alpha_p|^2 / var_{p,1}.
/// `noise_vars` holds 2P entries ordered (p, i).
std::pair<double, double> aggregate_sinr(std::span<const cd> alphas_k, double mu_k, std::span<const double> noise_vars);

/// (1/Gamma_0 + 1/Gamma_1) / (2 tau_c^2 r_mag^2). Throws ParameterError on nonpositive inputs.
CrlbReport crlb_cfo(double gamma0, double gamma1, double r_mag, int tau_c);

/// Mean model of one BS's correlations:
///   mean_{p,i}(omega, phi) = alpha_p e^{j phi} g(omega) (mu e^{j omega tau_c})^i,
/// where g(omega) = conj(autocorrelation(seq, omega)) and phi is a common carrier phase.
struct CorrelationModel {
    std::vector<cd> alphas;
    double mu = 1.0;
    std::vector<double> noise_vars;  // 2P entries, (p, i)
    TrainingSequence seq;
    int tau_c = 0;

    cd mean(int p, int i, double omega, double phi) const;
};

/// Numeric CRLB for omega from central-difference Fisher information of the
/// mean model, with the common carrier phase profiled out:
///   bound = 1 / (I_ww - I_wp^2 / I_pp).
/// Throws DegenerateError when forward and central differences disagree by more than 1%.
double fisher_numeric(const CorrelationModel& model, double omega, double step = 1e-5);

}  // namespace xcfo
