#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xcfo/common.hpp"
#include "xcfo/synthesis.hpp"

namespace xcfo {

// Sign convention: received samples rotate as exp(+j omega m). Under this
// convention the matched statistic of BS k in frame p has mean
//   alpha_k^p * g(omega) * exp(j omega (p N_f + tau_k)) * (mu_k exp(j omega tau_c))^i
// with g(omega) = conj(autocorrelation(c, omega)).

/// Per-(BS, frame, sequence) matched correlations and their interference-plus-noise variances.
struct CorrelationGrid {
    int num_bs = 0;
    int num_frames = 0;
    int frame_len = 0;
    int tau_c = 0;
    std::vector<int> delays;
    std::vector<cd> values;        // (k * P + p) * 2 + i
    std::vector<double> noise_vars;

    std::size_t index(int k, int p, int i) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(num_frames) + static_cast<std::size_t>(p)) * 2 +
               static_cast<std::size_t>(i);
    }
    cd value(int k, int p, int i) const { return values[index(k, p, i)]; }
    double noise_var(int k, int p, int i) const { return noise_vars[index(k, p, i)]; }
    /// exp(-j omega (p N_f + tau_k)): removes the absolute frame phase of BS k.
    cd deramp(int k, int p, double omega) const;
};

/// (1/N) sum_m y[m + p N_f + i tau_c + tau_k] conj(c_{k,i}[m]). Throws
/// ParameterError if the window leaves the burst.
cd correlation_statistic(const ReceivedBurst& burst, int k, int p, int i, int tau_k);

/// Correlations for every (k, p, i). noise_vars are initialised to 1.
CorrelationGrid compute_grid(std::span<const cd> y, const std::vector<PreambleSpec>& preambles,
                             std::span<const int> delays, int num_frames, int frame_len);

/// Interference-plus-noise variance of one correlation:
///   (sum_q |mu_k^i alpha_q|^2 sigma_c^2 + sigma_n^2) / N.
double noise_variance(std::span<const cd> alphas_others, double mu_k, int i, double sigma_c2, double sigma_n2, int n);

/// Fills grid.noise_vars from per-frame gains (K x P) via noise_variance.
void assign_noise_vars(CorrelationGrid& grid, const Eigen::MatrixXcd& alphas, std::span<const double> mus,
                       double sigma_c2, double sigma_n2, int n);

enum class DesignPart { Full, Seq0, Seq1 };

/// Block-diagonal design operator blkdiag(A^(0), ..., A^(P-1)), each frame
/// block N_f x K. Rows outside [row_lo, row_hi) are zero in every block, so
/// only the support rows are stored: blocks[p](r, k) is frame row row_lo + r.
struct DesignMatrix {
    int num_bs = 0;
    int num_frames = 0;
    int frame_len = 0;
    int row_lo = 0;
    int row_hi = 0;
    std::vector<Eigen::MatrixXcd> blocks;  // (row_hi - row_lo) x K each

    /// A * vec(alphas), length P * N_f.
    cvec apply(const Eigen::MatrixXcd& alphas) const;
    /// Dense PN_f x PK matrix; column p*K + k. Intended for small test instances.
    Eigen::MatrixXcd assembled() const;
};

/// Column (p, k) is the preamble of BS k delayed by tau_k and rotated by
/// exp(j omega_k m) with absolute sample index m = local row + p N_f.
/// Seq0 / Seq1 keep only the first or the unscaled second training sequence.
DesignMatrix build_design_matrix(std::span<const int> delays, std::span<const double> omegas,
                                 std::span<const double> mus, const std::vector<PreambleSpec>& preambles,
                                 int frame_len, int num_frames, DesignPart part = DesignPart::Full);

struct ChannelEstimate {
    Eigen::MatrixXcd alphas;           // K x P
    std::vector<int> regularized_frames;  // frames solved with the Tikhonov floor
};

/// Per-frame least squares alpha^(p) = pinv(A^(p)) y^(p). Throws RankError
/// naming the frame if a block loses column rank; blocks with condition
/// number above 1e8 are solved with a 1e-12 Tikhonov floor and reported.
ChannelEstimate estimate_channel(std::span<const cd> y, const DesignMatrix& design);

struct MuEstimate {
    std::vector<double> mus;
    std::vector<bool> clamped;  // estimate fell below 1e-6 and was clamped
    std::vector<bool> skipped;  // BS left out (negligible channel energy); prior kept
};

/// Least-squares mu from the residual y - A_0 alpha = B mu with
/// B = [A_1^(p) diag(alpha^(p))]_p. BSs whose channel energy is below
/// `min_energy` keep their prior value.
MuEstimate estimate_mu(std::span<const cd> y, const DesignMatrix& seq0_design, const DesignMatrix& seq1_design,
                       const Eigen::MatrixXcd& alphas, std::span<const double> prior_mus,
                       double min_energy = 1e-12);

/// Separate estimator: (1/tau_c) angle((mean_p r_{p,1} / mu) conj(mean_p r_{p,0})).
double separate_cfo(const CorrelationGrid& grid, int k, double mu_k);

/// Separate estimator restricted to one frame.
double separate_cfo_frame(const CorrelationGrid& grid, int k, int p, double mu_k);

/// Gaussian log-likelihood of BS k's correlations (up to a constant):
///   -sum_{p,i} |r_{p,i} e^{-j omega_ref (p N_f + tau_k)} - alpha_p gain (mu e^{j omega tau_c})^i|^2 / var_{p,i}
/// `gain` is the matched-correlation gain (conj of the autocorrelation under this sign convention).
double log_likelihood(const CorrelationGrid& grid, int k, double omega, std::span<const cd> alphas_k, double mu_k,
                      cd gain, double omega_ref = 0.0);

/// Cross-preamble ML estimator (1/tau_c) angle(psi_1 conj(psi_0)) with
///   psi_0 = sum_p conj(alpha_p) r_{p,0} / var_{p,0},  psi_1 = sum_p conj(alpha_p) mu r_{p,1} / var_{p,1},
/// after removing the frame phase implied by omega_ref.
double cross_preamble_cfo(const CorrelationGrid& grid, int k, std::span<const cd> alphas_k, double mu_k,
                          double omega_ref = 0.0);

}  // namespace xcfo
