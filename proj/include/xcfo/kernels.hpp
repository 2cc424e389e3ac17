#pragma once

// Data-parallel inner loops. Every kernel has a plain serial version that the
// tests use as the reference and an OpenMP version used by the library.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xcfo/common.hpp"
#include "xcfo/synthesis.hpp"

namespace xcfo::kernels {

/// exp(j * omega * (start + m)) for m = 0..len-1.
cvec phasor_ramp(double omega, long start, int len);

// out[m] += sum_k sum_p alphas(k, p) * waveforms[k][m - p*frame_len - delays[k]] * exp(j omegas[k] m)
// Frames never overlap, so the OpenMP version splits the work over p.
void accumulate_model_serial(std::span<cd> out, const std::vector<cvec>& waveforms, std::span<const int> delays,
                             std::span<const double> omegas, const Eigen::MatrixXcd& alphas, int frame_len);
void accumulate_model_omp(std::span<cd> out, const std::vector<cvec>& waveforms, std::span<const int> delays,
                          std::span<const double> omegas, const Eigen::MatrixXcd& alphas, int frame_len);

// out[(k*P + p)*2 + i] = (1/N) sum_m y[delays[k] + p*frame_len + i*tau_c + m] * conj(c_{k,i}[m])
// Windows reaching past the end of y throw ParameterError.
void correlation_grid_serial(std::span<const cd> y, const std::vector<PreambleSpec>& preambles,
                             std::span<const int> delays, int num_frames, int frame_len, std::span<cd> out);
void correlation_grid_omp(std::span<const cd> y, const std::vector<PreambleSpec>& preambles,
                          std::span<const int> delays, int num_frames, int frame_len, std::span<cd> out);

/// Matched-filter inner product (1/N) sum_m y[start + m] conj(c[m]).
cd window_correlation(std::span<const cd> y, long start, const TrainingSequence& c);

}  // namespace xcfo::kernels
