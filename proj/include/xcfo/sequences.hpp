#pragma once

#include <span>
#include <vector>

#include "xcfo/common.hpp"

namespace xcfo {

enum class SequenceFamily { ZadoffChu, Custom };

/// Unit-modulus training sequence of length N.
struct TrainingSequence {
    cvec samples;
    SequenceFamily family = SequenceFamily::Custom;
    int root = 0;  // ZC root index, 0 for custom sequences

    std::size_t size() const { return samples.size(); }
    const cd& operator[](std::size_t m) const { return samples[m]; }
};

/// c[m] = exp(-j*pi*root*m*(m+1)/length), m = 0..length-1.
/// Throws ParameterError unless length is odd, >= 3 and coprime with root.
TrainingSequence generate_zc(int root, int length);

/// Wraps an arbitrary unit-modulus vector. Throws ParameterError if any
/// sample deviates from unit magnitude by more than 1e-12 or length < 3.
TrainingSequence make_custom_sequence(cvec samples);

/// r_{a,b}(tau, omega) = (1/N) sum_{m=0}^{N-1} a[m] conj(b[m - tau]) exp(-j omega m),
/// with b treated as zero outside [0, N).
cd cross_correlate(const TrainingSequence& a, const TrainingSequence& b, int tau, double omega);

/// r(omega) = cross_correlate(seq, seq, 0, omega).
cd autocorrelation(const TrainingSequence& seq, double omega);

/// |sin(N omega / 2) / (N sin(omega / 2))|, the ZC autocorrelation magnitude.
double dirichlet_magnitude(int length, double omega);

/// Empirical sidelobe variance sigma_c^2: N times the sample variance of the
/// zero-CFO cross-correlations over all ordered pairs (a, b) and delays in
/// `taus`, skipping the matched case (a == b, tau == 0).
double estimate_sigma_c(std::span<const TrainingSequence> family, std::span<const int> taus);

/// ZC family with roots first_root .. first_root + count - 1 (roots sharing a
/// factor with `length` are skipped).
std::vector<TrainingSequence> zc_family(int length, int count, int first_root = 1);

}  // namespace xcfo
