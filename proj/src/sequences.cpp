#include "xcfo/sequences.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace xcfo {

TrainingSequence generate_zc(int root, int length) {
    if (length < 3 || length % 2 == 0) {
        throw ParameterError("zc length must be odd and >= 3, got " + std::to_string(length));
    }
    if (root <= 0 || std::gcd(root, length) != 1) {
        throw ParameterError("zc root " + std::to_string(root) + " is not coprime with length " +
                             std::to_string(length));
    }
    TrainingSequence seq;
    seq.family = SequenceFamily::ZadoffChu;
    seq.root = root;
    seq.samples.resize(static_cast<std::size_t>(length));
    for (int m = 0; m < length; ++m) {
        // Reduce the quadratic phase modulo 2N in integers so the argument stays small.
        const long long q = (static_cast<long long>(root) * m * (m + 1)) % (2LL * length);
        seq.samples[static_cast<std::size_t>(m)] = std::polar(1.0, -kPi * static_cast<double>(q) / length);
    }
    return seq;
}

TrainingSequence make_custom_sequence(cvec samples) {
    if (samples.size() < 3) {
        throw ParameterError("training sequence must have at least 3 samples");
    }
    for (const auto& s : samples) {
        if (std::abs(std::abs(s) - 1.0) > 1e-12) {
            throw ParameterError("custom training sequence is not unit modulus");
        }
    }
    TrainingSequence seq;
    seq.samples = std::move(samples);
    seq.family = SequenceFamily::Custom;
    return seq;
}

cd cross_correlate(const TrainingSequence& a, const TrainingSequence& b, int tau, double omega) {
    const int n = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());
    cd acc{0.0, 0.0};
    const int lo = std::max(0, tau);
    const int hi = std::min(n, nb + tau);
    for (int m = lo; m < hi; ++m) {
        const cd term = a.samples[static_cast<std::size_t>(m)] * std::conj(b.samples[static_cast<std::size_t>(m - tau)]);
        acc += omega == 0.0 ? term : term * std::polar(1.0, -omega * m);
    }
    return acc / static_cast<double>(n);
}

cd autocorrelation(const TrainingSequence& seq, double omega) {
    return cross_correlate(seq, seq, 0, omega);
}

double dirichlet_magnitude(int length, double omega) {
    const double half = 0.5 * omega;
    if (std::abs(std::sin(half)) < 1e-300) {
        return 1.0;
    }
    return std::abs(std::sin(length * half) / (length * std::sin(half)));
}

double estimate_sigma_c(std::span<const TrainingSequence> family, std::span<const int> taus) {
    if (family.size() < 2) {
        throw ParameterError("estimate_sigma_c needs at least two sequences");
    }
    if (taus.empty()) {
        throw ParameterError("estimate_sigma_c needs at least one delay");
    }
    const double n = static_cast<double>(family.front().size());
    cd sum{0.0, 0.0};
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t a = 0; a < family.size(); ++a) {
        for (std::size_t b = 0; b < family.size(); ++b) {
            for (int tau : taus) {
                if (a == b && tau == 0) {
                    continue;
                }
                const cd r = cross_correlate(family[a], family[b], tau, 0.0);
                sum += r;
                sum_sq += std::norm(r);
                ++count;
            }
        }
    }
    if (count < 2) {
        throw ParameterError("estimate_sigma_c: not enough mismatched correlations");
    }
    const double cnt = static_cast<double>(count);
    const cd mean = sum / cnt;
    const double var = (sum_sq - cnt * std::norm(mean)) / (cnt - 1.0);
    return n * var;
}

std::vector<TrainingSequence> zc_family(int length, int count, int first_root) {
    std::vector<TrainingSequence> out;
    for (int root = first_root; static_cast<int>(out.size()) < count; ++root) {
        if (root >= length) {
            throw ParameterError("not enough roots coprime with " + std::to_string(length));
        }
        if (std::gcd(root, length) == 1) {
            out.push_back(generate_zc(root, length));
        }
    }
    return out;
}

}  // namespace xcfo
