#pragma once

#include <string>

#include "xcfo/synthesis.hpp"

namespace xcfo {

// Burst files: `path` holds little-endian interleaved float64 (re, im) pairs,
// `path + ".json"` holds the scenario, the sample count and, when known, the
// ground truth. All failures surface as IoError naming the offending file.

std::string sidecar_path(const std::string& data_path);

void write_burst(const ReceivedBurst& burst, const std::string& data_path);

/// Reads samples and sidecar back. Sequences are rebuilt from ZC roots or from
/// the stored custom samples; the loaded config is validated.
ReceivedBurst read_burst(const std::string& data_path);

/// Raw sample I/O without a sidecar (externally captured IQ).
void write_samples_cf64le(const cvec& samples, const std::string& path);
cvec read_samples_cf64le(const std::string& path);

}  // namespace xcfo
