#pragma once

#include <string>

#include "xcfo/baselines.hpp"
#include "xcfo/harness.hpp"
#include "xcfo/synthesis.hpp"

namespace xcfo {

/// Parsed configuration file: [scenario], [sweep] and [baselines] sections.
struct AppConfig {
    ScenarioConfig scenario = default_scenario();
    SweepSpec sweep;  // sweep.base_config and sweep.cp mirror the other two sections
    CpWrapConfig cp;
};

/// Parses INI text. Unknown sections, unknown keys, duplicate keys and
/// malformed values throw ConfigError. Omitted keys keep their defaults; the
/// CFO range defaults to +-0.8 pi / tau_c of the configured preamble shape.
AppConfig parse_config_text(const std::string& text);

/// Reads and parses a file; an unreadable file is an IoError.
AppConfig load_config(const std::string& path);

/// Writes every key of `cfg` back as INI text that parse_config_text accepts.
std::string format_config(const AppConfig& cfg);

}  // namespace xcfo
