#include "xcfo/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace xcfo {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError("config: key '" + key + "' has malformed value '" + raw + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + raw + "'");
}

template <typename T>
std::vector<T> parse_number_list(const std::string& key, const std::string& raw) {
    std::vector<T> out;
    for (const auto& item : split_list(raw)) out.push_back(parse_number<T>(key, item));
    return out;
}

using Handler = std::function<void(const std::string& key, const std::string& value)>;

struct ScenarioExtras {
    std::optional<std::vector<std::pair<int, int>>> roots;
    std::optional<std::vector<double>> mus;
    bool cfo_min_set = false;
    bool cfo_max_set = false;
};

std::map<std::string, Handler> scenario_keys(ScenarioConfig& c, ScenarioExtras& x) {
    return {
        {"num_bs", [&](auto& k, auto& v) { c.num_bs = parse_number<int>(k, v); }},
        {"num_frames", [&](auto& k, auto& v) { c.num_frames = parse_number<int>(k, v); }},
        {"seq_len", [&](auto& k, auto& v) { c.seq_len = parse_number<int>(k, v); }},
        {"frame_len", [&](auto& k, auto& v) { c.frame_len = parse_number<int>(k, v); }},
        {"tau0", [&](auto& k, auto& v) { c.tau0 = parse_number<int>(k, v); }},
        {"zc_roots",
         [&](auto& k, auto& v) {
             std::vector<std::pair<int, int>> pairs;
             for (const auto& item : split_list(v)) {
                 const auto colon = item.find(':');
                 if (colon == std::string::npos) {
                     throw ConfigError("config: zc_roots entries must look like 'root0:root1', got '" + item + "'");
                 }
                 pairs.emplace_back(parse_number<int>(k, item.substr(0, colon)),
                                    parse_number<int>(k, item.substr(colon + 1)));
             }
             x.roots = pairs;
         }},
        {"mus", [&](auto& k, auto& v) { x.mus = parse_number_list<double>(k, v); }},
        {"cfo_min",
         [&](auto& k, auto& v) {
             c.cfo_min = parse_number<double>(k, v);
             x.cfo_min_set = true;
         }},
        {"cfo_max",
         [&](auto& k, auto& v) {
             c.cfo_max = parse_number<double>(k, v);
             x.cfo_max_set = true;
         }},
        {"delays", [&](auto& k, auto& v) { c.delays = parse_number_list<int>(k, v); }},
        {"delay_max", [&](auto& k, auto& v) { c.delay_max = parse_number<int>(k, v); }},
        {"noise_var", [&](auto& k, auto& v) { c.noise_var = parse_number<double>(k, v); }},
        {"target_sinr_db", [&](auto& k, auto& v) { c.target_sinr_db = parse_number<double>(k, v); }},
        {"beam_profile",
         [&](auto&, auto& v) {
             const std::string s = trim(v);
             if (s == "flat_rayleigh") {
                 c.beam_profile = BeamProfile::FlatRayleigh;
             } else if (s == "dominant_beam") {
                 c.beam_profile = BeamProfile::DominantBeam;
             } else {
                 throw ConfigError("config: beam_profile must be flat_rayleigh or dominant_beam, got '" + s + "'");
             }
         }},
        {"beam_rolloff", [&](auto& k, auto& v) { c.beam_rolloff = parse_number<double>(k, v); }},
        {"beam_sidelobe_db", [&](auto& k, auto& v) { c.beam_sidelobe_db = parse_number<double>(k, v); }},
        {"seed", [&](auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
        {"extra_samples", [&](auto& k, auto& v) { c.extra_samples = parse_number<int>(k, v); }},
        {"sample_rate", [&](auto& k, auto& v) { c.sample_rate = parse_number<double>(k, v); }},
    };
}

std::map<std::string, Handler> sweep_keys(SweepSpec& s, bool& seed_set) {
    return {
        {"sinr_points_db", [&](auto& k, auto& v) { s.sinr_points_db = parse_number_list<double>(k, v); }},
        {"trials", [&](auto& k, auto& v) { s.trials = parse_number<int>(k, v); }},
        {"methods", [&](auto&, auto& v) { s.methods = split_list(v); }},
        {"seed",
         [&](auto& k, auto& v) {
             s.seed = parse_number<std::uint64_t>(k, v);
             seed_set = true;
         }},
        {"workers", [&](auto& k, auto& v) { s.workers = parse_number<int>(k, v); }},
        {"epsilon", [&](auto& k, auto& v) { s.joint.epsilon = parse_number<double>(k, v); }},
        {"max_iter", [&](auto& k, auto& v) { s.joint.max_iter = parse_number<int>(k, v); }},
        {"timing", [&](auto& k, auto& v) { s.timing = parse_bool(k, v); }},
    };
}

std::map<std::string, Handler> baseline_keys(CpWrapConfig& cp, SplitPooling& pooling) {
    return {
        {"n_fft", [&](auto& k, auto& v) { cp.n_fft = parse_number<int>(k, v); }},
        {"n_cp", [&](auto& k, auto& v) { cp.n_cp = parse_number<int>(k, v); }},
        {"autocorr_pooling",
         [&](auto&, auto& v) {
             const std::string s = trim(v);
             if (s == "product_sum") {
                 pooling = SplitPooling::ProductSum;
             } else if (s == "frame_average") {
                 pooling = SplitPooling::FrameAverage;
             } else {
                 throw ConfigError("config: autocorr_pooling must be product_sum or frame_average, got '" + s + "'");
             }
         }},
    };
}

void apply_section(const std::string& section, const pt::ptree& tree, const std::map<std::string, Handler>& keys) {
    for (const auto& [key, node] : tree) {
        const auto it = keys.find(key);
        if (it == keys.end()) {
            throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
        }
        it->second(key, node.data());
    }
}

}  // namespace

AppConfig parse_config_text(const std::string& text) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    AppConfig app;
    ScenarioConfig& c = app.scenario;
    ScenarioExtras extras;
    bool sweep_seed_set = false;
    const auto s_keys = scenario_keys(c, extras);
    const auto w_keys = sweep_keys(app.sweep, sweep_seed_set);
    const auto b_keys = baseline_keys(app.cp, app.sweep.autocorr_pooling);

    for (const auto& [name, section] : tree) {
        if (section.empty() && !section.data().empty()) {
            throw ConfigError("config: key '" + name + "' appears outside any section");
        }
        if (name == "scenario") {
            apply_section(name, section, s_keys);
        } else if (name == "sweep") {
            apply_section(name, section, w_keys);
        } else if (name == "baselines") {
            apply_section(name, section, b_keys);
        } else {
            throw ConfigError("config: unknown section [" + name + "]");
        }
    }

    if (c.num_bs < 1 || c.seq_len < 3) {
        throw ConfigError("config: num_bs must be >= 1 and seq_len >= 3");
    }
    const auto roots = extras.roots.value_or(default_root_pairs(c.num_bs));
    const auto mus = extras.mus.value_or(std::vector<double>(static_cast<std::size_t>(c.num_bs), 1.0));
    assign_zc_preambles(c, roots, mus);
    const double default_range = 0.8 * kPi / c.tau_c();
    if (!extras.cfo_min_set) c.cfo_min = -default_range;
    if (!extras.cfo_max_set) c.cfo_max = default_range;
    c.validate();

    app.cp.validate();
    if (!sweep_seed_set) app.sweep.seed = c.seed;
    app.sweep.base_config = c;
    app.sweep.cp = app.cp;
    app.sweep.validate();
    return app;
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string format_config(const AppConfig& app) {
    const ScenarioConfig& c = app.scenario;
    auto join = [](const auto& values, auto fmt) {
        std::string out;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out += ", ";
            out += fmt(values[i]);
        }
        return out;
    };
    std::ostringstream os;
    os << "[scenario]\n"
       << "num_bs = " << c.num_bs << "\nnum_frames = " << c.num_frames << "\nseq_len = " << c.seq_len
       << "\nframe_len = " << c.frame_len << "\ntau0 = " << c.tau0 << '\n';
    std::vector<std::string> roots;
    std::vector<double> mus;
    for (const auto& pre : c.preambles) {
        if (pre.seq0.family != SequenceFamily::ZadoffChu || pre.seq1.family != SequenceFamily::ZadoffChu) {
            throw ParameterError("format_config: only Zadoff-Chu preambles can be written as config");
        }
        roots.push_back(std::to_string(pre.seq0.root) + ":" + std::to_string(pre.seq1.root));
        mus.push_back(pre.mu);
    }
    os << "zc_roots = " << join(roots, [](const std::string& s) { return s; }) << '\n'
       << "mus = " << join(mus, format_double) << '\n'
       << "cfo_min = " << format_double(c.cfo_min) << "\ncfo_max = " << format_double(c.cfo_max) << '\n';
    if (!c.delays.empty()) os << "delays = " << join(c.delays, [](int d) { return std::to_string(d); }) << '\n';
    os << "delay_max = " << c.delay_max << "\nnoise_var = " << format_double(c.noise_var)
       << "\ntarget_sinr_db = " << format_double(c.target_sinr_db) << "\nbeam_profile = "
       << (c.beam_profile == BeamProfile::FlatRayleigh ? "flat_rayleigh" : "dominant_beam")
       << "\nbeam_rolloff = " << format_double(c.beam_rolloff)
       << "\nbeam_sidelobe_db = " << format_double(c.beam_sidelobe_db) << "\nseed = " << c.seed
       << "\nextra_samples = " << c.extra_samples << '\n';
    if (c.sample_rate) os << "sample_rate = " << format_double(*c.sample_rate) << '\n';

    const SweepSpec& s = app.sweep;
    os << "\n[sweep]\nsinr_points_db = " << join(s.sinr_points_db, format_double) << "\ntrials = " << s.trials
       << "\nmethods = " << join(s.methods, [](const std::string& m) { return m; }) << "\nseed = " << s.seed
       << "\nworkers = " << s.workers << "\nepsilon = " << format_double(s.joint.epsilon)
       << "\nmax_iter = " << s.joint.max_iter << "\ntiming = " << (s.timing ? "true" : "false") << '\n';
    os << "\n[baselines]\nn_fft = " << app.cp.n_fft << "\nn_cp = " << app.cp.n_cp << "\nautocorr_pooling = "
       << (s.autocorr_pooling == SplitPooling::ProductSum ? "product_sum" : "frame_average") << '\n';
    return os.str();
}

}  // namespace xcfo
