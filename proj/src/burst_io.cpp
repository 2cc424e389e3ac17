#include "xcfo/burst_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace xcfo {

using nlohmann::json;

std::string sidecar_path(const std::string& data_path) {
    return data_path + ".json";
}

namespace {

void put_le(double v, char* out) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
        out[b] = static_cast<char>((bits >> (8 * b)) & 0xffU);
    }
}

double get_le(const char* in) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[b])) << (8 * b);
    }
    return std::bit_cast<double>(bits);
}

json sequence_json(const TrainingSequence& s) {
    if (s.family == SequenceFamily::ZadoffChu) {
        return json{{"family", "zc"}, {"root", s.root}};
    }
    json samples = json::array();
    for (const auto& v : s.samples) {
        samples.push_back({v.real(), v.imag()});
    }
    return json{{"family", "custom"}, {"samples", samples}};
}

TrainingSequence sequence_from_json(const json& j, int len) {
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "zc") {
        return generate_zc(j.at("root").get<int>(), len);
    }
    if (fam == "custom") {
        cvec samples;
        for (const auto& v : j.at("samples")) {
            samples.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
        }
        return make_custom_sequence(std::move(samples));
    }
    throw IoError("unknown sequence family '" + fam + "'");
}

const char* profile_name(BeamProfile b) {
    return b == BeamProfile::FlatRayleigh ? "flat_rayleigh" : "dominant_beam";
}

json config_json(const ScenarioConfig& cfg) {
    json pre = json::array();
    for (const auto& p : cfg.preambles) {
        pre.push_back({{"seq0", sequence_json(p.seq0)}, {"seq1", sequence_json(p.seq1)}, {"mu", p.mu}});
    }
    json j{{"num_bs", cfg.num_bs},
           {"num_frames", cfg.num_frames},
           {"seq_len", cfg.seq_len},
           {"frame_len", cfg.frame_len},
           {"tau0", cfg.tau0},
           {"preambles", pre},
           {"cfo_min", cfg.cfo_min},
           {"cfo_max", cfg.cfo_max},
           {"delays", cfg.delays},
           {"delay_max", cfg.delay_max},
           {"noise_var", cfg.noise_var},
           {"target_sinr_db", cfg.target_sinr_db},
           {"beam_profile", profile_name(cfg.beam_profile)},
           {"beam_rolloff", cfg.beam_rolloff},
           {"beam_sidelobe_db", cfg.beam_sidelobe_db},
           {"seed", cfg.seed},
           {"extra_samples", cfg.extra_samples}};
    if (cfg.sample_rate) {
        j["sample_rate"] = *cfg.sample_rate;
    }
    return j;
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig cfg;
    cfg.num_bs = j.at("num_bs").get<int>();
    cfg.num_frames = j.at("num_frames").get<int>();
    cfg.seq_len = j.at("seq_len").get<int>();
    cfg.frame_len = j.at("frame_len").get<int>();
    cfg.tau0 = j.at("tau0").get<int>();
    for (const auto& p : j.at("preambles")) {
        cfg.preambles.push_back(PreambleSpec{sequence_from_json(p.at("seq0"), cfg.seq_len),
                                             sequence_from_json(p.at("seq1"), cfg.seq_len), p.at("mu").get<double>(),
                                             cfg.tau0});
    }
    cfg.cfo_min = j.at("cfo_min").get<double>();
    cfg.cfo_max = j.at("cfo_max").get<double>();
    cfg.delays = j.at("delays").get<std::vector<int>>();
    cfg.delay_max = j.at("delay_max").get<int>();
    cfg.noise_var = j.at("noise_var").get<double>();
    cfg.target_sinr_db = j.at("target_sinr_db").get<double>();
    const std::string prof = j.at("beam_profile").get<std::string>();
    if (prof == "flat_rayleigh") {
        cfg.beam_profile = BeamProfile::FlatRayleigh;
    } else if (prof == "dominant_beam") {
        cfg.beam_profile = BeamProfile::DominantBeam;
    } else {
        throw IoError("unknown beam_profile '" + prof + "'");
    }
    cfg.beam_rolloff = j.at("beam_rolloff").get<double>();
    cfg.beam_sidelobe_db = j.at("beam_sidelobe_db").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.extra_samples = j.at("extra_samples").get<int>();
    if (j.contains("sample_rate")) {
        cfg.sample_rate = j.at("sample_rate").get<double>();
    }
    return cfg;
}

json truth_json(const GroundTruth& t) {
    json alphas = json::array();
    for (Eigen::Index k = 0; k < t.alphas.rows(); ++k) {
        json row = json::array();
        for (Eigen::Index p = 0; p < t.alphas.cols(); ++p) {
            row.push_back({t.alphas(k, p).real(), t.alphas(k, p).imag()});
        }
        alphas.push_back(row);
    }
    return json{{"omegas", t.omegas}, {"alphas", alphas}, {"mus", t.mus}, {"delays", t.delays}};
}

GroundTruth truth_from_json(const json& j) {
    GroundTruth t;
    t.omegas = j.at("omegas").get<std::vector<double>>();
    t.mus = j.at("mus").get<std::vector<double>>();
    t.delays = j.at("delays").get<std::vector<int>>();
    const auto& rows = j.at("alphas");
    const auto num_bs = static_cast<Eigen::Index>(rows.size());
    const auto num_frames = num_bs == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.at(0).size());
    t.alphas.resize(num_bs, num_frames);
    for (Eigen::Index k = 0; k < num_bs; ++k) {
        const auto& row = rows.at(static_cast<std::size_t>(k));
        if (static_cast<Eigen::Index>(row.size()) != num_frames) {
            throw IoError("ragged alphas matrix");
        }
        for (Eigen::Index p = 0; p < num_frames; ++p) {
            const auto& v = row.at(static_cast<std::size_t>(p));
            t.alphas(k, p) = cd{v.at(0).get<double>(), v.at(1).get<double>()};
        }
    }
    return t;
}

}  // namespace

void write_samples_cf64le(const cvec& samples, const std::string& path) {
    std::vector<char> buf(samples.size() * 16);
    for (std::size_t m = 0; m < samples.size(); ++m) {
        put_le(samples[m].real(), buf.data() + 16 * m);
        put_le(samples[m].imag(), buf.data() + 16 * m + 8);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

cvec read_samples_cf64le(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() % 16 != 0) {
        throw IoError("'" + path + "' is not a whole number of complex float64 samples (" +
                      std::to_string(buf.size()) + " bytes)");
    }
    cvec samples(buf.size() / 16);
    for (std::size_t m = 0; m < samples.size(); ++m) {
        samples[m] = cd{get_le(buf.data() + 16 * m), get_le(buf.data() + 16 * m + 8)};
    }
    return samples;
}

void write_burst(const ReceivedBurst& burst, const std::string& data_path) {
    write_samples_cf64le(burst.samples, data_path);
    json side{{"format", "cf64le"}, {"num_samples", burst.samples.size()}, {"config", config_json(burst.config)}};
    if (burst.truth) {
        side["truth"] = truth_json(*burst.truth);
    }
    const std::string sp = sidecar_path(data_path);
    std::ofstream out(sp, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + sp + "' for writing");
    }
    out << side.dump(2) << '\n';
    if (!out) {
        throw IoError("write to '" + sp + "' failed");
    }
}

ReceivedBurst read_burst(const std::string& data_path) {
    const std::string sp = sidecar_path(data_path);
    std::ifstream in(sp);
    if (!in) {
        throw IoError("cannot open sidecar '" + sp + "'");
    }
    ReceivedBurst burst;
    try {
        const json side = json::parse(in);
        if (side.at("format").get<std::string>() != "cf64le") {
            throw IoError("unsupported sample format in '" + sp + "'");
        }
        burst.config = config_from_json(side.at("config"));
        if (side.contains("truth")) {
            burst.truth = truth_from_json(side.at("truth"));
        }
        burst.samples = read_samples_cf64le(data_path);
        if (burst.samples.size() != side.at("num_samples").get<std::size_t>()) {
            throw IoError("'" + data_path + "' holds " + std::to_string(burst.samples.size()) +
                          " samples but the sidecar declares " + side.at("num_samples").dump());
        }
    } catch (const json::exception& e) {
        throw IoError("malformed sidecar '" + sp + "': " + e.what());
    } catch (const ParameterError& e) {
        throw IoError("sidecar '" + sp + "': " + e.what());
    }
    burst.config.validate();
    if (static_cast<int>(burst.samples.size()) < burst.config.num_frames * burst.config.frame_len) {
        throw IoError("'" + data_path + "' is shorter than P * N_f samples");
    }
    return burst;
}

}  // namespace xcfo
