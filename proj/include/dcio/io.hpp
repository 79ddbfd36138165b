#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcio/channel.hpp"
#include "dcio/config.hpp"
#include "dcio/dco.hpp"

namespace dcio {

/// Baseline bias selection for comparison recipes.
struct DcoSettings {
    enum class BiasRule { Exhaustive, Db, Fixed };
    BiasRule rule = BiasRule::Exhaustive;
    double value = 0.0;  // dB for Db, amplitude for Fixed
    std::vector<int> active_bins;  // empty = all of 1..N/2-1
};

/// One parsed experiment configuration file.
struct ExperimentConfig {
    SystemConfig sys;
    ChannelSpec channel = ChannelSpec::flat();
    double alpha = 1.0;
    DcoSettings dco;
    nlohmann::json raw;
};

inline std::string to_string(DesignMode m) { return m == DesignMode::Full ? "full" : "partial"; }
inline std::string to_string(PowerConvention c) {
    return c == PowerConvention::PaperSec4 ? "paper-sec4" : "fd-sum";
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig ec;
    ec.raw = j;
    SystemConfig& s = ec.sys;
    s.N = j.at("N").get<int>();
    s.n_joint = j.at("N_J").get<int>();
    s.M = j.at("M").get<int>();
    s.n_bits = j.at("N_b").get<int>();
    s.p_total = j.at("P_total").get<double>();
    s.p_indep = j.value("P_indep", 0.0);
    const std::string mode = j.value("mode", "full");
    if (mode == "full")
        s.mode = DesignMode::Full;
    else if (mode == "partial")
        s.mode = DesignMode::Partial;
    else
        throw std::runtime_error("config: mode must be 'full' or 'partial'");
    const std::string conv = j.value("power_convention", "paper-sec4");
    if (conv == "paper-sec4")
        s.power_convention = PowerConvention::PaperSec4;
    else if (conv == "fd-sum")
        s.power_convention = PowerConvention::FdSum;
    else
        throw std::runtime_error("config: power_convention must be 'paper-sec4' or 'fd-sum'");
    s.dynamic_range_max = j.value("dynamic_range_max", 0.0);

    if (j.contains("channel")) {
        ec.channel.paths.clear();
        for (const auto& p : j.at("channel")) {
            if (!p.is_array() || p.size() != 2)
                throw std::runtime_error("config: channel entries must be [beta, tau] pairs");
            ec.channel.paths.push_back({p[0].get<double>(), p[1].get<int>()});
        }
        if (ec.channel.paths.empty()) ec.channel = ChannelSpec::flat();
    }
    ec.alpha = j.value("alpha", 1.0);

    if (j.contains("dco")) {
        const auto& d = j.at("dco");
        if (d.contains("bias_db")) {
            ec.dco.rule = DcoSettings::BiasRule::Db;
            ec.dco.value = d.at("bias_db").get<double>();
        } else if (d.contains("bias")) {
            ec.dco.rule = DcoSettings::BiasRule::Fixed;
            ec.dco.value = d.at("bias").get<double>();
        }
        if (d.contains("active_bins"))
            ec.dco.active_bins = d.at("active_bins").get<std::vector<int>>();
    }
    return ec;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return parse_config(j);
}

/// DcoConfig matching an experiment config (defaults: every independent
/// bin active, unit 4-QAM).
inline DcoConfig dco_config_for(const ExperimentConfig& ec) {
    DcoConfig d;
    d.N = ec.sys.N;
    if (!ec.dco.active_bins.empty()) {
        d.active_bins = ec.dco.active_bins;
    } else {
        d.active_bins.clear();
        for (int b = 1; b <= d.N / 2 - 1; ++b) d.active_bins.push_back(b);
    }
    return d;
}

inline double resolve_dco_bias(const DcoConfig& d, const DcoSettings& s) {
    switch (s.rule) {
        case DcoSettings::BiasRule::Fixed: return s.value;
        case DcoSettings::BiasRule::Db: return bias_from_db(s.value, dco_mean_sample_power(d));
        case DcoSettings::BiasRule::Exhaustive: default: return min_bias_exhaustive(d);
    }
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Constellation file: audit comments, then a header line "N N_J M N_b",
/// M lines holding one point (2N_J+1 floats at 17 significant digits),
/// and a final line with the bit word of each point.
inline void write_constellation(const std::string& path, const JointConstellation& cons,
                                const BitLabeling& labels, const SystemConfig& cfg,
                                const std::string& audit_config = "",
                                std::optional<std::uint64_t> seed = std::nullopt) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write constellation file: " + path);
    if (!audit_config.empty()) out << "# config: " << audit_config << "\n";
    if (seed) out << "# seed: " << *seed << "\n";
    out << "# d_min: " << format_double(cons.achieved_d_min)
        << " avg_power: " << format_double(cons.avg_power) << "\n";
    out << cfg.N << " " << cfg.n_joint << " " << cfg.M << " " << cfg.n_bits << "\n";
    for (int m = 0; m < cons.size(); ++m) {
        for (int i = 0; i < cons.dims(); ++i) {
            if (i) out << " ";
            out << format_double(cons.points(i, m));
        }
        out << "\n";
    }
    for (int m = 0; m < cons.size(); ++m) {
        if (m) out << " ";
        out << labels.word_of[m];
    }
    out << "\n";
}

struct ConstellationFile {
    SystemConfig header;  // N, N_J, M, N_b only
    JointConstellation constellation;
    BitLabeling labels;
};

inline ConstellationFile read_constellation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open constellation file: " + path);
    std::string line;
    auto next_data_line = [&](std::string& out_line) {
        while (std::getline(in, out_line)) {
            if (!out_line.empty() && out_line[0] != '#') return true;
        }
        return false;
    };
    if (!next_data_line(line)) throw std::runtime_error("constellation file: missing header");
    ConstellationFile cf;
    {
        std::istringstream hs(line);
        if (!(hs >> cf.header.N >> cf.header.n_joint >> cf.header.M >> cf.header.n_bits))
            throw std::runtime_error("constellation file: malformed header");
    }
    const int dims = cf.header.dims();
    cf.constellation.points.resize(dims, cf.header.M);
    for (int m = 0; m < cf.header.M; ++m) {
        if (!next_data_line(line)) throw std::runtime_error("constellation file: missing points");
        std::istringstream ps(line);
        for (int i = 0; i < dims; ++i)
            if (!(ps >> cf.constellation.points(i, m)))
                throw std::runtime_error("constellation file: malformed point line");
    }
    if (!next_data_line(line)) throw std::runtime_error("constellation file: missing labeling");
    {
        std::istringstream ls(line);
        cf.labels.word_of.resize(cf.header.M);
        for (int m = 0; m < cf.header.M; ++m)
            if (!(ls >> cf.labels.word_of[m]))
                throw std::runtime_error("constellation file: malformed labeling line");
    }
    if (!cf.labels.is_bijection())
        throw std::runtime_error("constellation file: labeling is not a bijection");
    return cf;
}

/// BER CSV with audit comments, columns snr_db,ser,ber,trials,ci95,scheme,power.
template <typename BerPointRange>
inline void write_ber_csv(const std::string& path, const BerPointRange& points,
                          const std::string& scheme, double power,
                          const std::string& audit_config = "",
                          std::optional<std::uint64_t> seed = std::nullopt) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write csv: " + path);
    if (!audit_config.empty()) out << "# config: " << audit_config << "\n";
    if (seed) out << "# seed: " << *seed << "\n";
    out << "snr_db,ser,ber,trials,ci95,scheme,power\n";
    for (const auto& p : points) {
        out << format_double(p.snr_db) << "," << format_double(p.ser) << ","
            << format_double(p.ber) << "," << p.trials << "," << format_double(p.ci95) << ","
            << scheme << "," << format_double(power) << "\n";
    }
}

}  // namespace dcio
