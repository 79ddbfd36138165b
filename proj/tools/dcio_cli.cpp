// Command-line front end: constellation design, verification, labeling,
// link simulation, and baseline comparison.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dcio/harness.hpp"
#include "dcio/io.hpp"
#include "dcio/labeling.hpp"
#include "dcio/optimizer.hpp"

namespace fs = std::filesystem;
using namespace dcio;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;    // usage / IO errors
constexpr int kExitNumeric = 2;  // infeasible / numerical errors

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
};

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

double design_accounting_power(const ExperimentConfig& ec, const Eigen::MatrixXd& points) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(ec.sys.dims(), ec.sys.dims());
    if (!ec.channel.is_flat()) f = build_preequalizer(ec.channel, ec.sys, ec.alpha).block_matrix();
    return average_power(f * points, ec.sys);
}

void print_verify(std::ostream& os, const VerifyReport& rep, const SystemConfig& cfg) {
    os << "d_min:        " << rep.d_min << "\n"
       << "avg_power:    " << rep.avg_power << " (budget " << cfg.p_total << ")\n"
       << "min_sample:   " << rep.min_sample << "\n"
       << "max_sample:   " << rep.max_sample << "\n";
    if (cfg.mode == DesignMode::Partial)
        os << "min_combined: " << rep.min_combined << " (residual bias " << rep.residual_bias
           << ")\n";
    if (rep.clean()) {
        os << "verify: clean\n";
    } else {
        for (const auto& f : rep.flags) os << "verify FLAG: " << f << "\n";
    }
}

int cmd_design(const std::string& config_path, int restarts, std::uint64_t seed,
               const std::string& out_dir) {
    ExperimentConfig ec = load_config(config_path);
    auto errs = validate(ec.sys);
    if (!errs.empty()) {
        for (const auto& e : errs) std::cerr << "config error: " << e << "\n";
        return kExitUsage;
    }
    DesignOptions opt;
    opt.restarts = restarts;
    opt.seed = seed;
    opt.alpha = ec.alpha;
    DesignResult res = scp_design(ec.sys, ec.channel, opt);
    if (!res.feasible) {
        std::cerr << "design failed: " << res.message << "\n";
        return kExitNumeric;
    }

    const double n0_ref = labeling_reference_n0(res.constellation.points);
    BsaResult bsa = bsa_optimize(res.constellation.points, n0_ref, seed);
    VerifyReport rep = verify_design(res, ec.sys, ec.channel, ec.alpha);

    fs::create_directories(out_dir);
    const std::string audit = ec.raw.dump();
    write_constellation((fs::path(out_dir) / "constellation.txt").string(), res.constellation,
                        bsa.labeling, ec.sys, audit, seed);

    std::ofstream report(fs::path(out_dir) / "design_report.txt");
    report << "config: " << audit << "\n"
           << "seed: " << seed << "\n"
           << "restarts: " << res.restarts_used << " (best " << res.best_restart << ", "
           << res.iterations << " iterations)\n";
    print_verify(report, rep, ec.sys);
    report << "labeling_cost: " << bsa.cost << "\n"
           << "bits_per_symbol_error: "
           << bits_per_symbol_error(bsa.labeling, res.constellation.points, n0_ref) << "\n";

    std::cout << "d_min: " << res.d_min << "\n"
              << "avg_power: " << res.constellation.avg_power << "\n"
              << "wrote " << (fs::path(out_dir) / "constellation.txt").string() << "\n";
    if (!rep.clean()) {
        for (const auto& f : rep.flags) std::cerr << "verify FLAG: " << f << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}

int cmd_verify(const std::string& cons_path, const std::string& config_path) {
    ExperimentConfig ec = load_config(config_path);
    ConstellationFile cf = read_constellation(cons_path);
    DesignResult res;
    res.feasible = true;
    res.constellation = cf.constellation;
    res.d_min = min_distance(cf.constellation.points);
    VerifyReport rep = verify_design(res, ec.sys, ec.channel, ec.alpha);
    print_verify(std::cout, rep, ec.sys);
    return rep.clean() ? kExitOk : kExitNumeric;
}

int cmd_label(const std::string& cons_path, const std::string& config_path, std::uint64_t seed,
              std::string out_path) {
    ConstellationFile cf = read_constellation(cons_path);
    const double n0_ref = labeling_reference_n0(cf.constellation.points);
    BsaResult bsa = bsa_optimize(cf.constellation.points, n0_ref, seed);
    std::string audit;
    if (!config_path.empty()) audit = load_config(config_path).raw.dump();
    if (out_path.empty()) out_path = cons_path;
    SystemConfig hdr = cf.header;
    cf.constellation.achieved_d_min = min_distance(cf.constellation.points);
    write_constellation(out_path, cf.constellation, bsa.labeling, hdr, audit, seed);
    std::cout << "labeling_cost: " << bsa.cost << "\n"
              << "bits_per_symbol_error: "
              << bits_per_symbol_error(bsa.labeling, cf.constellation.points, n0_ref) << "\n"
              << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_ber(const std::string& cons_path, const std::string& config_path,
            const std::string& grid_csv, long long trials, std::uint64_t seed,
            const std::string& out_path) {
    ExperimentConfig ec = load_config(config_path);
    ConstellationFile cf = read_constellation(cons_path);
    if (cf.header.N != ec.sys.N || cf.header.n_joint != ec.sys.n_joint ||
        cf.header.M != ec.sys.M) {
        std::cerr << "constellation file does not match the config geometry\n";
        return kExitUsage;
    }
    const std::vector<double> grid = parse_grid(grid_csv);
    if (grid.empty()) {
        std::cerr << "empty SNR grid\n";
        return kExitUsage;
    }
    const double power = design_accounting_power(ec, cf.constellation.points);
    DetectionSet set =
        make_joint_detection_set(cf.constellation, cf.labels, ec.sys, ec.alpha, power);
    auto points = run_ber(set, grid, trials, seed);
    write_ber_csv(out_path, points, set.scheme, set.power, ec.raw.dump(), seed);
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_compare(const std::string& cons_path, const std::string& config_path, double bias_flag,
                double bias_db_flag, bool bias_exhaustive, double target_ber, long long trials,
                double mc_ber, std::uint64_t seed, const std::string& out_path) {
    ExperimentConfig ec = load_config(config_path);
    ConstellationFile cf = read_constellation(cons_path);

    DcoConfig dco = dco_config_for(ec);
    DcoSettings settings = ec.dco;
    if (bias_flag > 0.0) {
        settings.rule = DcoSettings::BiasRule::Fixed;
        settings.value = bias_flag;
    } else if (bias_db_flag > 0.0) {
        settings.rule = DcoSettings::BiasRule::Db;
        settings.value = bias_db_flag;
    } else if (bias_exhaustive) {
        settings.rule = DcoSettings::BiasRule::Exhaustive;
    }
    const double bias = resolve_dco_bias(dco, settings);
    const double exhaustive_bias = min_bias_exhaustive(dco);

    const double p_dcio = design_accounting_power(ec, cf.constellation.points);
    const double p_dco = dco_power(dco, bias, ec.sys.power_convention);
    std::ostringstream rep;
    rep << "dcio power (" << to_string(ec.sys.power_convention) << "): " << p_dcio << "\n"
        << "dco power  (" << to_string(ec.sys.power_convention) << "): " << p_dco
        << "  [bias " << bias << ", exhaustive oracle bias " << exhaustive_bias << "]\n"
        << "dco power  (fd-sum): " << dco_power(dco, bias, PowerConvention::FdSum) << "\n";
    if (std::abs(p_dcio - p_dco) > 0.01 * std::max(p_dcio, p_dco)) {
        std::cerr << rep.str();
        std::cerr << "refusing: average powers differ by more than 1% under the active "
                     "convention; re-design the constellation at the baseline power\n";
        return kExitUsage;
    }

    DetectionSet dcio_set =
        make_joint_detection_set(cf.constellation, cf.labels, ec.sys, ec.alpha, p_dcio);
    DetectionSet dco_set = make_dco_detection_set(dco, bias, ec.sys.power_convention);

    rep << "dcio d_min: " << analytic_ser(dcio_set, 1.0).d_min << "\n"
        << "dco d_min:  " << analytic_ser(dco_set, 1.0).d_min << "\n";

    const double gain_analytic = analytic_gain_db(dco_set, dcio_set, target_ber);
    rep << "analytic gain at BER " << target_ber << ": " << gain_analytic << " dB\n";

    if (trials > 0) {
        // Monte-Carlo validation around the analytic crossing at mc_ber
        auto grid_for = [&](const DetectionSet& set) {
            const double n0 = n0_at_analytic_ber(set, mc_ber);
            const double snr = 10.0 * std::log10(set.power / n0);
            return std::vector<double>{snr - 1.0, snr - 0.5, snr, snr + 0.5, snr + 1.0};
        };
        auto dcio_curve = run_ber(dcio_set, grid_for(dcio_set), trials, seed);
        auto dco_curve = run_ber(dco_set, grid_for(dco_set), trials, derive_seed(seed, 1));
        try {
            const double gain_mc = power_gain_at_ber(dco_curve, dcio_curve, mc_ber);
            rep << "monte-carlo gain at BER " << mc_ber << " (" << trials
                << " frames/point): " << gain_mc << " dB\n";
        } catch (const std::exception& e) {
            rep << "monte-carlo gain unavailable: " << e.what() << "\n";
        }
    }

    std::cout << rep.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << "# config: " << ec.raw.dump() << "\n# seed: " << seed << "\n" << rep.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DC-informative optical OFDM designer and link simulator"};
    app.require_subcommand(1);

    std::string config_path, cons_path, out_path, grid_csv;
    std::uint64_t seed = 0;
    int restarts = 100;
    long long trials = 200000;
    double target_ber = 1e-5, mc_ber = 1e-4;
    double bias_flag = 0.0, bias_db_flag = 0.0;
    bool bias_exhaustive = false;

    auto* design = app.add_subcommand("design", "optimize a joint constellation");
    design->add_option("--config", config_path, "config file (JSON)")->required();
    design->add_option("--restarts", restarts, "random restarts");
    design->add_option("--seed", seed, "RNG seed");
    design->add_option("--out", out_path, "output directory")->required();

    auto* verify = app.add_subcommand("verify", "re-check a constellation file");
    verify->add_option("--constellation", cons_path)->required();
    verify->add_option("--config", config_path)->required();

    auto* label = app.add_subcommand("label", "re-run the bit labeling");
    label->add_option("--constellation", cons_path)->required();
    label->add_option("--config", config_path);
    label->add_option("--seed", seed);
    label->add_option("--out", out_path, "output file (defaults to in-place)");

    auto* ber = app.add_subcommand("ber", "Monte-Carlo BER curve");
    ber->add_option("--constellation", cons_path)->required();
    ber->add_option("--config", config_path)->required();
    ber->add_option("--snr-grid", grid_csv, "comma-separated SNR list (dB)")->required();
    ber->add_option("--trials", trials, "frames per SNR point");
    ber->add_option("--seed", seed);
    ber->add_option("--out", out_path, "output CSV")->required();

    auto* compare = app.add_subcommand("compare", "gain over the DC-biased baseline");
    compare->add_option("--dcio", cons_path, "designed constellation file")->required();
    compare->add_option("--config", config_path)->required();
    compare->add_option("--dco-bias", bias_flag, "baseline bias amplitude");
    compare->add_option("--dco-bias-db", bias_db_flag, "baseline bias in dB");
    compare->add_flag("--dco-bias-exhaustive", bias_exhaustive);
    compare->add_option("--target-ber", target_ber);
    compare->add_option("--trials", trials, "frames per MC point (0 disables MC)");
    compare->add_option("--mc-ber", mc_ber, "BER level for MC validation");
    compare->add_option("--seed", seed);
    compare->add_option("--out", out_path, "report file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (design->parsed()) return cmd_design(config_path, restarts, seed, out_path);
        if (verify->parsed()) return cmd_verify(cons_path, config_path);
        if (label->parsed()) return cmd_label(cons_path, config_path, seed, out_path);
        if (ber->parsed()) return cmd_ber(cons_path, config_path, grid_csv, trials, seed, out_path);
        if (compare->parsed())
            return cmd_compare(cons_path, config_path, bias_flag, bias_db_flag, bias_exhaustive,
                               target_ber, trials, mc_ber, seed, out_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitUsage;
}
