// Command-line front end: simulate campaigns, analyze campaign CSVs into
// metrics reports, evaluate the analytic model, run parameter sweeps, and
// certify reports against the two non-classicality criteria.
//
// Exit codes: 0 success / certification pass, 1 certification fail,
// 2 usage or configuration error, 3 data error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qnd/qnd.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCertifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct ParamOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;
    std::optional<double> eta, d0, sigma0_over_a, n_atoms_total, beta, sigma_tech_sq;
    std::optional<std::int64_t> cycles;
    std::optional<int> steps, ro_trials;
};

qnd::ExperimentParams resolve_params(const std::string& config_path,
                                     const ParamOverrides& o) {
    qnd::ExperimentParams p;
    if (!config_path.empty()) {
        p = qnd::load_config(config_path);
    } else if (const char* env = std::getenv("QND_CONFIG"); env && *env) {
        p = qnd::load_config(env);
    }
    if (o.seed) p.seed = *o.seed;
    if (o.backend) p.backend = qnd::backend_from_string(*o.backend);
    if (o.eta) p.eta = *o.eta;
    if (o.d0) {
        p.d0 = *o.d0;
        p.sigma0_over_A.reset();
    }
    if (o.sigma0_over_a) {
        p.sigma0_over_A = *o.sigma0_over_a;
        p.d0.reset();
    }
    if (o.n_atoms_total) p.n_atoms_total = *o.n_atoms_total;
    if (o.beta) p.beta = *o.beta;
    if (o.sigma_tech_sq) p.sigma_tech_sq = *o.sigma_tech_sq;
    if (o.cycles) p.campaign.n_cycles = *o.cycles;
    if (o.steps) p.campaign.n_steps = *o.steps;
    if (o.ro_trials) p.campaign.ro_trials_per_cycle = *o.ro_trials;
    p.validate();
    return p;
}

void add_override_flags(CLI::App* cmd, std::string& config_path, ParamOverrides& o) {
    cmd->add_option("--config", config_path,
                    "JSON config file (default: $QND_CONFIG if set)");
    cmd->add_option("--seed", o.seed, "override RNG seed");
    cmd->add_option("--backend", o.backend, "gaussian|atomic");
    cmd->add_option("--eta", o.eta, "per-measurement damage probability");
    cmd->add_option("--d0", o.d0, "fixed on-resonance optical depth");
    cmd->add_option("--sigma0-over-a", o.sigma0_over_a, "optical depth per effective atom");
    cmd->add_option("--atoms-total", o.n_atoms_total, "atoms loaded in the trap");
    cmd->add_option("--beta", o.beta, "scattered-atom variance multiplier");
    cmd->add_option("--sigma-tech-sq", o.sigma_tech_sq, "technical noise per interval, spins^2");
    cmd->add_option("--cycles", o.cycles, "loading cycles");
    cmd->add_option("--steps", o.steps, "ladder steps per cycle");
    cmd->add_option("--ro-trials", o.ro_trials, "readout-only trials per cycle");
}

int run_selftest() {
    using namespace qnd;
    int failures = 0;
    auto check = [&](bool ok, const std::string& what) {
        std::cout << (ok ? "PASS: " : "FAIL: ") << what << '\n';
        if (!ok) ++failures;
    };

    // model regression point
    const ModelPoint mp = model_point(43.5, 0.093, 0.3);
    check(std::abs(mp.x_sm_sq - 0.4236) < 5e-4, "model x_sm_sq at (43.5, 0.093)");
    check(std::abs(mp.x_m_sq - 0.2472) < 5e-4, "model x_m_sq at (43.5, 0.093)");

    // oracle vs both backends at reduced scale
    for (Backend backend : {Backend::gaussian, Backend::atomic}) {
        ExperimentParams p;
        p.n_atoms_total = 1e4 / 0.9;
        p.sigma0_over_A.reset();
        p.d0 = 43.5;
        p.backend = backend;
        p.campaign = {100000, 1, 0.0, 1};
        p.seed = 17;
        const OracleMoments oracle = oracle_moments(p);
        const Campaign c = simulate_campaign(p);
        auto bins = bin_campaign(c, BinMode::by_step);
        BootstrapOptions bopt;
        bopt.n_resamples = 200;
        bopt.seed = 23;
        const QndMetrics m = bootstrap_metrics(bins.front().second, Conditioning::as_written, bopt);
        const std::string tag = " (" + to_string(backend) + " backend)";
        check(std::abs(m.r_a.value - oracle.r_a) < 4 * m.r_a.se, "r_a vs oracle" + tag);
        check(std::abs(m.x_m_sq.value - oracle.x_m_sq) < 4 * m.x_m_sq.se,
              "x_m_sq vs oracle" + tag);
        check(std::abs(m.x_sm_sq.value - oracle.x_sm_sq) < 4 * m.x_sm_sq.se,
              "x_sm_sq vs oracle" + tag);
    }
    std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << '\n';
    return failures == 0 ? kExitOk : kExitCertifyFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pulsed QND measurement simulator and certification toolkit"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a campaign CSV from a config");
    std::string sim_config, sim_out = "campaign.csv";
    ParamOverrides sim_over;
    add_override_flags(sim, sim_config, sim_over);
    sim->add_option("--out", sim_out, "output campaign CSV path");

    // analyze
    auto* ana = app.add_subcommand("analyze", "compute QND metrics from a campaign CSV");
    std::string ana_input, ana_out = "report.json", ana_config;
    ParamOverrides ana_over;
    bool ana_bin_by_atoms = false, ana_radians = false;
    int ana_resamples = 2000;
    std::uint64_t ana_seed = 0;
    double ana_kappa = 0;
    std::string ana_convention = "as-written";
    ana->add_option("--input", ana_input, "campaign CSV")->required();
    ana->add_option("--out", ana_out, "output report path");
    ana->add_option("--config", ana_config,
                    "generating config; enables the oracle comparison block");
    ana->add_flag("--bin-by-atoms", ana_bin_by_atoms, "bin by rounded atom number instead of step");
    ana->add_flag("--radians", ana_radians, "input phi columns are radians; requires --kappa");
    ana->add_option("--kappa", ana_kappa, "coupling constant for --radians import");
    ana->add_option("--resamples", ana_resamples, "bootstrap resamples (default 2000)");
    ana->add_option("--seed", ana_seed, "bootstrap seed");
    ana->add_option("--convention", ana_convention, "as-written|regression");

    // model
    auto* mod = app.add_subcommand("model", "evaluate the analytic model at one point");
    double mod_d0 = 43.5, mod_eta = 0.093, mod_djs = 0.3;
    mod->add_option("--d0", mod_d0, "optical depth");
    mod->add_option("--eta", mod_eta, "damage probability");
    mod->add_option("--djs", mod_djs, "disturbance parameter delta_j_s");

    // sweep
    auto* swp = app.add_subcommand("sweep", "evaluate the model on a (d0, eta) grid");
    std::vector<double> swp_d0, swp_eta;
    double swp_djs = 0.3;
    std::string swp_out = "sweep.csv";
    swp->add_option("--d0", swp_d0, "d0 grid values (default Fig.2-style grid)");
    swp->add_option("--eta", swp_eta, "eta grid values (default logspace 1e-3..0.5)");
    swp->add_option("--djs", swp_djs, "disturbance parameter");
    swp->add_option("--out", swp_out, "output sweep CSV path");

    // certify
    auto* cer = app.add_subcommand("certify", "verdict summary from a metrics report");
    std::string cer_report;
    cer->add_option("--report", cer_report, "metrics report JSON")->required();

    // selftest
    app.add_subcommand("selftest", "run the oracle-vs-simulation suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sim->parsed()) {
            const qnd::ExperimentParams p = resolve_params(sim_config, sim_over);
            const qnd::Campaign c = qnd::simulate_campaign(p);
            if (c.atom_floor_warning)
                std::cerr << "warning: atom-number ladder clamped to 1 atom\n";
            qnd::write_campaign_csv(c, sim_out);
            std::cout << "wrote " << c.records.size() << " records to " << sim_out << '\n';
        } else if (ana->parsed()) {
            qnd::Campaign c = qnd::read_campaign_csv(ana_input);
            if (ana_radians) {
                if (!(ana_kappa > 0))
                    throw qnd::config_error("--radians requires --kappa > 0");
                for (auto& r : c.records) {
                    r.phi1 = qnd::phi_radians_to_scaled(r.phi1, ana_kappa);
                    r.phi2 = qnd::phi_radians_to_scaled(r.phi2, ana_kappa);
                    r.phi3 = qnd::phi_radians_to_scaled(r.phi3, ana_kappa);
                }
            }
            std::optional<qnd::ExperimentParams> config;
            if (!ana_config.empty()) config = qnd::load_config(ana_config);
            qnd::AnalysisOptions opt;
            opt.bin_mode = ana_bin_by_atoms ? qnd::BinMode::by_atoms : qnd::BinMode::by_step;
            opt.convention = qnd::conditioning_from_string(ana_convention);
            opt.n_resamples = ana_resamples;
            opt.seed = ana_seed != 0 || !config ? ana_seed : config->seed;
            const qnd::json report = qnd::analyze_campaign(c, config, opt);
            qnd::write_report(report, ana_out);
            std::cout << "wrote report with " << report.at("bins").size()
                      << " bins to " << ana_out << '\n';
        } else if (mod->parsed()) {
            const qnd::ModelPoint p = qnd::model_point(mod_d0, mod_eta, mod_djs);
            if (p.singular) throw qnd::config_error(p.error);
            qnd::json j;
            j["d0"] = p.d0;
            j["eta"] = p.eta;
            j["delta_j_s"] = p.delta_j_s;
            j["x_sm_sq"] = p.x_sm_sq;
            j["x_m_sq"] = p.x_m_sq;
            j["x_s_sq"] = p.x_s_sq;
            j["t_sum"] = p.t_sum;
            j["idt_product"] = p.idt_product;
            j["region"] = qnd::to_string(p.region);
            std::cout << j.dump(2) << '\n';
        } else if (swp->parsed()) {
            if (swp_d0.empty()) swp_d0 = qnd::default_d0_grid();
            if (swp_eta.empty()) swp_eta = qnd::default_eta_grid();
            const auto points = qnd::sweep(swp_d0, swp_eta, swp_djs);
            qnd::write_sweep_csv(points, swp_out);
            std::cout << "wrote " << points.size() << " points to " << swp_out << '\n';
        } else if (cer->parsed()) {
            const qnd::json report = qnd::read_report(cer_report);
            if (!report.contains("overall"))
                throw qnd::data_error("report has no overall verdict");
            const qnd::Verdict v =
                qnd::verdict_from_json(report.at("overall").at("verdict"));
            std::cout << "bin: " << report.at("overall").at("bin").get<std::string>() << '\n'
                      << "QSP (x_sm_sq < 1):  " << (v.qsp_pass ? "pass" : "fail");
            if (v.significance_available) std::cout << "  (z = " << v.qsp_sigma << ")";
            std::cout << '\n'
                      << "IDT (t_sum > 1):    " << (v.idt_pass ? "pass" : "fail");
            if (v.significance_available) std::cout << "  (z = " << v.idt_sigma << ")";
            std::cout << '\n'
                      << "QND certified:      " << (v.qnd_pass ? "YES" : "NO") << '\n';
            return v.qnd_pass ? kExitOk : kExitCertifyFail;
        } else {  // selftest
            return run_selftest();
        }
    } catch (const qnd::config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const qnd::data_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}
