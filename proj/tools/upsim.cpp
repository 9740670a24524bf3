#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "upsim/cli.hpp"
#include "upsim/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"upsim: switched-circuit simulator for a line-interactive backup supply"};
    app.require_subcommand(1);

    upsim::cli::TfOptions tf;
    double duty = 0.0;
    std::string tf_config;
    auto* tf_cmd = app.add_subcommand("tf", "Print stage transfer functions");
    tf_cmd->add_option("--stage", tf.stage, "rectifier, boost, charger or all")->capture_default_str();
    tf_cmd->add_option("--config", tf_config, "Scenario file supplying component values");
    auto* duty_opt = tf_cmd->add_option("--duty,-d", duty, "Boost duty ratio");
    tf_cmd->add_option("--freq,-f", tf.freqs, "Frequencies [Hz] for a response table");
    tf_cmd->add_option("--set", tf.overrides, "Override a setting, section.key=value");

    upsim::cli::SimulateOptions sim;
    std::string sim_config, sim_out;
    auto add_sim_options = [&](CLI::App* cmd) {
        cmd->add_option("config", sim_config, "Scenario file (defaults apply when omitted)");
        cmd->add_option("--out,-o", sim_out, "Output directory (else $UPSIM_OUT_DIR, else ./upsim_out)");
        cmd->add_option("--set", sim.overrides, "Override a setting, section.key=value");
    };
    auto* sim_cmd = app.add_subcommand("simulate", "Run the switched simulation and write waveform CSVs");
    add_sim_options(sim_cmd);
    auto* report_cmd = app.add_subcommand("report", "Simulate and analyse in one pass");
    add_sim_options(report_cmd);

    upsim::cli::AnalyzeOptions an;
    std::string an_out;
    auto* an_cmd = app.add_subcommand("analyze", "Harmonic and power-factor report from waveform CSVs");
    an_cmd->add_option("inputs", an.inputs, "Waveform CSV files or directories")->required();
    an_cmd->add_option("--f0", an.f0, "Fundamental frequency [Hz]")->capture_default_str();
    an_cmd->add_option("--max-order", an.max_order, "Highest harmonic order")->capture_default_str();
    an_cmd->add_option("--cycles", an.cycles, "Cycles per analysis window")->capture_default_str();
    an_cmd->add_option("--out,-o", an_out, "Output directory (else $UPSIM_OUT_DIR, else ./upsim_out)");

    auto* defaults_cmd = app.add_subcommand("defaults", "Print the default scenario as a config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : upsim::cli::exit_usage;
    }

    auto opt_str = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
    if (*tf_cmd) {
        tf.config_path = opt_str(tf_config);
        if (*duty_opt) tf.duty = duty;
        return upsim::cli::cmd_tf(tf, std::cout, std::cerr);
    }
    if (*sim_cmd || *report_cmd) {
        sim.config_path = opt_str(sim_config);
        sim.out_dir = opt_str(sim_out);
        return *sim_cmd ? upsim::cli::cmd_simulate(sim, std::cout, std::cerr)
                        : upsim::cli::cmd_report(sim, std::cout, std::cerr);
    }
    if (*an_cmd) {
        an.out_dir = opt_str(an_out);
        return upsim::cli::cmd_analyze(an, std::cout, std::cerr);
    }
    if (*defaults_cmd) {
        std::cout << upsim::render_config();
        return upsim::cli::exit_ok;
    }
    return upsim::cli::exit_usage;
}
