#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "bbh/selftest.hpp"
#include "runner.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"bbh - truncated BBGKY hierarchy simulator for finite bosonic systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_override;

    auto add_config_opts = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "run configuration file")->required();
        cmd->add_option("--set", overrides, "override a config key (key=value), repeatable");
        cmd->add_option("-o,--out", out_override, "output directory (overrides output_dir)");
    };

    CLI::App* run = app.add_subcommand("run", "propagate the truncated hierarchy");
    add_config_opts(run);

    CLI::App* exact = app.add_subcommand("exact", "propagate the full-CI oracle");
    add_config_opts(exact);

    CLI::App* sweep = app.add_subcommand("sweep", "run a campaign over one parameter");
    std::string sweep_param, sweep_values, sweep_out = "sweep";
    int sweep_jobs = static_cast<int>(std::thread::hardware_concurrency());
    add_config_opts(sweep);
    sweep->add_option("--param", sweep_param, "config key to sweep")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep->add_option("--campaign-dir", sweep_out, "campaign output directory");
    sweep->add_option("--jobs", sweep_jobs, "worker count");

    CLI::App* check = app.add_subcommand("check", "representability of a stored state");
    std::string rho2_path, rho1_path;
    int check_n = 0;
    double check_eps = -1e-10;
    check->add_option("--rho2", rho2_path, "two-body RDM (.bop)")->required();
    check->add_option("--rho1", rho1_path, "one-body RDM (.bop); default tr_1 of rho2");
    check->add_option("-N,--particles", check_n, "total particle number")->required();
    check->add_option("--epsilon", check_eps, "negativity threshold");

    CLI::App* selftest = app.add_subcommand("selftest", "run the property suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!out_override.empty())
            overrides.push_back("output_dir=" + out_override);
        if (run->parsed())
            return bbh::tools::cmd_run(bbh::tools::load_run_config(config_path, overrides));
        if (exact->parsed())
            return bbh::tools::cmd_exact(bbh::tools::load_run_config(config_path, overrides));
        if (sweep->parsed()) {
            std::vector<std::string> values;
            std::string acc;
            for (char ch : sweep_values) {
                if (ch == ',') {
                    values.push_back(acc);
                    acc.clear();
                } else {
                    acc += ch;
                }
            }
            if (!acc.empty())
                values.push_back(acc);
            return bbh::tools::cmd_sweep(config_path, overrides, sweep_param, values, sweep_out,
                                         sweep_jobs);
        }
        if (check->parsed())
            return bbh::tools::cmd_check(rho2_path, rho1_path, check_n, check_eps);
        if (selftest->parsed())
            return bbh::report_selftest(std::cout) ? bbh::tools::exit_ok : 1;
    } catch (const bbh::tools::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return bbh::tools::exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
