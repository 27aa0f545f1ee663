#include <modcma/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv)
{
    namespace cli = modcma::cli;

    CLI::App app{"Modular CMA-ES laboratory"};
    app.require_subcommand(1);

    cli::RunArgs run;
    auto *run_cmd = app.add_subcommand("run", "Run one configuration on one benchmark problem");
    run_cmd->add_option("--function", run.function, "Benchmark function id")->capture_default_str();
    run_cmd->add_option("--dim", run.dim, "Problem dimension")->capture_default_str();
    run_cmd->add_option("--iid", run.iid, "Instance id")->capture_default_str();
    run_cmd->add_option("--config", run.config, "Configuration JSON, inline or as a file path");
    run_cmd->add_option("--budget", run.budget, "Evaluation budget (default 10000*dim)");
    run_cmd->add_option("--seed", run.seed, "Run seed")->capture_default_str();
    run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();

    cli::SingleModuleArgs single;
    auto *single_cmd = app.add_subcommand("single-module", "Benchmark the default and every single-module deviation");
    single_cmd->add_option("--dim", single.dim)->capture_default_str();
    single_cmd->add_option("--iid", single.iid)->capture_default_str();
    single_cmd->add_option("--budget", single.budget, "Evaluation budget per run (default 10000*dim)");
    single_cmd->add_option("--runs", single.runs, "Runs per configuration and function")->capture_default_str();
    single_cmd->add_option("--seed", single.seed, "First run seed")->capture_default_str();
    single_cmd->add_option("--extension", single.extension, "none, ssa_new or boundary_new")->capture_default_str();
    single_cmd->add_option("--functions", single.functions, "Restrict to these functions");
    single_cmd->add_option("--jobs", single.jobs)->capture_default_str();
    single_cmd->add_option("--out", single.out)->capture_default_str();

    cli::TuneArgs tune;
    auto *tune_cmd = app.add_subcommand("tune", "Run the racing tuner as described by a manifest");
    tune_cmd->add_option("--manifest", tune.manifest, "Experiment manifest JSON")->required();
    tune_cmd->add_option("--out", tune.out, "Output root (default: manifest output)");
    tune_cmd->add_option("--jobs", tune.jobs)->capture_default_str();

    cli::VerifyArgs verify;
    auto *verify_cmd = app.add_subcommand("verify", "Re-run elites on a shared seed list");
    verify_cmd->add_option("--elites", verify.elites, "Elites JSON file or tune output directory")->required();
    verify_cmd->add_option("--runs", verify.runs, "Verification runs per elite (default 25)");
    verify_cmd->add_option("--function", verify.function, "Function id (default: parent directory name)");
    verify_cmd->add_option("--dim", verify.dim);
    verify_cmd->add_option("--iid", verify.iid);
    verify_cmd->add_option("--budget", verify.budget);
    verify_cmd->add_option("--seed-base", verify.seed_base)->capture_default_str();
    verify_cmd->add_flag("--include-default", verify.include_default, "Also verify the default configuration");
    verify_cmd->add_option("--jobs", verify.jobs)->capture_default_str();
    verify_cmd->add_option("--out", verify.out)->capture_default_str();

    cli::ReportArgs rep;
    auto *report_cmd = app.add_subcommand("report", "Write analysis CSVs from stored artifacts");
    report_cmd->add_option("--kind", rep.kind)
        ->required()
        ->check(CLI::IsMember({"activation", "improvement", "delta", "ecdf", "initial"}));
    report_cmd->add_option("--input", rep.input, "Tune/verify output directory, or trace directory for ecdf");
    report_cmd->add_option("--baseline", rep.baseline);
    report_cmd->add_option("--experiment", rep.experiment);
    report_cmd->add_option("--budget", rep.budget, "Run budget of the traces (ecdf)");
    report_cmd->add_option("--out", rep.out)->capture_default_str();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::invalid_config;
    }

    if (*run_cmd)
        return cli::cmd_run(run, std::cout, std::cerr);
    if (*single_cmd)
        return cli::cmd_single_module(single, std::cout, std::cerr);
    if (*tune_cmd)
        return cli::cmd_tune(tune, std::cout, std::cerr);
    if (*verify_cmd)
        return cli::cmd_verify(verify, std::cout, std::cerr);
    return cli::cmd_report(rep, std::cout, std::cerr);
}
