#include <CLI11.hpp>

#include "zorba/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"zeroth-order federated fine-tuning simulator with block activation"};
    app.require_subcommand(1);

    zorba::RunnerArgs args;
    uint64_t seed_override = 0;
    int threads = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* config_opt = cmd->add_option("--config", args.config_path, "experiment JSON");
        if (needs_config) config_opt->required();
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--seed-override", seed_override, "replace the experiment seeds")
            ->each([&](const std::string&) { args.seed_override = seed_override; });
        cmd->add_option("--threads", threads, "worker threads (speed only, never results)")
            ->each([&](const std::string&) { args.threads = threads; });
    };

    CLI::App* allocate = app.add_subcommand("allocate", "epsilon sweep and matrix selection");
    add_common(allocate, true);

    CLI::App* train = app.add_subcommand("train", "run fine-tuning rounds");
    add_common(train, true);
    train->add_option("--allocation", args.allocation_path,
                      "allocation.json from a previous allocate run");
    train->add_flag("--trace", args.write_trace, "dump per-round trace.jsonl");

    CLI::App* verify = app.add_subcommand("verify", "run verification suites");
    add_common(verify, false);
    verify->add_option("--suite", args.suite, "oracles|estimator|protocol|all");
    verify->add_option("--golden", args.golden_path, "allocator gap golden file");
    verify->add_flag("--update-golden", args.update_golden, "regenerate the golden file");

    CLI::App* report = app.add_subcommand("report", "summarize metrics files");
    add_common(report, false);
    report->add_option("--metrics", args.metrics_paths, "metrics.csv files")->required();
    std::string target_metric;
    double target_value = 0.0;
    report->add_option("--target-metric", target_metric, "accuracy|eval_loss|train_loss")
        ->each([&](const std::string&) { args.target_metric = target_metric; });
    report->add_option("--target-value", target_value, "rounds-to-target threshold")
        ->each([&](const std::string&) { args.target_value = target_value; });

    CLI11_PARSE(app, argc, argv);

    if (allocate->parsed()) return zorba::cmd_allocate(args);
    if (train->parsed()) return zorba::cmd_train(args);
    if (verify->parsed()) return zorba::cmd_verify(args);
    if (report->parsed()) return zorba::cmd_report(args);
    return zorba::kExitError;
}
