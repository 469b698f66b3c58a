#include "zorba/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "zorba/experiment.hpp"
#include "zorba/verify.hpp"

namespace zorba {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

ExperimentConfig load_with_overrides(const RunnerArgs& args) {
    if (args.config_path.empty()) throw std::invalid_argument("missing --config");
    std::ifstream in(args.config_path);
    if (!in) throw std::runtime_error("cannot open config " + args.config_path);
    json j;
    in >> j;
    // A manifest is accepted wherever a config is: replaying one reproduces
    // the original run byte for byte.
    if (j.contains("config")) j = j["config"];
    ExperimentConfig config = parse_config(j);
    if (args.seed_override) {
        config.seeds.master = *args.seed_override;
        config.seeds.data = SplitMix64::hash(*args.seed_override, 1);
        config.seeds.sweep = SplitMix64::hash(*args.seed_override, 2);
    }
    if (args.threads) config.threads = *args.threads;
    config.validate();
    return config;
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

std::string out_path(const RunnerArgs& args, const std::string& name) {
    return (fs::path(args.out_dir) / name).string();
}

void write_pareto_csv(const std::string& path, const SweepResult& sweep) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "tau,vram_total,lambda,feasible,on_front\n";
    for (const SweepRow& row : sweep.rows) {
        out << fmt(row.tau) << ',';
        if (row.feasible) out << fmt(row.vram_total) << ',' << fmt(row.lambda);
        else out << ',';
        out << ',' << (row.feasible ? 1 : 0) << ',' << (row.on_front ? 1 : 0) << '\n';
    }
}

void write_allocation_json(const std::string& path, const ParetoPoint& point,
                           const ExperimentConfig& config, double psi_md) {
    json j;
    j["rows"] = activation_to_json(point.matrix);
    j["gamma_star"] = point.gamma_star;
    j["lambda"] = point.lambda;
    j["vram_total"] = point.vram_total;
    j["tau"] = point.epsilon.tau;
    json usage = json::array();
    for (int n = 0; n < point.matrix.clients(); ++n)
        usage.push_back(total_usage(point.matrix.column(n), config.arch, psi_md));
    j["per_client_usage"] = usage;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

struct ParsedMetrics {
    std::string scheme;
    std::vector<int> rounds;
    std::vector<double> train_loss;
    std::vector<std::optional<double>> eval_metric;
    long long comm_up = 0;
    long long comm_down = 0;
    double vram_total = 0.0;
    double lambda = 0.0;
};

ParsedMetrics parse_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metrics file " + path);
    ParsedMetrics parsed;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty metrics file " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 8) throw std::runtime_error("bad metrics row in " + path);
        parsed.rounds.push_back(std::stoi(fields[0]));
        parsed.scheme = fields[1];
        parsed.train_loss.push_back(std::stod(fields[2]));
        if (fields[3].empty()) parsed.eval_metric.emplace_back();
        else parsed.eval_metric.emplace_back(std::stod(fields[3]));
        parsed.comm_up += std::stoll(fields[4]);
        parsed.comm_down += std::stoll(fields[5]);
        parsed.vram_total = std::stod(fields[6]);
        parsed.lambda = std::stod(fields[7]);
    }
    if (parsed.rounds.empty()) throw std::runtime_error("no metric rows in " + path);
    return parsed;
}

}  // namespace

int cmd_allocate(const RunnerArgs& args) {
    try {
        const ExperimentConfig config = load_with_overrides(args);
        ensure_out_dir(args.out_dir);
        const AllocationOutcome outcome = run_allocation(config);
        write_pareto_csv(out_path(args, "pareto.csv"), outcome.sweep);
        const std::unique_ptr<Model> probe = build_model(config, -1);
        const double psi_md = config.vram.psi_md_override.value_or(
            static_cast<double>(probe->layout().d));
        write_allocation_json(out_path(args, "allocation.json"), outcome.selected, config,
                              psi_md);
        std::cout << "front size " << outcome.sweep.front.size() << ", selected lambda "
                  << fmt(outcome.selected.lambda) << ", VRAM "
                  << fmt(outcome.selected.vram_total) << "\n";
        if (outcome.sweep.skipped_infeasible > 0)
            std::cout << "skipped " << outcome.sweep.skipped_infeasible
                      << " infeasible samples\n";
        return kExitOk;
    } catch (const InfeasibleEpsilon& e) {
        std::cerr << "allocation infeasible: " << e.what() << "\n";
        return kExitAllocationInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_train(const RunnerArgs& args) {
    try {
        const ExperimentConfig config = load_with_overrides(args);
        ensure_out_dir(args.out_dir);

        std::optional<ActivationMatrix> allocation;
        // Baselines run all blocks everywhere; an allocation input applies
        // only to the block-activation scheme.
        if (config.scheme == Scheme::Zorba && !args.allocation_path.empty()) {
            std::ifstream in(args.allocation_path);
            if (!in) throw std::runtime_error("cannot open allocation " + args.allocation_path);
            json j;
            in >> j;
            allocation = activation_from_json(j.at("rows"));
        }

        std::ofstream trace;
        RoundSink sink;
        if (args.write_trace) {
            trace.open(out_path(args, "trace.jsonl"));
            if (!trace) throw std::runtime_error("cannot write trace.jsonl");
            sink = [&trace](const RoundRecord& record) {
                json j;
                j["round"] = record.round;
                j["scheme"] = scheme_name(record.scheme);
                j["seeds"] = record.seeds;
                j["rho"] = record.rho;
                j["rho_bar"] = record.rho_bar;
                j["train_loss"] = record.train_loss;
                trace << j.dump() << '\n';
            };
        }

        const ExperimentResult result = run_experiment(config, allocation, sink);

        std::ofstream metrics(out_path(args, "metrics.csv"));
        if (!metrics) throw std::runtime_error("cannot write metrics.csv");
        metrics << "round,scheme,train_loss,eval_metric,comm_up_scalars,comm_down_scalars,"
                   "vram_total,lambda\n";
        for (const MetricsRow& row : result.rows) {
            metrics << row.round << ',' << scheme_name(row.scheme) << ','
                    << fmt(row.train_loss) << ',';
            if (row.eval_metric) metrics << fmt(*row.eval_metric);
            metrics << ',' << row.comm_up_scalars << ',' << row.comm_down_scalars << ','
                    << fmt(row.vram_total) << ',' << fmt(row.lambda) << '\n';
        }

        json manifest;
        manifest["config"] = config_to_json(config);
        char hash_buf[32];
        std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                      static_cast<unsigned long long>(config_hash(config)));
        manifest["config_hash"] = hash_buf;
        manifest["rounds_run"] = static_cast<int>(result.rows.size());
        if (result.rounds_to_target) manifest["rounds_to_target"] = *result.rounds_to_target;
        std::ofstream mf(out_path(args, "manifest.json"));
        mf << manifest.dump(2) << '\n';

        std::cout << "ran " << result.rows.size() << " rounds, final train loss "
                  << fmt(result.rows.back().train_loss) << "\n";
        return kExitOk;
    } catch (const ProtocolViolation& e) {
        std::cerr << "protocol violation: " << e.what() << "\n";
        return kExitProtocolViolation;
    } catch (const UnsupportedCombination& e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        return kExitUnsupported;
    } catch (const InfeasibleEpsilon& e) {
        std::cerr << "allocation infeasible: " << e.what() << "\n";
        return kExitAllocationInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_verify(const RunnerArgs& args) {
    try {
        ensure_out_dir(args.out_dir);
        const std::string golden =
            args.golden_path.empty() ? "tests/golden/allocator_gaps.csv" : args.golden_path;
        const std::vector<verify::CheckResult> results =
            verify::run_suite(args.suite, golden, args.update_golden);
        json report = json::array();
        bool all_passed = true;
        for (const verify::CheckResult& r : results) {
            std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail
                      << "\n";
            report.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
            all_passed = all_passed && r.passed;
        }
        std::ofstream out(out_path(args, "verify_report.json"));
        out << report.dump(2) << '\n';
        return all_passed ? kExitOk : kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_report(const RunnerArgs& args) {
    try {
        if (args.metrics_paths.empty())
            throw std::invalid_argument("report needs at least one metrics file");
        ensure_out_dir(args.out_dir);

        json summary = json::array();
        std::ofstream front(out_path(args, "lambda_vram.csv"));
        front << "scheme,vram_total,lambda\n";
        std::ofstream rounds_csv(out_path(args, "rounds_to_target.csv"));
        rounds_csv << "scheme,rounds_to_target\n";

        std::optional<double> block_scheme_vram;
        std::vector<std::pair<std::string, double>> vram_by_scheme;
        for (const std::string& path : args.metrics_paths) {
            const ParsedMetrics parsed = parse_metrics_csv(path);
            json entry;
            entry["path"] = path;
            entry["scheme"] = parsed.scheme;
            entry["rounds"] = static_cast<int>(parsed.rounds.size());
            entry["comm_up_scalars_total"] = parsed.comm_up;
            entry["comm_down_scalars_total"] = parsed.comm_down;
            entry["vram_total"] = parsed.vram_total;
            entry["lambda"] = parsed.lambda;
            entry["final_train_loss"] = parsed.train_loss.back();

            std::optional<int> rounds_to_target;
            if (args.target_metric && args.target_value) {
                for (size_t i = 0; i < parsed.rounds.size(); ++i) {
                    bool reached = false;
                    if (*args.target_metric == "train_loss")
                        reached = parsed.train_loss[i] <= *args.target_value;
                    else if (parsed.eval_metric[i]) {
                        if (*args.target_metric == "accuracy")
                            reached = *parsed.eval_metric[i] >= *args.target_value;
                        else reached = *parsed.eval_metric[i] <= *args.target_value;
                    }
                    if (reached) {
                        rounds_to_target = parsed.rounds[i];
                        break;
                    }
                }
                if (rounds_to_target) entry["rounds_to_target"] = *rounds_to_target;
                else entry["rounds_to_target"] = "not reached";
            }

            front << parsed.scheme << ',' << fmt(parsed.vram_total) << ','
                  << fmt(parsed.lambda) << '\n';
            rounds_csv << parsed.scheme << ','
                       << (rounds_to_target ? std::to_string(*rounds_to_target)
                                            : std::string("not_reached"))
                       << '\n';
            if (parsed.scheme == "zorba") block_scheme_vram = parsed.vram_total;
            vram_by_scheme.emplace_back(parsed.scheme, parsed.vram_total);
            summary.push_back(entry);
        }

        json document;
        document["runs"] = summary;
        if (block_scheme_vram) {
            json reductions;
            for (const auto& [scheme, vram] : vram_by_scheme) {
                if (scheme == "zorba" || vram <= 0.0) continue;
                reductions[scheme] = 1.0 - *block_scheme_vram / vram;
            }
            document["vram_reduction_vs"] = reductions;
        }
        std::ofstream out(out_path(args, "summary.json"));
        out << document.dump(2) << '\n';
        std::cout << "summarized " << args.metrics_paths.size() << " runs\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace zorba
