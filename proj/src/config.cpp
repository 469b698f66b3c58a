#include "zorba/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace zorba {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
}

PerturbationMode perturbation_mode_from_name(const std::string& name) {
    if (name == "unit_sphere") return PerturbationMode::UnitSphere;
    if (name == "raw_gaussian") return PerturbationMode::RawGaussian;
    throw std::invalid_argument("config: unknown perturbation_mode '" + name + "'");
}

const char* perturbation_mode_name(PerturbationMode m) {
    return m == PerturbationMode::UnitSphere ? "unit_sphere" : "raw_gaussian";
}

DiffScheme diff_scheme_from_name(const std::string& name) {
    if (name == "forward") return DiffScheme::Forward;
    if (name == "central") return DiffScheme::Central;
    throw std::invalid_argument("config: unknown diff_scheme '" + name + "'");
}

MaskMode mask_mode_from_name(const std::string& name) {
    if (name == "activated_only") return MaskMode::ActivatedOnly;
    if (name == "full_vector") return MaskMode::FullVector;
    throw std::invalid_argument("config: unknown mask_mode '" + name + "'");
}

SyntheticKind synthetic_kind_from_name(const std::string& name) {
    if (name == "tokens") return SyntheticKind::Tokens;
    if (name == "blobs") return SyntheticKind::Blobs;
    throw std::invalid_argument("config: unknown data kind '" + name + "'");
}

SelectionPolicy policy_from_json(const json& j) {
    SelectionPolicy policy;
    reject_unknown_keys(j, {"kind", "delta", "cap"}, "allocator.policy");
    const std::string kind = j.value("kind", "min_vram_within_delta");
    if (kind == "min_vram_within_delta") policy.kind = SelectionPolicy::Kind::MinVramWithinDelta;
    else if (kind == "vram_budget") policy.kind = SelectionPolicy::Kind::VramBudget;
    else if (kind == "min_lambda") policy.kind = SelectionPolicy::Kind::MinLambda;
    else throw std::invalid_argument("config: unknown policy kind '" + kind + "'");
    policy.delta = j.value("delta", 0.05);
    policy.cap = j.value("cap", 0.0);
    return policy;
}

json policy_to_json(const SelectionPolicy& policy) {
    json j;
    switch (policy.kind) {
        case SelectionPolicy::Kind::MinVramWithinDelta: j["kind"] = "min_vram_within_delta"; break;
        case SelectionPolicy::Kind::VramBudget: j["kind"] = "vram_budget"; break;
        case SelectionPolicy::Kind::MinLambda: j["kind"] = "min_lambda"; break;
    }
    j["delta"] = policy.delta;
    j["cap"] = policy.cap;
    return j;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (rounds < 1) throw std::invalid_argument("config: rounds must be >= 1");
    if (clients < 1) throw std::invalid_argument("config: clients must be >= 1");
    if (perturbations_per_round < 1) throw std::invalid_argument("config: Q must be >= 1");
    if (seed_pool_size < perturbations_per_round)
        throw std::invalid_argument("config: seed pool smaller than Q");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (eta <= 0.0) throw std::invalid_argument("config: eta must be positive");
    if (mu <= 0.0) throw std::invalid_argument("config: mu must be positive");
    if (eval_interval < 1) throw std::invalid_argument("config: eval_interval must be >= 1");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");

    if (backend == ModelBackend::Quadratic) {
        if (quadratic.dimension < 1 || quadratic.blocks < 1 ||
            quadratic.blocks > quadratic.dimension)
            throw std::invalid_argument("config: bad quadratic dimensions");
        if (quadratic.noise_sigma < 0.0)
            throw std::invalid_argument("config: negative noise sigma");
    } else {
        transformer.validate();
        if (scheme == Scheme::FedIt)
            throw UnsupportedCombination("config: fedit runs only on the quadratic backend");
        if (data.jsonl_path.empty()) {
            if (data.size < clients)
                throw std::invalid_argument("config: dataset smaller than client count");
            if (data.holdout_fraction < 0.0 || data.holdout_fraction >= 1.0)
                throw std::invalid_argument("config: holdout_fraction outside [0, 1)");
        }
        if (data.concentration <= 0.0)
            throw std::invalid_argument("config: Dirichlet concentration must be positive");
    }
    arch.validate();

    const int M = arch.blocks;
    if (!vram.psi_max.empty() && static_cast<int>(vram.psi_max.size()) != clients)
        throw std::invalid_argument("config: psi_max length != client count");
    if (vram.uniform_min || vram.uniform_max) {
        if (!vram.uniform_min || !vram.uniform_max)
            throw std::invalid_argument("config: capacity range needs both min and max");
        if (*vram.uniform_min < 1.0 || *vram.uniform_max < *vram.uniform_min)
            throw std::invalid_argument("config: bad capacity range");
    }
    if (allocator.samples < 1) throw std::invalid_argument("config: allocator samples < 1");
    if (allocation_rows) {
        const ActivationMatrix A = ActivationMatrix::from_row_strings(*allocation_rows);
        if (A.blocks() != M || A.clients() != clients)
            throw std::invalid_argument("config: allocation matrix shape mismatch");
        A.validate();
    }
    if (target) {
        if (target->metric != "accuracy" && target->metric != "eval_loss" &&
            target->metric != "train_loss")
            throw std::invalid_argument("config: unknown target metric '" + target->metric + "'");
    }
}

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;
    reject_unknown_keys(j,
                        {"scheme", "rounds", "clients", "perturbations_per_round",
                         "seed_pool_size", "batch_size", "eta", "mu", "eval_interval",
                         "perturbation_mode", "diff_scheme", "mask_mode",
                         "batch_per_perturbation", "threads", "seeds", "model", "data", "arch",
                         "vram", "allocator", "allocation_rows", "target", "reference_targets"},
                        "top level");
    c.scheme = scheme_from_name(j.value("scheme", "zorba"));
    c.rounds = j.value("rounds", 500);
    c.clients = j.value("clients", 50);
    c.perturbations_per_round = j.value("perturbations_per_round", 10);
    c.seed_pool_size = j.value("seed_pool_size", 4096);
    c.batch_size = j.value("batch_size", 8);
    c.eta = j.value("eta", 5e-5);
    c.mu = j.value("mu", 1e-4);
    c.eval_interval = j.value("eval_interval", 10);
    c.perturbation_mode =
        perturbation_mode_from_name(j.value("perturbation_mode", "unit_sphere"));
    c.diff_scheme = diff_scheme_from_name(j.value("diff_scheme", "forward"));
    c.mask_mode = mask_mode_from_name(j.value("mask_mode", "activated_only"));
    c.batch_per_perturbation = j.value("batch_per_perturbation", false);
    c.threads = j.value("threads", 1);

    if (j.contains("seeds")) {
        const json& s = j["seeds"];
        reject_unknown_keys(s, {"master", "data", "sweep"}, "seeds");
        c.seeds.master = s.value("master", uint64_t{1});
        c.seeds.data = s.value("data", uint64_t{2});
        c.seeds.sweep = s.value("sweep", uint64_t{3});
    }

    if (j.contains("model")) {
        const json& m = j["model"];
        reject_unknown_keys(m,
                            {"backend", "dimension", "blocks", "noise_sigma", "target_scale",
                             "target_spread", "init_scale", "vocab", "hidden", "heads",
                             "ffn_ratio", "max_seq_len", "classes", "init_seed"},
                            "model");
        const std::string backend = m.value("backend", "tiny_transformer");
        if (backend == "quadratic") {
            c.backend = ModelBackend::Quadratic;
            c.quadratic.dimension = m.value("dimension", int64_t{32});
            c.quadratic.blocks = m.value("blocks", 4);
            c.quadratic.noise_sigma = m.value("noise_sigma", 0.0);
            c.quadratic.target_scale = m.value("target_scale", 1.0);
            c.quadratic.target_spread = m.value("target_spread", 0.0);
            c.quadratic.init_scale = m.value("init_scale", 1.0);
        } else if (backend == "tiny_transformer") {
            c.backend = ModelBackend::TinyTransformer;
            c.transformer.vocab = m.value("vocab", 256);
            c.transformer.hidden = m.value("hidden", 32);
            c.transformer.heads = m.value("heads", 2);
            c.transformer.blocks = m.value("blocks", 4);
            c.transformer.ffn_ratio = m.value("ffn_ratio", 4);
            c.transformer.max_seq_len = m.value("max_seq_len", 16);
            c.transformer.classes = m.value("classes", 4);
            c.transformer.init_seed = m.value("init_seed", uint64_t{1});
        } else {
            throw std::invalid_argument("config: unknown backend '" + backend + "'");
        }
    }

    if (j.contains("data")) {
        const json& d = j["data"];
        reject_unknown_keys(d,
                            {"kind", "path", "size", "holdout_fraction", "concentration",
                             "signal", "features"},
                            "data");
        c.data.kind = synthetic_kind_from_name(d.value("kind", "tokens"));
        c.data.jsonl_path = d.value("path", std::string{});
        c.data.size = d.value("size", 2000);
        c.data.holdout_fraction = d.value("holdout_fraction", 0.2);
        c.data.concentration = d.value("concentration", 1.0);
        c.data.signal = d.value("signal", 0.5);
        c.data.features = d.value("features", 16);
    }

    // VRAM-accounting shape: defaults follow the model backend.
    c.arch.batch_size = c.batch_size;
    if (c.backend == ModelBackend::TinyTransformer) {
        c.arch.seq_len = c.transformer.max_seq_len;
        c.arch.hidden = c.transformer.hidden;
        c.arch.heads = c.transformer.heads;
        c.arch.ffn_ratio = c.transformer.ffn_ratio;
        c.arch.blocks = c.transformer.blocks;
    } else {
        c.arch.blocks = c.quadratic.blocks;
    }
    if (j.contains("arch")) {
        const json& a = j["arch"];
        reject_unknown_keys(a, {"batch_size", "seq_len", "hidden", "heads", "ffn_ratio", "blocks"},
                            "arch");
        c.arch.batch_size = a.value("batch_size", c.arch.batch_size);
        c.arch.seq_len = a.value("seq_len", c.arch.seq_len);
        c.arch.hidden = a.value("hidden", c.arch.hidden);
        c.arch.heads = a.value("heads", c.arch.heads);
        c.arch.ffn_ratio = a.value("ffn_ratio", c.arch.ffn_ratio);
        c.arch.blocks = a.value("blocks", c.arch.blocks);
    }

    if (j.contains("vram")) {
        const json& v = j["vram"];
        reject_unknown_keys(
            v, {"psi_max", "psi_max_blocks_uniform", "psi_md_override", "capacity_seed"}, "vram");
        if (v.contains("psi_max")) c.vram.psi_max = v["psi_max"].get<std::vector<double>>();
        if (v.contains("psi_max_blocks_uniform")) {
            const json& u = v["psi_max_blocks_uniform"];
            reject_unknown_keys(u, {"min", "max"}, "vram.psi_max_blocks_uniform");
            c.vram.uniform_min = u.value("min", 1.0);
            c.vram.uniform_max = u.value("max", static_cast<double>(c.arch.blocks));
        }
        if (v.contains("psi_md_override"))
            c.vram.psi_md_override = v["psi_md_override"].get<double>();
        c.vram.capacity_seed = v.value("capacity_seed", uint64_t{0});
    }

    if (j.contains("allocator")) {
        const json& a = j["allocator"];
        reject_unknown_keys(a, {"samples", "include_tau_zero", "per_client_tau", "policy"},
                            "allocator");
        c.allocator.samples = a.value("samples", 1000);
        c.allocator.include_tau_zero = a.value("include_tau_zero", true);
        c.allocator.per_client_tau = a.value("per_client_tau", false);
        if (a.contains("policy")) c.allocator.policy = policy_from_json(a["policy"]);
    }

    if (j.contains("allocation_rows")) {
        std::vector<std::string> rows;
        for (const json& row : j["allocation_rows"]) {
            if (row.is_string()) {
                rows.push_back(row.get<std::string>());
            } else {
                std::string s;
                for (const json& cell : row) s += cell.get<int>() ? '1' : '0';
                rows.push_back(std::move(s));
            }
        }
        c.allocation_rows = std::move(rows);
    }

    if (j.contains("target")) {
        const json& t = j["target"];
        reject_unknown_keys(t, {"metric", "value"}, "target");
        TargetConfig target;
        target.metric = t.value("metric", "accuracy");
        target.value = t.value("value", 0.8);
        c.target = target;
    }
    if (j.contains("reference_targets")) c.reference_targets = j["reference_targets"];

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json j;
    in >> j;
    return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    json j;
    j["scheme"] = scheme_name(c.scheme);
    j["rounds"] = c.rounds;
    j["clients"] = c.clients;
    j["perturbations_per_round"] = c.perturbations_per_round;
    j["seed_pool_size"] = c.seed_pool_size;
    j["batch_size"] = c.batch_size;
    j["eta"] = c.eta;
    j["mu"] = c.mu;
    j["eval_interval"] = c.eval_interval;
    j["perturbation_mode"] = perturbation_mode_name(c.perturbation_mode);
    j["diff_scheme"] = c.diff_scheme == DiffScheme::Forward ? "forward" : "central";
    j["mask_mode"] =
        c.mask_mode == MaskMode::ActivatedOnly ? "activated_only" : "full_vector";
    j["batch_per_perturbation"] = c.batch_per_perturbation;
    j["threads"] = c.threads;
    j["seeds"] = {{"master", c.seeds.master}, {"data", c.seeds.data}, {"sweep", c.seeds.sweep}};

    json m;
    if (c.backend == ModelBackend::Quadratic) {
        m["backend"] = "quadratic";
        m["dimension"] = c.quadratic.dimension;
        m["blocks"] = c.quadratic.blocks;
        m["noise_sigma"] = c.quadratic.noise_sigma;
        m["target_scale"] = c.quadratic.target_scale;
        m["target_spread"] = c.quadratic.target_spread;
        m["init_scale"] = c.quadratic.init_scale;
    } else {
        m["backend"] = "tiny_transformer";
        m["vocab"] = c.transformer.vocab;
        m["hidden"] = c.transformer.hidden;
        m["heads"] = c.transformer.heads;
        m["blocks"] = c.transformer.blocks;
        m["ffn_ratio"] = c.transformer.ffn_ratio;
        m["max_seq_len"] = c.transformer.max_seq_len;
        m["classes"] = c.transformer.classes;
        m["init_seed"] = c.transformer.init_seed;
    }
    j["model"] = m;

    if (c.backend == ModelBackend::TinyTransformer) {
        json d;
        d["kind"] = c.data.kind == SyntheticKind::Tokens ? "tokens" : "blobs";
        if (!c.data.jsonl_path.empty()) d["path"] = c.data.jsonl_path;
        d["size"] = c.data.size;
        d["holdout_fraction"] = c.data.holdout_fraction;
        d["concentration"] = c.data.concentration;
        d["signal"] = c.data.signal;
        d["features"] = c.data.features;
        j["data"] = d;
    }

    j["arch"] = {{"batch_size", c.arch.batch_size}, {"seq_len", c.arch.seq_len},
                 {"hidden", c.arch.hidden},         {"heads", c.arch.heads},
                 {"ffn_ratio", c.arch.ffn_ratio},   {"blocks", c.arch.blocks}};

    json v;
    if (!c.vram.psi_max.empty()) v["psi_max"] = c.vram.psi_max;
    if (c.vram.uniform_min)
        v["psi_max_blocks_uniform"] = {{"min", *c.vram.uniform_min},
                                       {"max", *c.vram.uniform_max}};
    if (c.vram.psi_md_override) v["psi_md_override"] = *c.vram.psi_md_override;
    v["capacity_seed"] = c.vram.capacity_seed;
    j["vram"] = v;

    j["allocator"] = {{"samples", c.allocator.samples},
                      {"include_tau_zero", c.allocator.include_tau_zero},
                      {"per_client_tau", c.allocator.per_client_tau},
                      {"policy", policy_to_json(c.allocator.policy)}};
    if (c.allocation_rows) j["allocation_rows"] = *c.allocation_rows;
    if (c.target) j["target"] = {{"metric", c.target->metric}, {"value", c.target->value}};
    if (!c.reference_targets.is_null()) j["reference_targets"] = c.reference_targets;
    return j;
}

uint64_t config_hash(const ExperimentConfig& config) {
    const std::string dump = config_to_json(config).dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : dump) h = (h ^ static_cast<uint8_t>(ch)) * 0x100000001b3ULL;
    return h;
}

ActivationMatrix activation_from_json(const nlohmann::json& rows) {
    std::vector<std::vector<int>> parsed;
    for (const json& row : rows) {
        if (row.is_string()) {
            std::vector<int> r;
            for (char ch : row.get<std::string>()) {
                if (ch != '0' && ch != '1')
                    throw std::invalid_argument("activation rows: expected 0/1 characters");
                r.push_back(ch - '0');
            }
            parsed.push_back(std::move(r));
        } else {
            parsed.push_back(row.get<std::vector<int>>());
        }
    }
    return ActivationMatrix::from_rows(parsed);
}

nlohmann::json activation_to_json(const ActivationMatrix& matrix) {
    json rows = json::array();
    for (int m = 0; m < matrix.blocks(); ++m) {
        json row = json::array();
        for (int n = 0; n < matrix.clients(); ++n) row.push_back(static_cast<int>(matrix.at(m, n)));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace zorba
