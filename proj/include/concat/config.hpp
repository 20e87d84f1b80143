#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "concat/core.hpp"
#include "concat/errors.hpp"
#include "concat/http_backend.hpp"
#include "concat/record_json.hpp"
#include "concat/sim_backend.hpp"

namespace concat {

struct ExperimentConfig {
    std::string dataset;
    TaskKind kind = TaskKind::numeric;
    std::string method = "concat";  // concat | llm_debate | vanilla:<topology> | cot | sc_cot
    std::string backend = "sim";    // sim[:<profile.json>] | http:<endpoint>
    RunConfig run;
    std::string out_dir = "out";
    int repetitions = 3;
    int task_parallelism = 1;
    std::string prompt_dir;  // optional overrides for role prompts
    HttpBackendConfig http;
};

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j{
        {"dataset", cfg.dataset},
        {"kind", to_string(cfg.kind)},
        {"method", cfg.method},
        {"backend", cfg.backend},
        {"run", run_config_to_json(cfg.run)},
        {"out_dir", cfg.out_dir},
        {"repetitions", cfg.repetitions},
        {"task_parallelism", cfg.task_parallelism},
        {"prompt_dir", cfg.prompt_dir},
        {"http",
         {{"endpoint", cfg.http.endpoint},
          {"model", cfg.http.model},
          {"api_key", cfg.http.api_key},
          {"max_retries", cfg.http.max_retries},
          {"timeout_seconds", cfg.http.timeout_seconds}}},
    };
    if (cfg.http.fallback_confidence)
        j["http"]["fallback_confidence"] = *cfg.http.fallback_confidence;
    return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    try {
        cfg.dataset = j.value("dataset", cfg.dataset);
        if (j.contains("kind")) cfg.kind = task_kind_from_string(j["kind"].get<std::string>());
        cfg.method = j.value("method", cfg.method);
        cfg.backend = j.value("backend", cfg.backend);
        if (j.contains("run")) cfg.run = run_config_from_json(j["run"]);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        cfg.repetitions = j.value("repetitions", cfg.repetitions);
        cfg.task_parallelism = j.value("task_parallelism", cfg.task_parallelism);
        cfg.prompt_dir = j.value("prompt_dir", cfg.prompt_dir);
        if (j.contains("http")) {
            const nlohmann::json& h = j["http"];
            cfg.http.endpoint = h.value("endpoint", cfg.http.endpoint);
            cfg.http.model = h.value("model", cfg.http.model);
            cfg.http.api_key = h.value("api_key", cfg.http.api_key);
            cfg.http.max_retries = h.value("max_retries", cfg.http.max_retries);
            cfg.http.timeout_seconds = h.value("timeout_seconds", cfg.http.timeout_seconds);
            if (h.contains("fallback_confidence") && !h["fallback_confidence"].is_null())
                cfg.http.fallback_confidence = h["fallback_confidence"].get<double>();
        }
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("bad experiment config: ") + ex.what());
    }
    return cfg;
}

// Environment wins over the file for endpoint coordinates, so configs can be
// committed without credentials.
inline void apply_env_overrides(ExperimentConfig& cfg) {
    if (const char* v = std::getenv("CONCAT_ENDPOINT")) cfg.http.endpoint = v;
    if (const char* v = std::getenv("CONCAT_MODEL")) cfg.http.model = v;
    if (const char* v = std::getenv("CONCAT_API_KEY")) cfg.http.api_key = v;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open config: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw SchemaError("config is not valid JSON: " + path);
    ExperimentConfig cfg = experiment_config_from_json(j);
    apply_env_overrides(cfg);
    return cfg;
}

inline void save_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write config: " + path);
    out << experiment_config_to_json(cfg).dump(2) << "\n";
}

// Bounds and file-existence checks; throws SchemaError describing the first
// violation.
inline void validate_experiment_config(const ExperimentConfig& cfg) {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (cfg.run.n_agents < 1) throw SchemaError("n_agents must be >= 1");
    if (cfg.run.refinement_rounds < 0) throw SchemaError("refinement_rounds must be >= 0");
    if (cfg.run.alpha <= 0.0) throw SchemaError("alpha must be > 0");
    if (!in01(cfg.run.retention_rate)) throw SchemaError("retention_rate must be in [0,1]");
    if (!in01(cfg.run.theta_sim)) throw SchemaError("theta_sim must be in [0,1]");
    if (!in01(cfg.run.code_cluster_threshold))
        throw SchemaError("code_cluster_threshold must be in [0,1]");
    if (cfg.run.temperature < 0.0) throw SchemaError("temperature must be >= 0");
    if (cfg.run.max_tokens <= 0) throw SchemaError("max_tokens must be > 0");
    if (cfg.run.random_density <= 0.0 || cfg.run.random_density > 1.0)
        throw SchemaError("random_density must be in (0,1]");
    if (cfg.run.max_parallel_calls < 1) throw SchemaError("max_parallel_calls must be >= 1");
    if (cfg.run.sc_cot_samples < 1) throw SchemaError("sc_cot_samples must be >= 1");
    if (cfg.repetitions < 1) throw SchemaError("repetitions must be >= 1");
    if (cfg.task_parallelism < 1) throw SchemaError("task_parallelism must be >= 1");

    if (cfg.method != "concat" && cfg.method != "llm_debate" && cfg.method != "cot" &&
        cfg.method != "sc_cot" && cfg.method.rfind("vanilla:", 0) != 0)
        throw SchemaError("unknown method: " + cfg.method);
    if (cfg.method.rfind("vanilla:", 0) == 0) {
        std::string topo = cfg.method.substr(8);
        if (topo == "debate") throw SchemaError("vanilla topology must not be 'debate'");
        topology_kind_from_string(topo);  // throws on unknown names
    }

    if (cfg.dataset.empty()) throw SchemaError("dataset path is required");
    if (!std::filesystem::exists(cfg.dataset))
        throw SchemaError("dataset does not exist: " + cfg.dataset);
    if (cfg.backend.rfind("sim:", 0) == 0) {
        std::string profile = cfg.backend.substr(4);
        if (!std::filesystem::exists(profile))
            throw SchemaError("sim profile does not exist: " + profile);
    } else if (cfg.backend != "sim" && cfg.backend.rfind("http:", 0) != 0 &&
               cfg.backend.rfind("http://", 0) != 0 && cfg.backend.rfind("https://", 0) != 0) {
        throw SchemaError("unknown backend: " + cfg.backend);
    }
    if (!cfg.prompt_dir.empty() && !std::filesystem::is_directory(cfg.prompt_dir))
        throw SchemaError("prompt_dir is not a directory: " + cfg.prompt_dir);
}

// Instantiate the backend named by the config. "sim" uses a built-in mixed
// population; "sim:<file>" loads profiles; "http:<endpoint>" (or a bare URL)
// targets a live endpoint.
inline std::unique_ptr<AgentBackend> make_backend(const ExperimentConfig& cfg) {
    if (cfg.backend == "sim" || cfg.backend.rfind("sim:", 0) == 0) {
        SimPopulation pop;
        if (cfg.backend.size() > 4) {
            std::string profile_path = cfg.backend.substr(4);
            std::ifstream in(profile_path, std::ios::binary);
            if (!in) throw SchemaError("cannot open sim profile: " + profile_path);
            nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
            if (j.is_discarded())
                throw SchemaError("sim profile is not valid JSON: " + profile_path);
            pop = sim_population_from_json(j);
        } else {
            pop.agents = {
                {0.85, 0.95, 0.10, 0.35, 0.01},
                {0.70, 0.90, 0.25, 0.35, 0.01},
                {0.60, 0.85, 0.35, 0.35, 0.01},
                {0.50, 0.80, 0.45, 0.35, 0.01},
                {0.40, 0.75, 0.55, 0.35, 0.01},
            };
        }
        return std::make_unique<SimBackend>(std::move(pop));
    }
    HttpBackendConfig http = cfg.http;
    if (cfg.backend.rfind("http:", 0) == 0 && cfg.backend.rfind("http://", 0) != 0) {
        std::string rest = cfg.backend.substr(5);
        if (!rest.empty()) http.endpoint = rest;
    } else if (cfg.backend.rfind("http://", 0) == 0 || cfg.backend.rfind("https://", 0) == 0) {
        http.endpoint = cfg.backend;
    }
    return std::make_unique<HttpBackend>(std::move(http));
}

}  // namespace concat
