#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "pathrag/pipeline.hpp"

namespace pathrag {

struct ModelEndpoint {
    std::string base_url;
    std::string model_id;
    double temperature = 0.0;
};

/// Merged view of every module's configuration. A JSON config file sets
/// base values; CLI flags override them; the canonical fingerprint of the
/// effective config is echoed into every trace and report.
struct RunConfig {
    std::string backend = "mock";  // mock | http
    ModelEndpoint answerer{"", "llava-med", 0.0};
    ModelEndpoint reasoner{"", "gpt-4-0125-preview", 0.0};
    std::string api_key_env = "PATHRAG_API_KEY";
    std::string cache_dir;
    int concurrency = 4;  // gateway in-flight limit
    int workers = 1;      // dataset worker pool
    int timeout_ms = 60000;
    int max_retries = 3;

    std::string variant = "rag_answer";
    int num_patches = 3;
    std::string patch_mode = "histo";  // histo | random
    uint64_t seed = 0;

    bool normalization_enabled = true;
    StainReference stain_reference = default_stain_reference();
    StainEstimationParams stain_params{};
    DetectionParams detection{};
    GraphParams graph{};
};

/// Read a JSON config file over the defaults. Unknown keys are rejected.
RunConfig load_run_config(const std::string& path);

/// Canonical JSON form (sorted keys, every field present).
nlohmann::json run_config_to_json(const RunConfig& config);

/// First 16 hex chars of the SHA-256 of the canonical form.
std::string config_fingerprint(const RunConfig& config);

/// Throws ConfigError for inconsistent settings (bad variant name, http
/// backend without endpoints or API key, out-of-range values).
void validate_run_config(const RunConfig& config);

PipelineConfig to_pipeline_config(const RunConfig& config);

/// Builds the answerer and reasoner gateways (plus their shared cache).
/// Mock backends need no endpoints; http requires base URLs and the API
/// key env var to be set.
LlmClients make_clients(const RunConfig& config);

}  // namespace pathrag
