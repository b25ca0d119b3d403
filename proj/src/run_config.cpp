#include "pathrag/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "pathrag/digest.hpp"
#include "pathrag/error.hpp"

namespace pathrag {

using nlohmann::json;

namespace {

void read_endpoint(const json& obj, const char* key, ModelEndpoint& endpoint) {
    if (!obj.contains(key)) return;
    const json& e = obj.at(key);
    endpoint.base_url = e.value("base_url", endpoint.base_url);
    endpoint.model_id = e.value("model_id", endpoint.model_id);
    endpoint.temperature = e.value("temperature", endpoint.temperature);
}

std::array<double, 3> read_vec3(const json& arr, const std::array<double, 3>& fallback) {
    if (!arr.is_array() || arr.size() != 3) return fallback;
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_error(Errc::FileNotFound, path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw_error(Errc::ConfigError, path + " is not a JSON object");
    }

    static const std::set<std::string> known = {
        "backend",    "answerer",   "reasoner",     "api_key_env", "cache_dir",
        "concurrency", "workers",   "timeout_ms",   "max_retries", "variant",
        "num_patches", "patch_mode", "seed",        "normalization", "detection",
        "graph"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) {
            throw_error(Errc::ConfigError, "unknown config key: " + key);
        }
    }

    RunConfig config;
    config.backend = doc.value("backend", config.backend);
    read_endpoint(doc, "answerer", config.answerer);
    read_endpoint(doc, "reasoner", config.reasoner);
    config.api_key_env = doc.value("api_key_env", config.api_key_env);
    config.cache_dir = doc.value("cache_dir", config.cache_dir);
    config.concurrency = doc.value("concurrency", config.concurrency);
    config.workers = doc.value("workers", config.workers);
    config.timeout_ms = doc.value("timeout_ms", config.timeout_ms);
    config.max_retries = doc.value("max_retries", config.max_retries);
    config.variant = doc.value("variant", config.variant);
    config.num_patches = doc.value("num_patches", config.num_patches);
    config.patch_mode = doc.value("patch_mode", config.patch_mode);
    config.seed = doc.value("seed", config.seed);

    if (doc.contains("normalization")) {
        const json& n = doc["normalization"];
        config.normalization_enabled = n.value("enabled", config.normalization_enabled);
        config.stain_params.od_threshold =
            n.value("od_threshold", config.stain_params.od_threshold);
        config.stain_params.alpha_percentile =
            n.value("alpha_percentile", config.stain_params.alpha_percentile);
        if (n.contains("reference")) {
            const json& r = n["reference"];
            config.stain_reference.matrix.hematoxylin = read_vec3(
                r.value("hematoxylin", json()), config.stain_reference.matrix.hematoxylin);
            config.stain_reference.matrix.eosin =
                read_vec3(r.value("eosin", json()), config.stain_reference.matrix.eosin);
            if (r.contains("max_concentrations") && r["max_concentrations"].is_array() &&
                r["max_concentrations"].size() == 2) {
                config.stain_reference.max_concentrations = {
                    r["max_concentrations"][0].get<double>(),
                    r["max_concentrations"][1].get<double>()};
            }
        }
    }
    if (doc.contains("detection")) {
        const json& d = doc["detection"];
        config.detection.min_area = d.value("min_area", config.detection.min_area);
        config.detection.max_area = d.value("max_area", config.detection.max_area);
        config.detection.pathology_threshold =
            d.value("pathology_threshold", config.detection.pathology_threshold);
    }
    if (doc.contains("graph")) {
        const json& g = doc["graph"];
        config.graph.k = g.value("k", config.graph.k);
        config.graph.max_distance = g.value("max_distance", config.graph.max_distance);
    }
    return config;
}

nlohmann::json run_config_to_json(const RunConfig& config) {
    json doc;
    doc["backend"] = config.backend;
    doc["answerer"] = {{"base_url", config.answerer.base_url},
                       {"model_id", config.answerer.model_id},
                       {"temperature", config.answerer.temperature}};
    doc["reasoner"] = {{"base_url", config.reasoner.base_url},
                       {"model_id", config.reasoner.model_id},
                       {"temperature", config.reasoner.temperature}};
    doc["api_key_env"] = config.api_key_env;
    doc["cache_dir"] = config.cache_dir;
    doc["concurrency"] = config.concurrency;
    doc["workers"] = config.workers;
    doc["timeout_ms"] = config.timeout_ms;
    doc["max_retries"] = config.max_retries;
    doc["variant"] = config.variant;
    doc["num_patches"] = config.num_patches;
    doc["patch_mode"] = config.patch_mode;
    doc["seed"] = config.seed;
    doc["normalization"] = {
        {"enabled", config.normalization_enabled},
        {"od_threshold", config.stain_params.od_threshold},
        {"alpha_percentile", config.stain_params.alpha_percentile},
        {"reference",
         {{"hematoxylin", config.stain_reference.matrix.hematoxylin},
          {"eosin", config.stain_reference.matrix.eosin},
          {"max_concentrations", config.stain_reference.max_concentrations}}},
    };
    doc["detection"] = {{"min_area", config.detection.min_area},
                        {"max_area", config.detection.max_area},
                        {"pathology_threshold", config.detection.pathology_threshold}};
    doc["graph"] = {{"k", config.graph.k}, {"max_distance", config.graph.max_distance}};
    return doc;
}

std::string config_fingerprint(const RunConfig& config) {
    return sha256_hex(run_config_to_json(config).dump()).substr(0, 16);
}

void validate_run_config(const RunConfig& config) {
    if (config.backend != "mock" && config.backend != "http") {
        throw_error(Errc::ConfigError, "backend must be mock or http");
    }
    if (!variant_from_name(config.variant).has_value()) {
        throw_error(Errc::ConfigError, "unknown variant: " + config.variant);
    }
    if (config.patch_mode != "histo" && config.patch_mode != "random") {
        throw_error(Errc::ConfigError, "patch_mode must be histo or random");
    }
    if (config.num_patches < 0 || config.num_patches > 9) {
        throw_error(Errc::ConfigError, "num_patches must be in [0, 9]");
    }
    if (config.concurrency < 1 || config.workers < 1) {
        throw_error(Errc::ConfigError, "concurrency and workers must be >= 1");
    }
    if (config.backend == "http") {
        if (config.answerer.base_url.empty() || config.reasoner.base_url.empty()) {
            throw_error(Errc::ConfigError, "http backend needs answerer/reasoner base_url");
        }
        const char* key = std::getenv(config.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw_error(Errc::ConfigError,
                        "http backend needs the API key env var " + config.api_key_env);
        }
    }
}

PipelineConfig to_pipeline_config(const RunConfig& config) {
    PipelineConfig pc;
    pc.variant = variant_from_name(config.variant).value_or(Variant::RagAnswer);
    pc.num_patches = config.num_patches;
    pc.patch_mode = config.patch_mode == "random" ? PatchSelectionMode::Random
                                                  : PatchSelectionMode::HistoRanked;
    pc.random_seed = config.seed;
    pc.normalization_enabled = config.normalization_enabled;
    pc.stain_reference = config.stain_reference;
    pc.stain_params = config.stain_params;
    pc.detection = config.detection;
    pc.graph = config.graph;
    pc.config_fingerprint = config_fingerprint(config);
    pc.deterministic_timings = config.backend == "mock";
    pc.validate();
    return pc;
}

LlmClients make_clients(const RunConfig& config) {
    validate_run_config(config);
    auto cache = std::make_shared<ResponseCache>(config.cache_dir);

    auto make_gateway = [&](const ModelEndpoint& endpoint) {
        std::shared_ptr<Backend> backend;
        if (config.backend == "mock") {
            backend = std::make_shared<MockBackend>();
        } else {
            HttpBackendOptions options;
            options.base_url = endpoint.base_url;
            options.timeout_ms = config.timeout_ms;
            const char* key = std::getenv(config.api_key_env.c_str());
            options.api_key = key ? key : "";
            backend = std::make_shared<HttpBackend>(options);
        }
        GatewayOptions options;
        options.model_id = endpoint.model_id;
        options.temperature = endpoint.temperature;
        options.max_retries = config.max_retries;
        options.concurrency = config.concurrency;
        return std::make_shared<Gateway>(backend, cache, options);
    };

    LlmClients clients;
    clients.answerer = make_gateway(config.answerer);
    clients.reasoner = make_gateway(config.reasoner);
    return clients;
}

}  // namespace pathrag
