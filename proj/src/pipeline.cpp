#include "pathrag/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "pathrag/error.hpp"
#include "pathrag/image_io.hpp"
#include "pathrag/prompts.hpp"
#include "pathrag/rng.hpp"

namespace pathrag {

namespace fs = std::filesystem;
using nlohmann::json;

const char* variant_name(Variant variant) {
    switch (variant) {
        case Variant::Baseline: return "baseline";
        case Variant::ConcatAnswers: return "concat_answers";
        case Variant::RagDescription: return "rag_description";
        case Variant::RagAnswer: return "rag_answer";
    }
    return "baseline";
}

std::optional<Variant> variant_from_name(const std::string& name) {
    if (name == "baseline") return Variant::Baseline;
    if (name == "concat_answers") return Variant::ConcatAnswers;
    if (name == "rag_description") return Variant::RagDescription;
    if (name == "rag_answer") return Variant::RagAnswer;
    return std::nullopt;
}

void PipelineConfig::validate() {
    if (variant == Variant::Baseline) num_patches = 0;
    if (num_patches < 0 || num_patches > 9) {
        throw_error(Errc::ConfigError, "num_patches must be in [0, 9]");
    }
}

namespace {

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

ImageArtifacts prepare_image(const RgbImage& image, const std::string& image_id,
                             const PipelineConfig& config, RunStats* stats) {
    ImageArtifacts art;
    art.image_id = image_id;

    // Stage 1: stain normalization (non-fatal on failure: non-tissue
    // images legitimately fail estimation and still flow through the
    // non-pathology path).
    int64_t t0 = now_ms();
    art.working = image;
    if (config.normalization_enabled) {
        if (stats) stats->normalize_calls.fetch_add(1);
        try {
            art.working = normalize_stains(image, config.stain_reference, config.stain_params);
        } catch (const Error& e) {
            art.working = image;
            art.warnings.push_back(std::string("stain normalization skipped: ") + e.what());
        }
    }
    art.timings.normalize_ms = now_ms() - t0;

    // Stage 2: the H&E gate.
    t0 = now_ms();
    if (stats) stats->classify_calls.fetch_add(1);
    std::vector<Nucleus> nuclei = detect_nuclei(art.working, config.detection);
    art.image_class.nuclei_count = static_cast<int>(nuclei.size());
    art.image_class.label = art.image_class.nuclei_count >= config.detection.pathology_threshold
                                ? ImageLabel::HePathology
                                : ImageLabel::NonPathology;
    art.timings.classify_ms = now_ms() - t0;

    if (art.image_class.label == ImageLabel::NonPathology) {
        return art;  // bypass: no graph, no tiling, straight to the answerer
    }

    // Stage 3: the cell graph (diagnostics; ranking uses centroid counts).
    t0 = now_ms();
    if (stats) stats->graph_calls.fetch_add(1);
    art.graph = graph_stats(build_nuclei_graph(nuclei, config.graph));
    art.timings.graph_ms = now_ms() - t0;

    // Stage 4: tile and select patches.
    t0 = now_ms();
    if (stats) stats->tile_calls.fetch_add(1);
    std::vector<Patch> grid = tile_patches(art.working.width, art.working.height);
    if (stats) stats->rank_calls.fetch_add(1);
    if (config.patch_mode == PatchSelectionMode::HistoRanked) {
        art.selected_patches = rank_patches(grid, nuclei, config.num_patches);
    } else {
        uint64_t image_seed = mix_seed(config.random_seed, fnv1a(image_id));
        std::vector<Patch> drawn = random_patches(grid, config.num_patches, image_seed);
        for (size_t i = 0; i < drawn.size(); ++i) {
            art.selected_patches.push_back(
                {drawn[i], count_nuclei_in_patch(drawn[i], nuclei), static_cast<int>(i)});
        }
    }
    art.timings.tile_rank_ms = now_ms() - t0;
    return art;
}

namespace {

struct QueryStats {
    int cache_hits = 0;
    int64_t answerer_ms = 0;
    int64_t reasoner_ms = 0;
};

std::string query_image_text(const RgbImage& target, const std::string& question,
                             Variant variant, const LlmClients& clients, QueryStats& qs) {
    PromptBundle bundle = variant == Variant::RagDescription
                              ? build_description_prompt(target)
                              : build_answer_prompt(question, target);
    int64_t t0 = now_ms();
    try {
        ChatResponse resp = clients.answerer->chat(bundle.rendered);
        qs.answerer_ms += now_ms() - t0;
        if (resp.cached) ++qs.cache_hits;
        return resp.text;
    } catch (const Error& e) {
        throw StageError("answerer", e);
    }
}

std::string join_with_spaces(const std::vector<std::string>& texts) {
    std::string out;
    for (size_t i = 0; i < texts.size(); ++i) {
        if (i > 0) out += ' ';
        out += texts[i];
    }
    return out;
}

}  // namespace

PipelineTrace run_question_on(const ImageArtifacts& art, const std::string& question,
                              const PipelineConfig& config, const LlmClients& clients) {
    if (question.empty()) throw_error(Errc::EmptyQuestion, "pipeline needs a question");

    int64_t run_start = now_ms();
    PipelineTrace trace;
    trace.image_id = art.image_id;
    trace.question = question;
    trace.image_class = art.image_class;
    trace.selected_patches =
        art.image_class.label == ImageLabel::HePathology ? art.selected_patches
                                                         : std::vector<RankedPatch>{};
    trace.graph = art.graph;
    trace.warnings = art.warnings;
    trace.timings = art.timings;
    trace.config_fingerprint = config.config_fingerprint;

    QueryStats qs;

    // Full image first, then the selected patches in rank (or draw) order.
    trace.per_patch_texts.push_back(
        query_image_text(art.working, question, config.variant, clients, qs));
    for (const auto& rp : trace.selected_patches) {
        RgbImage patch_image = crop(art.working, rp.patch);
        trace.per_patch_texts.push_back(
            query_image_text(patch_image, question, config.variant, clients, qs));
    }

    const std::string& full_text = trace.per_patch_texts.front();
    std::vector<std::string> patch_texts(trace.per_patch_texts.begin() + 1,
                                         trace.per_patch_texts.end());

    switch (config.variant) {
        case Variant::Baseline:
            trace.final_answer = full_text;
            break;
        case Variant::ConcatAnswers:
            trace.final_answer = join_with_spaces(trace.per_patch_texts);
            break;
        case Variant::RagAnswer:
            if (patch_texts.empty()) {
                // Zero patches degenerate to the answerer's own reply; the
                // reasoner adds nothing to a single perspective.
                trace.final_answer = full_text;
                break;
            }
            [[fallthrough]];
        case Variant::RagDescription: {
            PromptKind kind = config.variant == Variant::RagAnswer
                                  ? PromptKind::ReasonOverAnswers
                                  : PromptKind::ReasonOverDescriptions;
            PromptBundle bundle = build_reasoning_prompt(kind, question, full_text, patch_texts);
            trace.reasoner_prompt = bundle.rendered.system_text.empty()
                                        ? bundle.rendered.user_text
                                        : bundle.rendered.system_text + "\n\n" +
                                              bundle.rendered.user_text;
            int64_t t0 = now_ms();
            try {
                ChatResponse resp = clients.reasoner->chat(bundle.rendered);
                qs.reasoner_ms += now_ms() - t0;
                if (resp.cached) ++qs.cache_hits;
                trace.final_answer = resp.text;
            } catch (const Error& e) {
                throw StageError("reasoner", e);
            }
            break;
        }
    }

    trace.cache_hits = qs.cache_hits;
    trace.timings.answerer_ms = qs.answerer_ms;
    trace.timings.reasoner_ms = qs.reasoner_ms;
    trace.timings.total_ms = (now_ms() - run_start) + art.timings.normalize_ms +
                             art.timings.classify_ms + art.timings.graph_ms +
                             art.timings.tile_rank_ms;
    if (config.deterministic_timings) trace.timings = StageTimings{};
    return trace;
}

PipelineTrace run_question(const RgbImage& image, const std::string& question,
                           const PipelineConfig& config, const LlmClients& clients,
                           const std::string& image_id) {
    ImageArtifacts art = prepare_image(image, image_id, config);
    return run_question_on(art, question, config, clients);
}

std::vector<PipelineTrace> run_dataset(const std::vector<QaSample>& samples,
                                       const PipelineConfig& config, const LlmClients& clients,
                                       const std::string& base_dir, int workers,
                                       RunStats* stats) {
    std::vector<PipelineTrace> traces(samples.size());
    if (samples.empty()) return traces;

    // One artifact computation per distinct image, shared across questions.
    std::mutex artifacts_mutex;
    std::map<std::string, std::shared_future<std::shared_ptr<ImageArtifacts>>> artifact_futures;

    auto artifacts_for = [&](const QaSample& sample) {
        std::shared_future<std::shared_ptr<ImageArtifacts>> fut;
        bool compute = false;
        std::promise<std::shared_ptr<ImageArtifacts>> promise;
        {
            std::lock_guard lock(artifacts_mutex);
            auto it = artifact_futures.find(sample.image_path);
            if (it == artifact_futures.end()) {
                fut = promise.get_future().share();
                artifact_futures.emplace(sample.image_path, fut);
                compute = true;
            } else {
                fut = it->second;
            }
        }
        if (compute) {
            try {
                std::string stage = "load_image";
                try {
                    fs::path path(sample.image_path);
                    if (path.is_relative()) path = fs::path(base_dir) / path;
                    if (stats) stats->image_loads.fetch_add(1);
                    RgbImage image = load_image(path.string());
                    stage = "prepare_image";
                    auto art = std::make_shared<ImageArtifacts>(
                        prepare_image(image, sample.image_path, config, stats));
                    promise.set_value(std::move(art));
                } catch (const StageError&) {
                    throw;
                } catch (const Error& e) {
                    throw StageError(stage, e);
                }
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return fut.get();  // rethrows the stored failure for every question
    };

    auto process = [&](size_t index) {
        const QaSample& sample = samples[index];
        auto record_failure = [&](const std::string& stage, const char* message) {
            PipelineTrace failed;
            failed.image_id = sample.image_path;
            failed.question = sample.question;
            failed.config_fingerprint = config.config_fingerprint;
            failed.error = TraceErrorRecord{stage, message};
            traces[index] = std::move(failed);
        };
        try {
            std::shared_ptr<ImageArtifacts> art = artifacts_for(sample);
            traces[index] = run_question_on(*art, sample.question, config, clients);
        } catch (const StageError& e) {
            record_failure(e.stage(), e.what());
        } catch (const std::exception& e) {
            record_failure("run_question", e.what());
        }
        traces[index].id = sample.id;
    };

    int pool = std::max(1, workers);
    if (pool == 1) {
        for (size_t i = 0; i < samples.size(); ++i) process(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (int t = 0; t < pool; ++t) {
            threads.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1)) {
                    process(i);
                }
            });
        }
        for (auto& th : threads) th.join();
    }
    return traces;
}

// --------------------------------------------------------- trace (de)serialization

std::string trace_to_json(const PipelineTrace& trace) {
    json doc;
    doc["schema"] = "trace/1";
    doc["id"] = trace.id;
    doc["image_id"] = trace.image_id;
    doc["question"] = trace.question;
    doc["image_class"] = {
        {"label",
         trace.image_class.label == ImageLabel::HePathology ? "he_pathology" : "non_pathology"},
        {"nuclei_count", trace.image_class.nuclei_count},
    };
    doc["selected_patches"] = json::array();
    for (const auto& rp : trace.selected_patches) {
        doc["selected_patches"].push_back({{"index", rp.patch.index},
                                           {"x", rp.patch.x},
                                           {"y", rp.patch.y},
                                           {"width", rp.patch.width},
                                           {"height", rp.patch.height},
                                           {"nuclei_count", rp.nuclei_count},
                                           {"rank", rp.rank}});
    }
    doc["per_patch_texts"] = trace.per_patch_texts;
    if (!trace.reasoner_prompt.empty()) doc["reasoner_prompt"] = trace.reasoner_prompt;
    doc["final_answer"] = trace.final_answer;
    doc["timings_ms"] = {
        {"normalize", trace.timings.normalize_ms}, {"classify", trace.timings.classify_ms},
        {"graph", trace.timings.graph_ms},         {"tile_rank", trace.timings.tile_rank_ms},
        {"answerer", trace.timings.answerer_ms},   {"reasoner", trace.timings.reasoner_ms},
        {"total", trace.timings.total_ms},
    };
    doc["cache_hits"] = trace.cache_hits;
    doc["warnings"] = trace.warnings;
    if (trace.graph.has_value()) {
        doc["graph"] = {{"nodes", trace.graph->node_count},
                        {"edges", trace.graph->edge_count},
                        {"mean_degree", trace.graph->mean_degree},
                        {"max_degree", trace.graph->max_degree},
                        {"components", trace.graph->connected_components}};
    }
    doc["config_fingerprint"] = trace.config_fingerprint;
    if (trace.error.has_value()) {
        doc["error"] = {{"stage", trace.error->stage}, {"message", trace.error->message}};
    }
    return doc.dump();
}

PipelineTrace trace_from_json(const std::string& line) {
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || doc.value("schema", "") != "trace/1") {
        throw_error(Errc::MalformedJson, "not a trace/1 record");
    }
    PipelineTrace trace;
    trace.id = doc.value("id", "");
    trace.image_id = doc.value("image_id", "");
    trace.question = doc.value("question", "");
    if (doc.contains("image_class")) {
        trace.image_class.label = doc["image_class"].value("label", "") == "he_pathology"
                                      ? ImageLabel::HePathology
                                      : ImageLabel::NonPathology;
        trace.image_class.nuclei_count = doc["image_class"].value("nuclei_count", 0);
    }
    for (const auto& item : doc.value("selected_patches", json::array())) {
        RankedPatch rp;
        rp.patch.index = item.value("index", 0);
        rp.patch.x = item.value("x", 0);
        rp.patch.y = item.value("y", 0);
        rp.patch.width = item.value("width", 0);
        rp.patch.height = item.value("height", 0);
        rp.nuclei_count = item.value("nuclei_count", 0);
        rp.rank = item.value("rank", 0);
        trace.selected_patches.push_back(rp);
    }
    trace.per_patch_texts = doc.value("per_patch_texts", std::vector<std::string>{});
    trace.reasoner_prompt = doc.value("reasoner_prompt", "");
    trace.final_answer = doc.value("final_answer", "");
    trace.cache_hits = doc.value("cache_hits", 0);
    trace.warnings = doc.value("warnings", std::vector<std::string>{});
    trace.config_fingerprint = doc.value("config_fingerprint", "");
    if (doc.contains("timings_ms")) {
        const json& t = doc["timings_ms"];
        trace.timings.normalize_ms = t.value("normalize", int64_t{0});
        trace.timings.classify_ms = t.value("classify", int64_t{0});
        trace.timings.graph_ms = t.value("graph", int64_t{0});
        trace.timings.tile_rank_ms = t.value("tile_rank", int64_t{0});
        trace.timings.answerer_ms = t.value("answerer", int64_t{0});
        trace.timings.reasoner_ms = t.value("reasoner", int64_t{0});
        trace.timings.total_ms = t.value("total", int64_t{0});
    }
    if (doc.contains("graph")) {
        GraphStats stats;
        stats.node_count = doc["graph"].value("nodes", 0);
        stats.edge_count = doc["graph"].value("edges", 0);
        stats.mean_degree = doc["graph"].value("mean_degree", 0.0);
        stats.max_degree = doc["graph"].value("max_degree", 0);
        stats.connected_components = doc["graph"].value("components", 0);
        trace.graph = stats;
    }
    if (doc.contains("error")) {
        trace.error =
            TraceErrorRecord{doc["error"].value("stage", ""), doc["error"].value("message", "")};
    }
    return trace;
}

}  // namespace pathrag
