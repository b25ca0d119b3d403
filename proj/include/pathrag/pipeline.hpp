#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pathrag/error.hpp"
#include "pathrag/evaluation.hpp"
#include "pathrag/gateway.hpp"
#include "pathrag/graph.hpp"
#include "pathrag/image.hpp"
#include "pathrag/nuclei.hpp"
#include "pathrag/patching.hpp"
#include "pathrag/stain.hpp"

namespace pathrag {

enum class Variant { Baseline, ConcatAnswers, RagDescription, RagAnswer };
enum class PatchSelectionMode { HistoRanked, Random };

const char* variant_name(Variant variant);
std::optional<Variant> variant_from_name(const std::string& name);

struct PipelineConfig {
    Variant variant = Variant::RagAnswer;
    int num_patches = 3;  // 0..9
    PatchSelectionMode patch_mode = PatchSelectionMode::HistoRanked;
    uint64_t random_seed = 0;
    bool normalization_enabled = true;
    StainReference stain_reference = default_stain_reference();
    StainEstimationParams stain_params{};
    DetectionParams detection{};
    GraphParams graph{};
    std::string config_fingerprint;
    // Mock-backed runs zero all timings so traces are byte-reproducible.
    bool deterministic_timings = false;

    /// Normalizes the config: Baseline forces num_patches to 0; throws
    /// ConfigError for out-of-range values.
    void validate();
};

struct StageTimings {
    int64_t normalize_ms = 0;
    int64_t classify_ms = 0;
    int64_t graph_ms = 0;
    int64_t tile_rank_ms = 0;
    int64_t answerer_ms = 0;
    int64_t reasoner_ms = 0;
    int64_t total_ms = 0;
};

struct TraceErrorRecord {
    std::string stage;
    std::string message;
};

/// An Error tagged with the pipeline stage it escaped from.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.code(), stage + ": " + cause.detail()), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Full record of one question's trip through the pipeline.
struct PipelineTrace {
    std::string id;  // sample id when run from a dataset
    std::string image_id;
    std::string question;
    ImageClass image_class;
    std::vector<RankedPatch> selected_patches;  // empty for non-pathology images
    std::vector<std::string> per_patch_texts;   // full-image text first
    std::string reasoner_prompt;                // empty when the reasoner was not used
    std::string final_answer;
    StageTimings timings;
    int cache_hits = 0;
    std::vector<std::string> warnings;
    std::optional<GraphStats> graph;
    std::string config_fingerprint;
    std::optional<TraceErrorRecord> error;
};

/// One JSON line per trace, schema "trace/1".
std::string trace_to_json(const PipelineTrace& trace);
PipelineTrace trace_from_json(const std::string& line);

struct LlmClients {
    std::shared_ptr<Gateway> answerer;
    std::shared_ptr<Gateway> reasoner;
};

/// Stage counters for memoization checks and diagnostics.
struct RunStats {
    std::atomic<int64_t> normalize_calls{0};
    std::atomic<int64_t> classify_calls{0};
    std::atomic<int64_t> graph_calls{0};
    std::atomic<int64_t> tile_calls{0};
    std::atomic<int64_t> rank_calls{0};
    std::atomic<int64_t> image_loads{0};
};

/// Everything about an image that is independent of the question; one of
/// these is computed per image and shared across its questions.
struct ImageArtifacts {
    std::string image_id;
    RgbImage working;  // normalized when enabled and estimation succeeded
    ImageClass image_class;
    std::vector<RankedPatch> selected_patches;
    std::optional<GraphStats> graph;
    std::vector<std::string> warnings;
    StageTimings timings;  // normalize/classify/graph/tile_rank filled
};

ImageArtifacts prepare_image(const RgbImage& image, const std::string& image_id,
                             const PipelineConfig& config, RunStats* stats = nullptr);

/// Runs one question over prepared artifacts.
PipelineTrace run_question_on(const ImageArtifacts& artifacts, const std::string& question,
                              const PipelineConfig& config, const LlmClients& clients);

/// Convenience entry point: prepare + run.
PipelineTrace run_question(const RgbImage& image, const std::string& question,
                           const PipelineConfig& config, const LlmClients& clients,
                           const std::string& image_id = "image");

/// Order-preserving dataset run. Per-image artifacts are computed once and
/// shared across that image's questions; per-sample failures are recorded
/// in the trace without aborting the run. Image paths resolve relative to
/// `base_dir` when not absolute.
std::vector<PipelineTrace> run_dataset(const std::vector<QaSample>& samples,
                                       const PipelineConfig& config, const LlmClients& clients,
                                       const std::string& base_dir = ".", int workers = 1,
                                       RunStats* stats = nullptr);

}  // namespace pathrag
