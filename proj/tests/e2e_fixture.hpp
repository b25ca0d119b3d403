#pragma once

// Shared end-to-end scenario for the golden generator, the acceptance
// suite, and the CLI tests: three synthetic images, two questions each,
// run through every variant with the mock backend.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "pathrag/evaluation.hpp"
#include "pathrag/image_io.hpp"
#include "pathrag/pipeline.hpp"
#include "pathrag/run_config.hpp"

namespace e2e {

namespace fs = std::filesystem;
using namespace pathrag;

inline const char* kVariants[4] = {"baseline", "concat_answers", "rag_description",
                                   "rag_answer"};

/// Writes the three images and the dataset file into `dir`; returns the
/// dataset path. Contents are bit-deterministic.
inline fs::path write_scenario(const fs::path& dir) {
    fs::create_directories(dir);

    // img_a: tissue-like, many nuclei, stain estimation succeeds
    save_png(fixtures::tissue_fixture(101, 260, 220, 24), (dir / "img_a.png").string());
    // img_b: plain disks, estimation degenerates (warning path), still H&E
    save_png(fixtures::disk_fixture(200, 170,
                                    {{30, 30}, {80, 40}, {140, 35}, {60, 100}, {120, 130},
                                     {170, 80}, {40, 140}},
                                    6.0),
             (dir / "img_b.png").string());
    // img_c: blank white, non-pathology bypass
    save_png(fixtures::white_image(150, 120), (dir / "img_c.png").string());

    fs::path dataset = dir / "dataset.jsonl";
    std::ofstream out(dataset);
    out << R"({"id":"s1","image":"img_a.png","question":"what is shown in the image?","answer":"mock answer"})"
        << "\n"
        << R"({"id":"s2","image":"img_a.png","question":"where are the nuclei concentrated?","answer":"tubules"})"
        << "\n"
        << R"({"id":"s3","image":"img_b.png","question":"what structures are visible?","answer":"mock image","he":true})"
        << "\n"
        << R"({"id":"s4","image":"img_b.png","question":"where is the staining strongest?","answer":"answers over mock"})"
        << "\n"
        << R"({"id":"s5","image":"img_c.png","question":"what tissue is this?","answer":"zebra"})"
        << "\n"
        << R"({"id":"s6","image":"img_c.png","question":"where is the lesion?","answer":"mock","he":true})"
        << "\n";
    return dataset;
}

inline RunConfig scenario_config(const std::string& variant) {
    RunConfig config;
    config.backend = "mock";
    config.variant = variant;
    config.num_patches = variant == "baseline" ? 0 : 3;
    config.workers = 1;
    config.seed = 0;
    return config;
}

struct VariantRun {
    std::vector<PipelineTrace> traces;
    std::string traces_jsonl;
    std::string report_json;
    int64_t answerer_requests = 0;
    int64_t reasoner_requests = 0;
};

/// he-label priority: dataset label wins, else the trace's image class.
inline bool he_label_for(const QaSample& sample, const PipelineTrace& trace) {
    if (sample.he_label.has_value()) return *sample.he_label;
    return trace.image_class.label == ImageLabel::HePathology;
}

inline VariantRun run_variant(const fs::path& dataset, const std::string& variant) {
    RunConfig config = scenario_config(variant);
    LlmClients clients = make_clients(config);
    PipelineConfig pipeline_config = to_pipeline_config(config);

    std::vector<QaSample> samples = load_dataset(dataset.string(), SourceGroup::PathVqa);
    VariantRun run;
    run.traces = run_dataset(samples, pipeline_config, clients,
                             dataset.parent_path().string(), config.workers);
    for (const auto& trace : run.traces) {
        run.traces_jsonl += trace_to_json(trace);
        run.traces_jsonl += '\n';
    }

    std::vector<double> recalls;
    std::vector<bool> labels;
    for (size_t i = 0; i < samples.size(); ++i) {
        recalls.push_back(recall(run.traces[i].final_answer, samples[i].gold_answer));
        labels.push_back(he_label_for(samples[i], run.traces[i]));
    }
    EvalReport report = aggregate(samples, recalls, labels);
    report.method = variant;
    report.config_fingerprint = pipeline_config.config_fingerprint;
    run.report_json = render_report(report, ReportFormat::Json);

    run.answerer_requests = clients.answerer->counters().requests.load();
    run.reasoner_requests = clients.reasoner->counters().requests.load();
    return run;
}

}  // namespace e2e
