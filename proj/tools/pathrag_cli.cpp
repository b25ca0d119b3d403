// pathrag: batch pipeline for pathology VQA experiments.
//
// Subcommands expose every stage (classify, patches, graph) plus full
// dataset runs, evaluation, and QA dataset generation. All outputs are
// JSON or JSON-lines and embed the effective-config fingerprint.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pathrag/arch_open.hpp"
#include "pathrag/error.hpp"
#include "pathrag/evaluation.hpp"
#include "pathrag/graph.hpp"
#include "pathrag/image_io.hpp"
#include "pathrag/nuclei.hpp"
#include "pathrag/patching.hpp"
#include "pathrag/pipeline.hpp"
#include "pathrag/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pathrag;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> backend;
    std::optional<std::string> cache_dir;
    std::optional<int> workers;
    std::optional<uint64_t> seed;
};

RunConfig effective_config(const CommonFlags& flags) {
    RunConfig config;
    if (!flags.config_path.empty()) config = load_run_config(flags.config_path);
    if (flags.backend) config.backend = *flags.backend;
    if (flags.cache_dir) config.cache_dir = *flags.cache_dir;
    if (flags.workers) config.workers = *flags.workers;
    if (flags.seed) config.seed = *flags.seed;
    return config;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw_error(Errc::FileNotFound, path + ": cannot open for writing");
    out << text;
}

// ------------------------------------------------------------- classify

int cmd_classify(const std::vector<std::string>& images, const CommonFlags& flags,
                 const std::string& format) {
    RunConfig config = effective_config(flags);
    std::string fingerprint = config_fingerprint(config);
    int failures = 0;
    for (const auto& path : images) {
        try {
            RgbImage image = load_image(path);
            ImageClass cls = classify_image(image, config.detection);
            if (format == "table") {
                std::cout << path << "\t"
                          << (cls.label == ImageLabel::HePathology ? "he_pathology"
                                                                   : "non_pathology")
                          << "\t" << cls.nuclei_count << "\n";
            } else {
                json line = {{"path", path},
                             {"label", cls.label == ImageLabel::HePathology ? "he_pathology"
                                                                            : "non_pathology"},
                             {"nuclei_count", cls.nuclei_count},
                             {"config_fingerprint", fingerprint}};
                std::cout << line.dump() << "\n";
            }
        } catch (const std::exception& e) {
            ++failures;
            if (format == "table") {
                std::cout << path << "\terror\t" << e.what() << "\n";
            } else {
                json line = {{"path", path}, {"error", e.what()}};
                std::cout << line.dump() << "\n";
            }
        }
    }
    return failures == 0 ? kExitOk : kExitPartialFailure;
}

// -------------------------------------------------------------- patches

int cmd_patches(const std::string& image_path, int top_k, const std::string& mode,
                const CommonFlags& flags, const std::string& out_path) {
    RunConfig config = effective_config(flags);
    RgbImage image = load_image(image_path);
    std::vector<Nucleus> nuclei = detect_nuclei(image, config.detection);
    std::vector<Patch> grid = tile_patches(image.width, image.height);

    // Full ranking over all nine tiles, then the requested selection.
    std::vector<RankedPatch> full_ranking = rank_patches(grid, nuclei, 9);

    json doc;
    doc["image"] = image_path;
    doc["width"] = image.width;
    doc["height"] = image.height;
    doc["config_fingerprint"] = config_fingerprint(config);
    doc["patches"] = json::array();
    for (const auto& rp : full_ranking) {
        doc["patches"].push_back({{"index", rp.patch.index},
                                  {"x", rp.patch.x},
                                  {"y", rp.patch.y},
                                  {"w", rp.patch.width},
                                  {"h", rp.patch.height},
                                  {"nuclei_count", rp.nuclei_count},
                                  {"rank", rp.rank}});
    }
    doc["selected"] = json::array();
    if (mode == "random") {
        for (const auto& p : random_patches(grid, top_k, config.seed)) {
            doc["selected"].push_back(p.index);
        }
    } else {
        for (const auto& rp : rank_patches(grid, nuclei, top_k)) {
            doc["selected"].push_back(rp.patch.index);
        }
    }
    write_text(out_path, doc.dump(2) + "\n");
    return kExitOk;
}

// ---------------------------------------------------------------- graph

int cmd_graph(const std::string& image_path, const CommonFlags& flags,
              const std::string& out_path) {
    RunConfig config = effective_config(flags);
    RgbImage image = load_image(image_path);
    std::vector<Nucleus> nuclei = detect_nuclei(image, config.detection);
    NucleiGraph graph = build_nuclei_graph(nuclei, config.graph);
    GraphStats stats = graph_stats(graph);

    json doc = json::parse(graph_to_json(graph));
    doc["stats"] = {{"nodes", stats.node_count},
                    {"edges", stats.edge_count},
                    {"mean_degree", stats.mean_degree},
                    {"max_degree", stats.max_degree},
                    {"components", stats.connected_components}};
    doc["config_fingerprint"] = config_fingerprint(config);
    write_text(out_path, doc.dump(2) + "\n");
    return kExitOk;
}

// ------------------------------------------------------------------ run

int cmd_run(const std::string& dataset_path, const CommonFlags& flags,
            const std::optional<std::string>& variant, const std::optional<int>& num_patches,
            const std::optional<std::string>& patch_mode, const std::string& out_path) {
    RunConfig config = effective_config(flags);
    if (variant) config.variant = *variant;
    if (num_patches) config.num_patches = *num_patches;
    if (patch_mode) config.patch_mode = *patch_mode;
    if (config.variant == "baseline") config.num_patches = 0;

    LlmClients clients = make_clients(config);  // validates, may throw ConfigError
    PipelineConfig pipeline_config = to_pipeline_config(config);

    std::vector<QaSample> samples = load_dataset(dataset_path, SourceGroup::PathVqa);
    std::string base_dir = fs::path(dataset_path).parent_path().string();
    if (base_dir.empty()) base_dir = ".";

    std::vector<PipelineTrace> traces =
        run_dataset(samples, pipeline_config, clients, base_dir, config.workers);

    std::string out;
    int failures = 0;
    for (const auto& trace : traces) {
        if (trace.error.has_value()) ++failures;
        out += trace_to_json(trace);
        out += '\n';
    }
    write_text(out_path, out);
    std::cerr << "ran " << traces.size() << " samples, " << failures << " failures\n";
    return failures == 0 ? kExitOk : kExitPartialFailure;
}

// ----------------------------------------------------------------- eval

std::vector<PipelineTrace> load_traces(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_error(Errc::FileNotFound, path);
    std::vector<PipelineTrace> traces;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) traces.push_back(trace_from_json(line));
    }
    return traces;
}

// Join traces to samples by id; he label priority: dataset > trace class.
std::vector<double> score_traces(const std::vector<QaSample>& samples,
                                 const std::vector<PipelineTrace>& traces,
                                 std::vector<bool>* he_labels_out) {
    std::unordered_map<std::string, const PipelineTrace*> by_id;
    for (const auto& t : traces) by_id[t.id] = &t;
    if (by_id.size() != traces.size()) {
        throw_error(Errc::DuplicateId, "traces contain duplicate sample ids");
    }
    if (samples.size() != traces.size()) {
        throw_error(Errc::LengthMismatch,
                    "dataset has " + std::to_string(samples.size()) + " samples but traces have " +
                        std::to_string(traces.size()));
    }

    std::vector<double> recalls;
    recalls.reserve(samples.size());
    for (const auto& sample : samples) {
        auto it = by_id.find(sample.id);
        if (it == by_id.end()) {
            throw_error(Errc::LengthMismatch, "no trace for sample id " + sample.id);
        }
        const PipelineTrace& trace = *it->second;
        // A failed sample predicts nothing.
        recalls.push_back(trace.error.has_value() ? 0.0
                                                  : recall(trace.final_answer, sample.gold_answer));
        if (he_labels_out) {
            bool he = sample.he_label.has_value()
                          ? *sample.he_label
                          : trace.image_class.label == ImageLabel::HePathology;
            he_labels_out->push_back(he);
        }
    }
    return recalls;
}

int cmd_eval(const std::string& dataset_path, const std::string& traces_path,
             const std::string& against_path, const std::string& format,
             const std::string& method, int bootstrap_iterations, uint64_t bootstrap_seed,
             const CommonFlags& flags, const std::string& out_path) {
    RunConfig config = effective_config(flags);
    std::vector<QaSample> samples = load_dataset(dataset_path, SourceGroup::PathVqa);
    std::vector<PipelineTrace> traces = load_traces(traces_path);

    std::vector<bool> he_labels;
    std::vector<double> recalls = score_traces(samples, traces, &he_labels);

    EvalReport report = aggregate(samples, recalls, he_labels);
    report.method = method;
    report.config_fingerprint =
        traces.empty() ? config_fingerprint(config) : traces.front().config_fingerprint;

    if (!against_path.empty()) {
        std::vector<PipelineTrace> other = load_traces(against_path);
        std::vector<double> baseline = score_traces(samples, other, nullptr);
        BootstrapResult b =
            paired_bootstrap(recalls, baseline, bootstrap_iterations, 95.0, bootstrap_seed);
        report.bootstraps.push_back({fs::path(against_path).filename().string(), b.mean_diff,
                                     b.ci_low, b.ci_high, bootstrap_iterations, 95.0});
    }

    write_text(out_path, render_report(report, format == "table" ? ReportFormat::Table
                                                                 : ReportFormat::Json));
    return kExitOk;
}

// ------------------------------------------------------------- gen-arch

int cmd_gen_arch(const std::string& captions_path, const std::string& out_dir,
                 uint64_t split_seed, double train_fraction, int max_retries,
                 const CommonFlags& flags) {
    RunConfig config = effective_config(flags);
    LlmClients clients = make_clients(config);

    std::vector<CaptionRecord> captions = load_captions(captions_path);
    GenerationResult result =
        generate_dataset(captions, *clients.reasoner, max_retries, config.workers);
    SplitResult split = split_dataset(result.pairs, train_fraction, split_seed);

    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / "pairs.jsonl").string(),
               pairs_to_jsonl(result.pairs, captions));
    write_text((fs::path(out_dir) / "train.jsonl").string(),
               pairs_to_jsonl(split.train, captions));
    write_text((fs::path(out_dir) / "test.jsonl").string(), pairs_to_jsonl(split.test, captions));

    std::string failures_text;
    for (const auto& f : result.failures) {
        json line = {{"caption_id", f.caption_id}, {"message", f.message}, {"attempts", f.attempts}};
        failures_text += line.dump();
        failures_text += '\n';
    }
    write_text((fs::path(out_dir) / "failures.jsonl").string(), failures_text);

    json summary = {{"captions", captions.size()},
                    {"pairs", result.pairs.size()},
                    {"failures", result.failures.size()},
                    {"train_pairs", split.train.size()},
                    {"test_pairs", split.test.size()},
                    {"backend_calls", clients.reasoner->backend().calls()},
                    {"split_seed", split_seed},
                    {"train_fraction", train_fraction},
                    {"config_fingerprint", config_fingerprint(config)}};
    write_text((fs::path(out_dir) / "meta.json").string(), summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
    return result.failures.empty() ? kExitOk : kExitPartialFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pathology VQA pipeline: nuclei-guided patch retrieval, LLM orchestration, "
                 "and recall evaluation"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    CommonFlags flags;
    app.add_option("--config", flags.config_path, "JSON config file");
    std::string backend_flag, cache_dir_flag;
    int workers_flag = 0;
    uint64_t seed_flag = 0;
    auto* backend_opt = app.add_option("--backend", backend_flag, "mock or http");
    auto* cache_opt = app.add_option("--cache-dir", cache_dir_flag, "response cache directory");
    auto* workers_opt = app.add_option("--workers", workers_flag, "dataset worker pool size");
    auto* seed_opt = app.add_option("--seed", seed_flag, "run seed");

    // classify
    std::vector<std::string> classify_images;
    std::string classify_format = "json";
    auto* classify = app.add_subcommand("classify", "H&E pathology gate per image");
    classify->add_option("images", classify_images, "image files")->required();
    classify->add_option("--format", classify_format, "json or table");

    // patches
    std::string patches_image, patches_mode = "histo", patches_out;
    int patches_top_k = 3;
    auto* patches = app.add_subcommand("patches", "3x3 tiling and nuclei-count ranking");
    patches->add_option("image", patches_image, "image file")->required();
    patches->add_option("--top-k", patches_top_k, "patches to select (0..9)");
    patches->add_option("--mode", patches_mode, "histo or random");
    patches->add_option("--out", patches_out, "output file (default stdout)");

    // graph
    std::string graph_image, graph_out;
    auto* graph_cmd = app.add_subcommand("graph", "KNN nuclei graph with stats");
    graph_cmd->add_option("image", graph_image, "image file")->required();
    graph_cmd->add_option("--out", graph_out, "output file (default stdout)");

    // run
    std::string run_dataset_path, run_out = "traces.jsonl";
    std::string run_variant, run_patch_mode;
    int run_num_patches = -1;
    auto* run = app.add_subcommand("run", "run the pipeline over a dataset");
    run->add_option("--dataset", run_dataset_path, "dataset JSON-lines file")->required();
    run->add_option("--variant", run_variant,
                    "baseline | concat_answers | rag_description | rag_answer");
    run->add_option("--num-patches", run_num_patches, "patches per pathology image (0..9)");
    run->add_option("--mode", run_patch_mode, "histo or random");
    run->add_option("--out", run_out, "traces output file");

    // eval
    std::string eval_dataset, eval_traces, eval_against, eval_format = "table";
    std::string eval_method = "traces", eval_out;
    int eval_boot_iters = 10000;
    uint64_t eval_boot_seed = 0;
    auto* eval_cmd = app.add_subcommand("eval", "score traces against gold answers");
    eval_cmd->add_option("--dataset", eval_dataset, "dataset JSON-lines file")->required();
    eval_cmd->add_option("--traces", eval_traces, "trace JSON-lines file")->required();
    eval_cmd->add_option("--bootstrap-against", eval_against,
                         "second trace file for a paired bootstrap");
    eval_cmd->add_option("--bootstrap-iterations", eval_boot_iters, "bootstrap iterations");
    eval_cmd->add_option("--bootstrap-seed", eval_boot_seed, "bootstrap seed");
    eval_cmd->add_option("--format", eval_format, "table or json");
    eval_cmd->add_option("--method", eval_method, "method label for the report");
    eval_cmd->add_option("--out", eval_out, "output file (default stdout)");

    // gen-arch
    std::string arch_captions, arch_out = "arch_open";
    uint64_t arch_split_seed = 0;
    double arch_train_fraction = 0.8;
    int arch_max_retries = 2;
    auto* gen_arch = app.add_subcommand("gen-arch", "build a QA dataset from figure captions");
    gen_arch->add_option("--captions", arch_captions, "captions JSON-lines file")->required();
    gen_arch->add_option("--out", arch_out, "output directory");
    gen_arch->add_option("--split-seed", arch_split_seed, "train/test split seed");
    gen_arch->add_option("--train-fraction", arch_train_fraction, "train share of captions");
    gen_arch->add_option("--max-retries", arch_max_retries, "parse retries per caption");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    if (*backend_opt) flags.backend = backend_flag;
    if (*cache_opt) flags.cache_dir = cache_dir_flag;
    if (*workers_opt) flags.workers = workers_flag;
    if (*seed_opt) flags.seed = seed_flag;

    try {
        if (app.got_subcommand(classify)) {
            return cmd_classify(classify_images, flags, classify_format);
        }
        if (app.got_subcommand(patches)) {
            return cmd_patches(patches_image, patches_top_k, patches_mode, flags, patches_out);
        }
        if (app.got_subcommand(graph_cmd)) {
            return cmd_graph(graph_image, flags, graph_out);
        }
        if (app.got_subcommand(run)) {
            std::optional<std::string> variant, mode;
            std::optional<int> num_patches;
            if (!run_variant.empty()) variant = run_variant;
            if (!run_patch_mode.empty()) mode = run_patch_mode;
            if (run_num_patches >= 0) num_patches = run_num_patches;
            return cmd_run(run_dataset_path, flags, variant, num_patches, mode, run_out);
        }
        if (app.got_subcommand(eval_cmd)) {
            return cmd_eval(eval_dataset, eval_traces, eval_against, eval_format, eval_method,
                            eval_boot_iters, eval_boot_seed, flags, eval_out);
        }
        if (app.got_subcommand(gen_arch)) {
            return cmd_gen_arch(arch_captions, arch_out, arch_split_seed, arch_train_fraction,
                                arch_max_retries, flags);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
            case Errc::ConfigError:
            case Errc::FileNotFound:
            case Errc::MalformedJson:
            case Errc::MissingField:
            case Errc::DuplicateId:
            case Errc::LengthMismatch:
                return kExitConfigError;
            default:
                return kExitPartialFailure;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartialFailure;
    }
    return kExitOk;
}
