#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pathrag {

enum class SourceGroup { PathVqa, ArchPubMed, ArchBooks };

const char* source_group_name(SourceGroup group);

struct QaSample {
    std::string id;
    std::string image_path;
    std::string question;
    std::string gold_answer;
    SourceGroup source_group = SourceGroup::PathVqa;
    std::optional<bool> he_label;  // precomputed H&E grouping when present
};

/// Load a JSON-lines dataset: one object per line with fields
/// {id, image, question, answer} and optional {he}. Duplicate ids are
/// rejected. Throws MalformedJson, MissingField, DuplicateId,
/// FileNotFound.
std::vector<QaSample> load_dataset(const std::string& path, SourceGroup group);

/// Lowercase, replace non-alphanumeric bytes with spaces, split, and
/// deduplicate preserving first occurrence.
std::vector<std::string> normalize_text(const std::string& s);

/// Token-set recall: |tokens(gold) ∩ tokens(prediction)| / |tokens(gold)|.
/// Throws EmptyGold when the gold answer yields no tokens.
double recall(const std::string& prediction, const std::string& gold);

struct GroupStat {
    int count = 0;
    double mean_recall = 0.0;  // fraction in [0,1]
};

struct BootstrapSummary {
    std::string label;
    double mean_diff = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int iterations = 0;
    double confidence = 95.0;
};

struct EvalReport {
    std::string method = "traces";
    std::vector<std::string> sample_ids;
    std::vector<double> per_sample_recalls;
    GroupStat not_he;
    GroupStat he;
    GroupStat all;
    std::string config_fingerprint;
    std::vector<BootstrapSummary> bootstraps;
};

/// Group means over aligned (recalls, he_labels). Throws LengthMismatch.
EvalReport aggregate(const std::vector<QaSample>& samples, const std::vector<double>& recalls,
                     const std::vector<bool>& he_labels);

struct BootstrapResult {
    double mean_diff = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Paired bootstrap over score differences: resample the index multiset
/// with replacement, average a_i - b_i per iteration, report the grand
/// mean and the empirical percentile interval (type-7 interpolation).
/// Iteration RNG streams are derived from (seed, iteration), so a
/// parallel schedule would reproduce the sequential result.
/// Throws LengthMismatch, TooFewSamples.
BootstrapResult paired_bootstrap(const std::vector<double>& scores_a,
                                 const std::vector<double>& scores_b, int iterations = 10000,
                                 double confidence = 95.0, uint64_t seed = 0);

enum class ReportFormat { Table, Json };

std::string render_report(const EvalReport& report, ReportFormat format);

/// Inverse of render_report(Json).
EvalReport parse_report_json(const std::string& text);

}  // namespace pathrag
