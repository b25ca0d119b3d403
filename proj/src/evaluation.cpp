#include "pathrag/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "pathrag/error.hpp"
#include "pathrag/rng.hpp"

namespace pathrag {

using nlohmann::json;

const char* source_group_name(SourceGroup group) {
    switch (group) {
        case SourceGroup::PathVqa: return "pathvqa";
        case SourceGroup::ArchPubMed: return "arch_pubmed";
        case SourceGroup::ArchBooks: return "arch_books";
    }
    return "pathvqa";
}

std::vector<QaSample> load_dataset(const std::string& path, SourceGroup group) {
    std::ifstream in(path);
    if (!in) throw_error(Errc::FileNotFound, path);

    std::vector<QaSample> samples;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            throw_error(Errc::MalformedJson, path + " line " + std::to_string(line_no));
        }
        for (const char* field : {"id", "image", "question", "answer"}) {
            if (!obj.contains(field) || !obj[field].is_string() ||
                obj[field].get<std::string>().empty()) {
                throw_error(Errc::MissingField,
                            path + " line " + std::to_string(line_no) + ": " + field);
            }
        }
        QaSample sample;
        sample.id = obj["id"].get<std::string>();
        sample.image_path = obj["image"].get<std::string>();
        sample.question = obj["question"].get<std::string>();
        sample.gold_answer = obj["answer"].get<std::string>();
        sample.source_group = group;
        if (obj.contains("he") && obj["he"].is_boolean()) {
            sample.he_label = obj["he"].get<bool>();
        }
        if (!seen_ids.insert(sample.id).second) {
            throw_error(Errc::DuplicateId, sample.id + " at line " + std::to_string(line_no));
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::vector<std::string> normalize_text(const std::string& s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (unsigned char c : s) {
        cleaned.push_back(std::isalnum(c) ? static_cast<char>(std::tolower(c)) : ' ');
    }

    std::vector<std::string> tokens;
    std::unordered_set<std::string> seen;
    size_t pos = 0;
    while (pos < cleaned.size()) {
        while (pos < cleaned.size() && cleaned[pos] == ' ') ++pos;
        size_t start = pos;
        while (pos < cleaned.size() && cleaned[pos] != ' ') ++pos;
        if (pos > start) {
            std::string token = cleaned.substr(start, pos - start);
            if (seen.insert(token).second) tokens.push_back(std::move(token));
        }
    }
    return tokens;
}

double recall(const std::string& prediction, const std::string& gold) {
    std::vector<std::string> gold_tokens = normalize_text(gold);
    if (gold_tokens.empty()) throw_error(Errc::EmptyGold, "gold answer has no tokens");

    std::vector<std::string> pred_tokens = normalize_text(prediction);
    std::unordered_set<std::string> pred_set(pred_tokens.begin(), pred_tokens.end());
    size_t hit = 0;
    for (const auto& token : gold_tokens) {
        if (pred_set.count(token)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(gold_tokens.size());
}

EvalReport aggregate(const std::vector<QaSample>& samples, const std::vector<double>& recalls,
                     const std::vector<bool>& he_labels) {
    if (samples.size() != recalls.size() || samples.size() != he_labels.size()) {
        throw_error(Errc::LengthMismatch, "samples, recalls, and labels must align");
    }

    EvalReport report;
    double sum_he = 0.0, sum_not = 0.0, sum_all = 0.0;
    int n_he = 0, n_not = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        report.sample_ids.push_back(samples[i].id);
        report.per_sample_recalls.push_back(recalls[i]);
        sum_all += recalls[i];
        if (he_labels[i]) {
            sum_he += recalls[i];
            ++n_he;
        } else {
            sum_not += recalls[i];
            ++n_not;
        }
    }
    report.he = {n_he, n_he > 0 ? sum_he / n_he : 0.0};
    report.not_he = {n_not, n_not > 0 ? sum_not / n_not : 0.0};
    int n_all = n_he + n_not;
    report.all = {n_all, n_all > 0 ? sum_all / n_all : 0.0};
    return report;
}

namespace {

double percentile_type7(const std::vector<double>& sorted, double pct) {
    if (sorted.empty()) return 0.0;
    double h = (pct / 100.0) * (static_cast<double>(sorted.size()) - 1.0);
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string format_pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

std::string format_fixed2(double value, bool with_sign) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), with_sign ? "%+.2f" : "%.2f", value);
    return buf;
}

}  // namespace

BootstrapResult paired_bootstrap(const std::vector<double>& scores_a,
                                 const std::vector<double>& scores_b, int iterations,
                                 double confidence, uint64_t seed) {
    if (scores_a.size() != scores_b.size()) {
        throw_error(Errc::LengthMismatch, "paired scores must have equal length");
    }
    if (scores_a.size() < 2) throw_error(Errc::TooFewSamples, "need at least 2 pairs");
    if (iterations < 1) throw_error(Errc::TooFewSamples, "need at least 1 iteration");

    const size_t n = scores_a.size();
    std::vector<double> diffs(n);
    for (size_t i = 0; i < n; ++i) diffs[i] = scores_a[i] - scores_b[i];

    std::vector<double> means;
    means.reserve(iterations);
    for (int it = 0; it < iterations; ++it) {
        // Counter-based per-iteration stream: a parallel schedule would
        // produce the identical sequence.
        std::mt19937_64 rng(mix_seed(seed, static_cast<uint64_t>(it)));
        double sum = 0.0;
        for (size_t j = 0; j < n; ++j) {
            sum += diffs[bounded_uniform(rng, n)];
        }
        means.push_back(sum / static_cast<double>(n));
    }

    double grand = 0.0;
    for (double m : means) grand += m;
    grand /= static_cast<double>(means.size());

    std::sort(means.begin(), means.end());
    double tail = (100.0 - confidence) / 2.0;
    BootstrapResult result;
    result.mean_diff = grand;
    result.ci_low = percentile_type7(means, tail);
    result.ci_high = percentile_type7(means, 100.0 - tail);
    return result;
}

std::string render_report(const EvalReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        json doc;
        doc["method"] = report.method;
        doc["config_fingerprint"] = report.config_fingerprint;
        doc["groups"] = {
            {"not_he", {{"count", report.not_he.count}, {"recall", report.not_he.mean_recall}}},
            {"he", {{"count", report.he.count}, {"recall", report.he.mean_recall}}},
            {"all", {{"count", report.all.count}, {"recall", report.all.mean_recall}}},
        };
        doc["per_sample"] = json::array();
        for (size_t i = 0; i < report.sample_ids.size(); ++i) {
            doc["per_sample"].push_back(
                {{"id", report.sample_ids[i]}, {"recall", report.per_sample_recalls[i]}});
        }
        doc["bootstraps"] = json::array();
        for (const auto& b : report.bootstraps) {
            doc["bootstraps"].push_back({{"label", b.label},
                                         {"mean_diff", b.mean_diff},
                                         {"ci_low", b.ci_low},
                                         {"ci_high", b.ci_high},
                                         {"iterations", b.iterations},
                                         {"confidence", b.confidence}});
        }
        return doc.dump(2) + "\n";
    }

    // Method x {Not H&E, H&E, All} grid with one-decimal percentages.
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-28s %12s %12s %12s\n", "Method", "Not H&E", "H&E", "All");
    out += line;
    std::snprintf(line, sizeof(line), "%-28s %12s %12s %12s\n", report.method.c_str(),
                  format_pct(report.not_he.mean_recall).c_str(),
                  format_pct(report.he.mean_recall).c_str(),
                  format_pct(report.all.mean_recall).c_str());
    out += line;
    for (const auto& b : report.bootstraps) {
        std::snprintf(line, sizeof(line), "  (%s, CI [%s, %s])  vs %s\n",
                      format_fixed2(b.mean_diff * 100.0, true).c_str(),
                      format_fixed2(b.ci_low * 100.0, false).c_str(),
                      format_fixed2(b.ci_high * 100.0, false).c_str(), b.label.c_str());
        out += line;
    }
    std::snprintf(line, sizeof(line), "samples: not_he=%d he=%d all=%d\n", report.not_he.count,
                  report.he.count, report.all.count);
    out += line;
    return out;
}

EvalReport parse_report_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw_error(Errc::MalformedJson, "report is not a JSON object");
    }
    EvalReport report;
    report.method = doc.value("method", "traces");
    report.config_fingerprint = doc.value("config_fingerprint", "");
    auto read_group = [&](const char* name) {
        GroupStat stat;
        stat.count = doc["groups"][name].value("count", 0);
        stat.mean_recall = doc["groups"][name].value("recall", 0.0);
        return stat;
    };
    report.not_he = read_group("not_he");
    report.he = read_group("he");
    report.all = read_group("all");
    for (const auto& item : doc.value("per_sample", json::array())) {
        report.sample_ids.push_back(item.value("id", ""));
        report.per_sample_recalls.push_back(item.value("recall", 0.0));
    }
    for (const auto& item : doc.value("bootstraps", json::array())) {
        BootstrapSummary b;
        b.label = item.value("label", "");
        b.mean_diff = item.value("mean_diff", 0.0);
        b.ci_low = item.value("ci_low", 0.0);
        b.ci_high = item.value("ci_high", 0.0);
        b.iterations = item.value("iterations", 0);
        b.confidence = item.value("confidence", 95.0);
        report.bootstraps.push_back(std::move(b));
    }
    return report;
}

}  // namespace pathrag
