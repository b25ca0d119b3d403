#include "pathrag/arch_open.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "pathrag/error.hpp"
#include "pathrag/rng.hpp"

namespace pathrag {

using nlohmann::json;

std::vector<CaptionRecord> load_captions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_error(Errc::FileNotFound, path);

    std::vector<CaptionRecord> records;
    std::unordered_set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            throw_error(Errc::MalformedJson, path + " line " + std::to_string(line_no));
        }
        for (const char* field : {"id", "image", "caption"}) {
            if (!obj.contains(field) || !obj[field].is_string() ||
                obj[field].get<std::string>().empty()) {
                throw_error(Errc::MissingField,
                            path + " line " + std::to_string(line_no) + ": " + field);
            }
        }
        CaptionRecord record;
        record.id = obj["id"].get<std::string>();
        record.image_path = obj["image"].get<std::string>();
        record.caption = obj["caption"].get<std::string>();
        record.origin =
            obj.value("origin", "pubmed") == "books" ? CaptionOrigin::Books : CaptionOrigin::PubMed;
        if (!seen.insert(record.id).second) {
            throw_error(Errc::DuplicateId, record.id + " at line " + std::to_string(line_no));
        }
        records.push_back(std::move(record));
    }
    return records;
}

namespace {

std::string trim(const std::string& s) {
    size_t start = s.find_first_not_of(" \t\r\n");
    if (start == std::string::npos) return "";
    size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(start, end - start + 1);
}

bool istarts_with(const std::string& s, const char* prefix) {
    size_t n = std::char_traits<char>::length(prefix);
    if (s.size() < n) return false;
    for (size_t i = 0; i < n; ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
    }
    return true;
}

}  // namespace

std::vector<GeneratedQa> parse_qa_response(const std::string& text) {
    struct Item {
        bool is_question;
        std::string content;
    };
    std::vector<Item> items;

    // Line-anchored markers; continuation lines attach to the last marker.
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos
                                                                     : eol - pos);
        std::string stripped = trim(line);
        if (istarts_with(stripped, "question:")) {
            items.push_back({true, trim(stripped.substr(9))});
        } else if (istarts_with(stripped, "answer:")) {
            items.push_back({false, trim(stripped.substr(7))});
        } else if (!stripped.empty() && !items.empty()) {
            items.back().content += (items.back().content.empty() ? "" : " ") + stripped;
        }
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }

    std::vector<GeneratedQa> pairs;
    for (size_t i = 0; i < items.size(); ++i) {
        if (items[i].is_question) {
            if (i + 1 >= items.size() || items[i + 1].is_question) {
                throw_error(Errc::UnpairedMarker, "question without a following answer");
            }
        } else {
            if (i == 0 || !items[i - 1].is_question) {
                throw_error(Errc::UnpairedMarker, "answer without a preceding question");
            }
            GeneratedQa qa;
            qa.question = items[i - 1].content;
            qa.answer = items[i].content;
            qa.ordinal = static_cast<int>(pairs.size()) + 1;
            if (qa.question.empty() || qa.answer.empty()) {
                throw_error(Errc::UnpairedMarker, "empty question or answer text");
            }
            pairs.push_back(std::move(qa));
        }
    }

    if (pairs.size() != 5) {
        throw_error(Errc::WrongCount, "found " + std::to_string(pairs.size()) + " pairs, need 5");
    }
    for (const auto& qa : pairs) {
        if (!istarts_with(qa.question, "what") && !istarts_with(qa.question, "where")) {
            throw_error(Errc::InvalidQuestionStem,
                        "pair " + std::to_string(qa.ordinal) + " must start with What or Where");
        }
    }
    return pairs;
}

GenerationResult generate_dataset(const std::vector<CaptionRecord>& captions, Gateway& reasoner,
                                  int max_retries, int workers) {
    {
        std::unordered_set<std::string> ids;
        for (const auto& c : captions) {
            if (!ids.insert(c.id).second) {
                throw_error(Errc::DuplicateId, c.id);  // rejected before any network call
            }
        }
    }

    struct Slot {
        std::vector<GeneratedQa> pairs;
        std::optional<GenerationFailure> failure;
    };
    std::vector<Slot> slots(captions.size());

    auto process = [&](size_t index) {
        const CaptionRecord& caption = captions[index];
        std::string last_message;
        int attempts = 0;
        for (int attempt = 0; attempt <= max_retries; ++attempt) {
            ++attempts;
            try {
                PromptBundle bundle = build_archopen_prompt(caption.caption);
                ChatResponse resp = reasoner.chat(bundle.rendered, /*bypass_cache=*/attempt > 0);
                std::vector<GeneratedQa> pairs = parse_qa_response(resp.text);
                for (auto& qa : pairs) qa.caption_id = caption.id;
                slots[index].pairs = std::move(pairs);
                return;
            } catch (const std::exception& e) {
                last_message = e.what();
            }
        }
        slots[index].failure = GenerationFailure{caption.id, last_message, attempts};
    };

    int pool = std::max(1, workers);
    if (pool == 1 || captions.size() < 2) {
        for (size_t i = 0; i < captions.size(); ++i) process(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> threads;
        for (int t = 0; t < pool; ++t) {
            threads.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < captions.size(); i = next.fetch_add(1)) {
                    process(i);
                }
            });
        }
        for (auto& th : threads) th.join();
    }

    GenerationResult result;
    for (auto& slot : slots) {
        if (slot.failure.has_value()) {
            result.failures.push_back(std::move(*slot.failure));
        } else {
            for (auto& qa : slot.pairs) result.pairs.push_back(std::move(qa));
        }
    }
    return result;
}

SplitResult split_dataset(const std::vector<GeneratedQa>& pairs, double train_fraction,
                          uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw_error(Errc::ConfigError, "train_fraction must be in (0, 1)");
    }

    // Caption ids in first-appearance order, then a seeded shuffle.
    std::vector<std::string> caption_ids;
    std::unordered_set<std::string> seen;
    for (const auto& qa : pairs) {
        if (seen.insert(qa.caption_id).second) caption_ids.push_back(qa.caption_id);
    }
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i + 1 < caption_ids.size(); ++i) {
        size_t j = i + bounded_uniform(rng, caption_ids.size() - i);
        std::swap(caption_ids[i], caption_ids[j]);
    }

    size_t train_captions =
        static_cast<size_t>(std::floor(train_fraction * static_cast<double>(caption_ids.size())));
    std::unordered_set<std::string> train_set(caption_ids.begin(),
                                              caption_ids.begin() + train_captions);

    SplitResult split;
    for (const auto& qa : pairs) {
        (train_set.count(qa.caption_id) ? split.train : split.test).push_back(qa);
    }
    return split;
}

std::string pairs_to_jsonl(const std::vector<GeneratedQa>& pairs,
                           const std::vector<CaptionRecord>& captions) {
    std::unordered_map<std::string, const CaptionRecord*> by_id;
    for (const auto& c : captions) by_id[c.id] = &c;

    std::string out;
    for (const auto& qa : pairs) {
        json obj;
        obj["id"] = qa.caption_id + "#" + std::to_string(qa.ordinal);
        auto it = by_id.find(qa.caption_id);
        obj["image"] = it != by_id.end() ? it->second->image_path : "";
        obj["question"] = qa.question;
        obj["answer"] = qa.answer;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

}  // namespace pathrag
