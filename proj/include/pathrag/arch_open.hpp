#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathrag/gateway.hpp"
#include "pathrag/prompts.hpp"

namespace pathrag {

enum class CaptionOrigin { PubMed, Books };

struct CaptionRecord {
    std::string id;
    std::string image_path;
    std::string caption;
    CaptionOrigin origin = CaptionOrigin::PubMed;
};

/// JSON-lines {id, image, caption, origin}; duplicate ids rejected.
std::vector<CaptionRecord> load_captions(const std::string& path);

struct GeneratedQa {
    std::string caption_id;
    std::string question;
    std::string answer;
    int ordinal = 0;  // 1..5
};

/// Parse a model response into exactly five QA pairs. Scans for
/// case-insensitive "Question:" / "Answer:" line markers, pairs them in
/// order, trims whitespace, and enforces the count and the "What"/"Where"
/// question stems. Throws WrongCount, UnpairedMarker,
/// InvalidQuestionStem.
std::vector<GeneratedQa> parse_qa_response(const std::string& text);

struct GenerationFailure {
    std::string caption_id;
    std::string message;
    int attempts = 0;
};

struct GenerationResult {
    std::vector<GeneratedQa> pairs;     // caption input order, 5 per success
    std::vector<GenerationFailure> failures;
};

/// prompt -> chat -> parse per caption; parse failures retry up to
/// max_retries with the cache bypassed (a cached malformed response would
/// never resolve), then are recorded while the run continues.
GenerationResult generate_dataset(const std::vector<CaptionRecord>& captions, Gateway& reasoner,
                                  int max_retries = 2, int workers = 1);

struct SplitResult {
    std::vector<GeneratedQa> train;
    std::vector<GeneratedQa> test;
};

/// Caption-atomic 80/20-style split: a caption's five pairs always land on
/// the same side. Caption ids are shuffled with the seed; train receives
/// floor(train_fraction * #captions) captions.
SplitResult split_dataset(const std::vector<GeneratedQa>& pairs, double train_fraction,
                          uint64_t seed);

/// Serialize pairs in the evaluation dataset schema
/// {id, image, question, answer}; ids are "<caption_id>#<ordinal>".
std::string pairs_to_jsonl(const std::vector<GeneratedQa>& pairs,
                           const std::vector<CaptionRecord>& captions);

}  // namespace pathrag
