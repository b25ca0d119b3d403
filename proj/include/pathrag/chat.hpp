#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pathrag/image.hpp"

namespace pathrag {

enum class ChatRole { MultimodalAnswerer, TextReasoner };

enum class PromptKind {
    AnswerFromImage,
    DescriptionFromImage,
    ReasonOverAnswers,
    ReasonOverDescriptions,
    ArchOpenGeneration,
    Raw,  // caller-composed request outside the template set
};

const char* prompt_kind_name(PromptKind kind);
const char* chat_role_name(ChatRole role);

struct ChatRequest {
    PromptKind kind = PromptKind::Raw;
    ChatRole role_hint = ChatRole::TextReasoner;
    std::string system_text;  // empty = no system message
    std::string user_text;
    std::optional<RgbImage> image;  // only for MultimodalAnswerer requests
    double temperature = 0.0;
    std::string model_id;
};

struct ChatResponse {
    std::string text;
    std::string backend_id;
    bool cached = false;
    int64_t latency_ms = 0;
};

/// Content-addressing digest over (model_id, temperature, system_text,
/// user_text, image bytes). Length-prefixed fields keep the encoding
/// unambiguous; the result is stable across runs and platforms.
std::string cache_key(const ChatRequest& request);

}  // namespace pathrag
