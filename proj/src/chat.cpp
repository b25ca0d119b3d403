#include "pathrag/chat.hpp"

#include <charconv>
#include <cstring>

#include "pathrag/digest.hpp"

namespace pathrag {

const char* prompt_kind_name(PromptKind kind) {
    switch (kind) {
        case PromptKind::AnswerFromImage: return "answer_from_image";
        case PromptKind::DescriptionFromImage: return "description_from_image";
        case PromptKind::ReasonOverAnswers: return "reason_over_answers";
        case PromptKind::ReasonOverDescriptions: return "reason_over_descriptions";
        case PromptKind::ArchOpenGeneration: return "arch_open_generation";
        case PromptKind::Raw: return "raw";
    }
    return "raw";
}

const char* chat_role_name(ChatRole role) {
    return role == ChatRole::MultimodalAnswerer ? "multimodal_answerer" : "text_reasoner";
}

namespace {

void append_field(std::vector<uint8_t>& buf, const void* data, uint64_t len) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>((len >> (8 * i)) & 0xFF));
    const auto* bytes = static_cast<const uint8_t*>(data);
    buf.insert(buf.end(), bytes, bytes + len);
}

void append_field(std::vector<uint8_t>& buf, const std::string& s) {
    append_field(buf, s.data(), s.size());
}

}  // namespace

std::string cache_key(const ChatRequest& request) {
    std::vector<uint8_t> buf;
    append_field(buf, request.model_id);

    char temp_str[64];
    auto [end, ec] = std::to_chars(temp_str, temp_str + sizeof(temp_str), request.temperature);
    append_field(buf, temp_str, static_cast<uint64_t>(end - temp_str));

    append_field(buf, request.system_text);
    append_field(buf, request.user_text);
    if (request.image.has_value()) {
        uint32_t dims[2] = {static_cast<uint32_t>(request.image->width),
                            static_cast<uint32_t>(request.image->height)};
        append_field(buf, dims, sizeof(dims));
        append_field(buf, request.image->data.data(), request.image->data.size());
    } else {
        append_field(buf, "", 0);
    }
    return sha256_hex(buf);
}

}  // namespace pathrag
