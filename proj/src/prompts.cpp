#include "pathrag/prompts.hpp"

#include "pathrag/error.hpp"

namespace pathrag {

namespace {

constexpr const char* kPathologistRole = "You are a professional pathologist.";

constexpr const char* kDescriptionInstruction = "Describe the following image in detail.";

constexpr const char* kAnswersPreamble =
    "Please generate a comprehensive answer in several sentences that integrates multiple "
    "perspectives for a pathology image, and provide a balanced conclusion based on the "
    "information provided.";

constexpr const char* kArchOpenTemplateHead =
    "You are provided with a text description (figure caption) of a pathology image. "
    "Unfortunately, you don't have access to the original image.\n"
    "Your job is to generate a total of 5 open-ended question/answer pairs from this figure "
    "caption starting with \"What\" or \"Where\". Below are the requirements to generate the "
    "question/answer pairs:\n"
    "\n"
    "Requirement 1: Avoid quoting or referring to specific facts, terms, abbreviations, dates, "
    "numbers or names, as these may reveal the conversation is based on the text information, "
    "rather than image itself\n"
    "Requirement 2: Focus on the visual aspects of the image that can be inferred without the "
    "text information\n"
    "Requirement 3: Do not use phrases like \"mentioned\", \"caption\", \"context\", \"without "
    "the image\" in the question/answer pairs. Instead, refer to the information as being \"in "
    "the image\" or preferably don't mention anything\n"
    "Requirement 4: Ensure that question/anwer pairs are diverse and cover a range of visual "
    "aspects of the image\n"
    "Requirement 5: Answer responsibly, avoiding overconfidence, and do not provide medical "
    "advice or diagnostic information\n"
    "\n"
    "Caption: ";

const char* count_word(size_t n) {
    static const char* words[] = {"zero", "one", "two",   "three", "four",
                                  "five", "six", "seven", "eight"};
    return n < 9 ? words[n] : "several";
}

// Descriptions-mode preamble; the patch-count word tracks the number of
// patches actually supplied.
std::string descriptions_preamble(size_t patch_count) {
    std::string text = "Please answer the following question in several sentences from the "
                       "description of an image";
    if (patch_count == 1) {
        text += " and one important patch";
    } else if (patch_count >= 2) {
        text += std::string(" and ") + count_word(patch_count) + " important patches";
    }
    text += ".";
    return text;
}

}  // namespace

PromptBundle build_answer_prompt(const std::string& question, const RgbImage& image) {
    if (question.empty()) throw_error(Errc::EmptyQuestion, "answer prompt needs a question");
    PromptBundle bundle;
    bundle.kind = PromptKind::AnswerFromImage;
    bundle.rendered.kind = PromptKind::AnswerFromImage;
    bundle.rendered.role_hint = ChatRole::MultimodalAnswerer;
    bundle.rendered.user_text = question;  // verbatim, no normalization
    bundle.rendered.image = image;
    return bundle;
}

PromptBundle build_description_prompt(const RgbImage& image) {
    PromptBundle bundle;
    bundle.kind = PromptKind::DescriptionFromImage;
    bundle.rendered.kind = PromptKind::DescriptionFromImage;
    bundle.rendered.role_hint = ChatRole::MultimodalAnswerer;
    bundle.rendered.user_text = kDescriptionInstruction;
    bundle.rendered.image = image;
    return bundle;
}

PromptBundle build_reasoning_prompt(PromptKind kind, const std::string& question,
                                    const std::string& full_image_text,
                                    const std::vector<std::string>& patch_texts) {
    if (kind != PromptKind::ReasonOverAnswers && kind != PromptKind::ReasonOverDescriptions) {
        throw_error(Errc::ConfigError, "not a reasoning prompt kind");
    }
    if (question.empty()) throw_error(Errc::EmptyQuestion, "reasoning prompt needs a question");
    if (patch_texts.size() > 8) {
        throw_error(Errc::OutOfBounds, "at most 8 patch texts are supported");
    }

    std::string body;
    if (kind == PromptKind::ReasonOverAnswers) {
        body = kAnswersPreamble;
        body += "\n\n";
        body += "Perspective 1: " + full_image_text + "\n";
        for (size_t i = 0; i < patch_texts.size(); ++i) {
            body += "Perspective " + std::to_string(i + 2) + ": " + patch_texts[i] + "\n";
        }
    } else {
        body = descriptions_preamble(patch_texts.size());
        body += "\n\n";
        body += "Description of image: " + full_image_text + "\n";
        for (size_t i = 0; i < patch_texts.size(); ++i) {
            body += "Description of patch " + std::to_string(i + 1) + ": " + patch_texts[i] + "\n";
        }
    }
    body += "Question: " + question;

    PromptBundle bundle;
    bundle.kind = kind;
    bundle.rendered.kind = kind;
    bundle.rendered.role_hint = ChatRole::TextReasoner;
    bundle.rendered.system_text = kPathologistRole;
    bundle.rendered.user_text = body;
    return bundle;
}

PromptBundle build_archopen_prompt(const std::string& caption) {
    if (caption.empty()) throw_error(Errc::EmptyCaption, "caption is required");
    PromptBundle bundle;
    bundle.kind = PromptKind::ArchOpenGeneration;
    bundle.rendered.kind = PromptKind::ArchOpenGeneration;
    bundle.rendered.role_hint = ChatRole::TextReasoner;
    bundle.rendered.user_text =
        std::string(kArchOpenTemplateHead) + caption + "\n\nQuestion:\n\nAnswer:";
    return bundle;
}

std::string bundle_to_text(const PromptBundle& bundle) {
    std::string text;
    text += std::string("[kind] ") + prompt_kind_name(bundle.kind) + "\n";
    text += std::string("[role] ") + chat_role_name(bundle.rendered.role_hint) + "\n";
    if (bundle.rendered.image.has_value()) {
        text += "[image] " + std::to_string(bundle.rendered.image->width) + "x" +
                std::to_string(bundle.rendered.image->height) + "\n";
    } else {
        text += "[image] none\n";
    }
    text += "[system]\n" + bundle.rendered.system_text + "\n";
    text += "[user]\n" + bundle.rendered.user_text + "\n";
    return text;
}

}  // namespace pathrag
