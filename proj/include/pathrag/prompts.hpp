#pragma once

#include <string>
#include <vector>

#include "pathrag/chat.hpp"

namespace pathrag {

/// A rendered prompt template. The kind fixes the template; `rendered`
/// carries the final request text with every slot filled.
struct PromptBundle {
    PromptKind kind = PromptKind::Raw;
    ChatRequest rendered;
};

/// Question passed verbatim to the multimodal answerer with the image
/// attached. Throws EmptyQuestion.
PromptBundle build_answer_prompt(const std::string& question, const RgbImage& image);

/// Fixed description instruction with the image attached.
PromptBundle build_description_prompt(const RgbImage& image);

/// Aggregation prompt for the text reasoner. `kind` selects the
/// answers-mode ("Perspective 1..N") or descriptions-mode ("Description of
/// image" / "Description of patch 1..N") layout; item 1 is always the full
/// image, patches follow in rank order. Throws EmptyQuestion; patch_texts
/// is limited to 8 entries.
PromptBundle build_reasoning_prompt(PromptKind kind, const std::string& question,
                                    const std::string& full_image_text,
                                    const std::vector<std::string>& patch_texts);

/// Caption-to-QA generation prompt (five open-ended pairs starting with
/// "What" or "Where"). Throws EmptyCaption.
PromptBundle build_archopen_prompt(const std::string& caption);

/// Canonical plain-text form used for golden-file freezing and trace
/// records.
std::string bundle_to_text(const PromptBundle& bundle);

}  // namespace pathrag
