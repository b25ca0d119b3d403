#pragma once

#include <stdexcept>
#include <string>

namespace pathrag {

// Every failure mode the library reports. CLI maps these to exit codes.
enum class Errc {
    // imaging
    FileNotFound,
    UnsupportedFormat,
    CorruptImage,
    // stain estimation
    InsufficientTissue,
    DegenerateCovariance,
    // patching
    ImageTooSmall,
    OutOfBounds,
    // prompts
    EmptyQuestion,
    EmptyCaption,
    // gateway
    BackendUnreachable,
    BackendError,
    MalformedResponse,
    Timeout,
    // datasets
    MissingField,
    DuplicateId,
    MalformedJson,
    // evaluation
    EmptyGold,
    LengthMismatch,
    TooFewSamples,
    // arch-open parsing
    WrongCount,
    UnpairedMarker,
    InvalidQuestionStem,
    // cli / config
    ConfigError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          detail_(message) {}

    Errc code() const { return code_; }
    /// Message without the code-name prefix.
    const std::string& detail() const { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

[[noreturn]] inline void throw_error(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace pathrag
