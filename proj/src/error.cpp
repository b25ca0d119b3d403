#include "pathrag/error.hpp"

namespace pathrag {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::FileNotFound: return "FileNotFound";
        case Errc::UnsupportedFormat: return "UnsupportedFormat";
        case Errc::CorruptImage: return "CorruptImage";
        case Errc::InsufficientTissue: return "InsufficientTissue";
        case Errc::DegenerateCovariance: return "DegenerateCovariance";
        case Errc::ImageTooSmall: return "ImageTooSmall";
        case Errc::OutOfBounds: return "OutOfBounds";
        case Errc::EmptyQuestion: return "EmptyQuestion";
        case Errc::EmptyCaption: return "EmptyCaption";
        case Errc::BackendUnreachable: return "BackendUnreachable";
        case Errc::BackendError: return "BackendError";
        case Errc::MalformedResponse: return "MalformedResponse";
        case Errc::Timeout: return "Timeout";
        case Errc::MissingField: return "MissingField";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::MalformedJson: return "MalformedJson";
        case Errc::EmptyGold: return "EmptyGold";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::TooFewSamples: return "TooFewSamples";
        case Errc::WrongCount: return "WrongCount";
        case Errc::UnpairedMarker: return "UnpairedMarker";
        case Errc::InvalidQuestionStem: return "InvalidQuestionStem";
        case Errc::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

}  // namespace pathrag
