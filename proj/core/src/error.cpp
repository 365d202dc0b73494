#include "memprobe/error.hpp"

namespace memprobe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::WrongMagic: return "WrongMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::FractionOutOfRange: return "FractionOutOfRange";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InsufficientPermutations: return "InsufficientPermutations";
    case ErrorCode::MismatchedExperimentKeys: return "MismatchedExperimentKeys";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace memprobe
