#include "dyntok/error.hpp"

namespace dyntok {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UncoveredCharacter: return "UncoveredCharacter";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::NoMergeablePair: return "NoMergeablePair";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SampleMismatch: return "SampleMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

bool Error::is_data_error() const noexcept {
  switch (code_) {
    case ErrorCode::Usage:
    case ErrorCode::DomainError:
      return false;
    default:
      return true;
  }
}

Error uncovered_character(std::string_view ch, std::size_t position) {
  return Error(ErrorCode::UncoveredCharacter,
               "character '" + std::string(ch) + "' at position " + std::to_string(position) +
                   " is not in the vocabulary");
}

Error malformed_line(std::size_t line, std::string_view reason) {
  return Error(ErrorCode::MalformedLine, "line " + std::to_string(line) + ": " + std::string(reason));
}

Error invariant_violation(std::string_view sample_id, std::string_view description) {
  return Error(ErrorCode::InvariantViolation,
               "sample '" + std::string(sample_id) + "': " + std::string(description));
}

Error format_error(std::size_t offset, std::string_view reason) {
  return Error(ErrorCode::FormatError, "at byte " + std::to_string(offset) + ": " + std::string(reason));
}

}  // namespace dyntok
