#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dyntok {

enum class ErrorCode {
  UncoveredCharacter,
  MalformedLine,
  InvariantViolation,
  NoMergeablePair,
  DomainError,
  MissingEmbedding,
  FormatError,
  DimensionMismatch,
  EmptyCorpus,
  TooFewRows,
  SampleMismatch,
  EmptyInput,
  Io,
  Usage,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

  // True for errors caused by bad input data rather than misuse or bugs.
  bool is_data_error() const noexcept;

 private:
  ErrorCode code_;
};

Error uncovered_character(std::string_view ch, std::size_t position);
Error malformed_line(std::size_t line, std::string_view reason);
Error invariant_violation(std::string_view sample_id, std::string_view description);
Error format_error(std::size_t offset, std::string_view reason);

}  // namespace dyntok
