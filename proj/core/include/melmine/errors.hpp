#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace melmine {

enum class Errc {
  kInvalidArgument,
  kDuplicateId,
  kEmptyId,
  kEmptyAttribute,
  kUnknownAttribute,
  kParseError,
  kDanglingReference,
  kIoError,
  kBadMagic,
  kTruncatedFile,
  kSizeMismatch,
  kUnsupportedDtype,
  kNonFiniteValue,
  kBadBandConfig,
  kIndexMismatch,
  kPositiveNotInTable,
  kDimensionMismatch,
  kNonFiniteScore,
  kEmptyViewSet,
  kShapeMismatch,
  kDivergedLoss,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library is an Error carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// I/O failures (missing files, short writes) as opposed to content/validation failures.
  bool is_io() const noexcept { return code_ == Errc::kIoError; }

 private:
  Errc code_;
};

/// Malformed record in a line-oriented file. `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error(Errc::kParseError, "line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DanglingReference : public Error {
 public:
  DanglingReference(std::size_t line, const std::string& mention_id, const std::string& entity_id)
      : Error(Errc::kDanglingReference, "line " + std::to_string(line) + ": mention '" +
                                            mention_id + "' references unknown entity '" +
                                            entity_id + "'"),
        line_(line),
        mention_id_(mention_id),
        entity_id_(entity_id) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& mention_id() const noexcept { return mention_id_; }
  const std::string& entity_id() const noexcept { return entity_id_; }

 private:
  std::size_t line_;
  std::string mention_id_;
  std::string entity_id_;
};

class NonFiniteValue : public Error {
 public:
  NonFiniteValue(std::size_t row, std::size_t col)
      : Error(Errc::kNonFiniteValue,
              "entry (" + std::to_string(row) + ", " + std::to_string(col) + ") is NaN or Inf"),
        row_(row),
        col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

}  // namespace melmine
