#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psgkit {

// Base for every error the library raises. The category is a short stable
// token ("montage", "format", ...) the CLI prints in front of the message.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

#define PSGKIT_DEFINE_ERROR(Name, token)                         \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& message) : Error(token, message) {} \
  }

PSGKIT_DEFINE_ERROR(MontageError, "montage");
PSGKIT_DEFINE_ERROR(FormatError, "format");
PSGKIT_DEFINE_ERROR(SignalTooShort, "signal-too-short");
PSGKIT_DEFINE_ERROR(ResampleError, "resample");
PSGKIT_DEFINE_ERROR(EmptyRecording, "empty-recording");
PSGKIT_DEFINE_ERROR(SpecError, "spec");
PSGKIT_DEFINE_ERROR(ConfigError, "config");
PSGKIT_DEFINE_ERROR(WindowError, "window");
PSGKIT_DEFINE_ERROR(SequenceError, "sequence");
PSGKIT_DEFINE_ERROR(StateError, "state");
PSGKIT_DEFINE_ERROR(TrackError, "track");
PSGKIT_DEFINE_ERROR(DomainError, "domain");
PSGKIT_DEFINE_ERROR(AlignmentError, "alignment");
PSGKIT_DEFINE_ERROR(DegenerateError, "degenerate");
PSGKIT_DEFINE_ERROR(ShortSubjectError, "short-subject");
PSGKIT_DEFINE_ERROR(IoError, "io");

#undef PSGKIT_DEFINE_ERROR

// Malformed input line in a JSONL/CSV file. `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("parse", "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace psgkit
