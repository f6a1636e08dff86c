#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fseg {

enum class ErrorKind {
  NotFound,
  UnsupportedFormat,
  CorruptHeader,
  UnsupportedChannels,
  ZeroDimension,
  OutOfBounds,
  DegenerateData,
  NoUsefulFeature,
  ParseError,
  UnknownSegmentKind,
  DegenerateTrainingSet,
  PatchTooSmall,
  DegenerateLabels,
  DimensionMismatch,
  ShapeMismatch,
  ConfigShapeError,
  NoNegativeImages,
  ConfigError,
  MissingInput,
  ModelVersionMismatch,
  IoError,
  InvariantViolation,
};

inline constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::CorruptHeader: return "CorruptHeader";
    case ErrorKind::UnsupportedChannels: return "UnsupportedChannels";
    case ErrorKind::ZeroDimension: return "ZeroDimension";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::NoUsefulFeature: return "NoUsefulFeature";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownSegmentKind: return "UnknownSegmentKind";
    case ErrorKind::DegenerateTrainingSet: return "DegenerateTrainingSet";
    case ErrorKind::PatchTooSmall: return "PatchTooSmall";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ConfigShapeError: return "ConfigShapeError";
    case ErrorKind::NoNegativeImages: return "NoNegativeImages";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::ModelVersionMismatch: return "ModelVersionMismatch";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a kind tag,
/// so callers (notably the CLI) can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace fseg
