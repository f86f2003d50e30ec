#pragma once

#include <stdexcept>
#include <string>

namespace ar {

enum class ErrorKind {
  ShapeMismatch,
  MissingFrame,
  BadCamera,
  BadArgument,
  BadLabels,
  BadParams,
  BadSequence,
  EmptyRegion,
  EmptyLossSupport,
  NoBackground,
  NoData,
  BadData,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::MissingFrame: return "MissingFrame";
    case ErrorKind::BadCamera: return "BadCamera";
    case ErrorKind::BadArgument: return "BadArgument";
    case ErrorKind::BadLabels: return "BadLabels";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::BadSequence: return "BadSequence";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::EmptyLossSupport: return "EmptyLossSupport";
    case ErrorKind::NoBackground: return "NoBackground";
    case ErrorKind::NoData: return "NoData";
    case ErrorKind::BadData: return "BadData";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace ar
