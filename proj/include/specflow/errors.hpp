#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace specflow {

// Stable machine-parsable error classes. The CLI prints exactly one line
// "error: <CLASS>: <detail>" and exits nonzero; tests match on CLASS.
enum class ErrClass {
  Usage,
  BadConfig,
  BadInput,
  IoError,
  ParseError,
  VersionMismatch,
  BasisMismatch,
  CkptCorrupt,
  DsCountMismatch,
  NumericFailure,
};

inline const char* err_class_name(ErrClass c) {
  switch (c) {
    case ErrClass::Usage:           return "USAGE";
    case ErrClass::BadConfig:       return "BAD_CONFIG";
    case ErrClass::BadInput:        return "BAD_INPUT";
    case ErrClass::IoError:         return "IO_ERROR";
    case ErrClass::ParseError:      return "PARSE_ERROR";
    case ErrClass::VersionMismatch: return "VERSION_MISMATCH";
    case ErrClass::BasisMismatch:   return "BASIS_MISMATCH";
    case ErrClass::CkptCorrupt:     return "CKPT_CORRUPT";
    case ErrClass::DsCountMismatch: return "DS_COUNT_MISMATCH";
    case ErrClass::NumericFailure:  return "NUMERIC_FAILURE";
  }
  return "UNKNOWN";
}

class SpecError : public std::runtime_error {
 public:
  SpecError(ErrClass cls, std::string msg)
      : std::runtime_error(std::move(msg)), cls_(cls) {}
  ErrClass cls() const { return cls_; }

 private:
  ErrClass cls_;
};

[[noreturn]] inline void fail(ErrClass cls, const std::string& msg) {
  throw SpecError(cls, msg);
}

inline void require(bool cond, ErrClass cls, const std::string& msg) {
  if (!cond) fail(cls, msg);
}

}  // namespace specflow
