#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uqbot {

enum class ErrorCode {
  MissingLabelColumn,
  FeatureCountMismatch,
  NonBinaryLabel,
  UnparseableValue,
  DatasetTooSmall,
  StatsLengthMismatch,
  InvalidSpec,
  InvalidArch,
  FeatureLengthMismatch,
  EmptyDataset,
  SingleMember,
  InvalidT,
  InvalidK,
  BadIndex,
  EmptyResult,
  LengthMismatch,
  EmptyMatrix,
  IoError,
  ConfigError,
  CheckpointError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Every library failure is reported through this type; `code()` is stable and
// machine-readable, `what()` carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace uqbot
