#include "uqbot/error.hpp"

namespace uqbot {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingLabelColumn: return "MissingLabelColumn";
    case ErrorCode::FeatureCountMismatch: return "FeatureCountMismatch";
    case ErrorCode::NonBinaryLabel: return "NonBinaryLabel";
    case ErrorCode::UnparseableValue: return "UnparseableValue";
    case ErrorCode::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorCode::StatsLengthMismatch: return "StatsLengthMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidArch: return "InvalidArch";
    case ErrorCode::FeatureLengthMismatch: return "FeatureLengthMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::SingleMember: return "SingleMember";
    case ErrorCode::InvalidT: return "InvalidT";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CheckpointError: return "CheckpointError";
  }
  return "Unknown";
}

}  // namespace uqbot
