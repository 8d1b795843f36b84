#include "tea/error.hpp"

namespace tea {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidVector: return "InvalidVector";
    case ErrorCode::ZeroNormVector: return "ZeroNormVector";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::AntipodalVectors: return "AntipodalVectors";
    case ErrorCode::SequenceLengthMismatch: return "SequenceLengthMismatch";
    case ErrorCode::PairingMismatch: return "PairingMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::LabelNotFound: return "LabelNotFound";
    case ErrorCode::MalformedTemplate: return "MalformedTemplate";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CorruptData: return "CorruptData";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
  }
  return "Unknown";
}

}  // namespace tea
