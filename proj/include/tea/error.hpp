#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tea {

enum class ErrorCode {
  InvalidVector,
  ZeroNormVector,
  DimMismatch,
  InvalidParameter,
  AntipodalVectors,
  SequenceLengthMismatch,
  PairingMismatch,
  EmptySet,
  InsufficientPoints,
  SingularCovariance,
  IndexError,
  LabelNotFound,
  MalformedTemplate,
  IoError,
  CorruptData,
  UnsupportedVersion,
  MalformedManifest,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above, so
/// callers (the CLI in particular) can map them onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace tea
