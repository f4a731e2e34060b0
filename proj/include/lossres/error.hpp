#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lossres {

enum class Errc {
  ParseError,
  DuplicateCell,
  IncompleteTriangle,
  FutureCellPresent,
  KindMismatch,
  DomainError,
  DegenerateTriangle,
  SingularDesign,
  NoConvergence,
  StaleFit,
  BaseFitError,
  TooManyFailures,
  InvalidArgument,
  IoError,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateCell: return "DuplicateCell";
    case Errc::IncompleteTriangle: return "IncompleteTriangle";
    case Errc::FutureCellPresent: return "FutureCellPresent";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::DomainError: return "DomainError";
    case Errc::DegenerateTriangle: return "DegenerateTriangle";
    case Errc::SingularDesign: return "SingularDesign";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::StaleFit: return "StaleFit";
    case Errc::BaseFitError: return "BaseFitError";
    case Errc::TooManyFailures: return "TooManyFailures";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message is prefixed with the code name so CLI output stays greppable.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace lossres
