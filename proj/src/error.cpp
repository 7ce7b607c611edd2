#include "ghmm/error.hpp"

namespace ghmm {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::AllZeroWeights: return "AllZeroWeights";
    case Errc::NonFinite: return "NonFinite";
    case Errc::UnsupportedOrder: return "UnsupportedOrder";
    case Errc::StepTooSmall: return "StepTooSmall";
    case Errc::TooLarge: return "TooLarge";
    case Errc::TooShort: return "TooShort";
    case Errc::InvalidStochasticMatrix: return "InvalidStochasticMatrix";
    case Errc::NonstationaryParameters: return "NonstationaryParameters";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonPsdCovariance: return "NonPsdCovariance";
    case Errc::RiccatiNoConvergence: return "RiccatiNoConvergence";
    case Errc::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case Errc::SizeCap: return "SizeCap";
    case Errc::NestingViolation: return "NestingViolation";
    case Errc::InvalidParameter: return "InvalidParameter";
    case Errc::InvalidObservation: return "InvalidObservation";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

bool is_validation(Errc code) {
  switch (code) {
    case Errc::InvalidStochasticMatrix:
    case Errc::NonstationaryParameters:
    case Errc::DimensionMismatch:
    case Errc::StateSpaceTooLarge:
    case Errc::SizeCap:
    case Errc::InvalidParameter:
    case Errc::InvalidObservation:
    case Errc::InvalidConfig:
    case Errc::UnsupportedOrder:
    case Errc::TooLarge:
    case Errc::TooShort:
      return true;
    default:
      return false;
  }
}

Error::Error(Errc code, const std::string& message, std::string field)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message),
      code_(code),
      field_(std::move(field)) {}

Error Error::with_index(std::size_t index) const {
  Error copy(code_, std::string(what()) + " (at observation " + std::to_string(index) + ")",
             field_);
  copy.index_ = index;
  return copy;
}

}  // namespace ghmm
