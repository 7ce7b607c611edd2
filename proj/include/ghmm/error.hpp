#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ghmm {

enum class Errc {
  AllZeroWeights,
  NonFinite,
  UnsupportedOrder,
  StepTooSmall,
  TooLarge,
  TooShort,
  InvalidStochasticMatrix,
  NonstationaryParameters,
  DimensionMismatch,
  NonPsdCovariance,
  RiccatiNoConvergence,
  StateSpaceTooLarge,
  SizeCap,
  NestingViolation,
  InvalidParameter,
  InvalidObservation,
  InvalidConfig,
};

std::string_view errc_name(Errc code);

/// Validation errors are caused by bad inputs (exit status 2 in the CLI);
/// everything else is a numerical failure (exit status 3).
bool is_validation(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string field = {});

  Errc code() const noexcept { return code_; }
  /// Dotted config path of the offending field, when known ("model.beta").
  const std::string& field() const noexcept { return field_; }
  /// Observation index at which a filter failed, when known.
  std::optional<std::size_t> index() const noexcept { return index_; }

  Error with_index(std::size_t index) const;

 private:
  Errc code_;
  std::string field_;
  std::optional<std::size_t> index_;
};

}  // namespace ghmm
