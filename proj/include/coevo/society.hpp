#pragma once

#include <stdexcept>
#include <string>

namespace coevo {

/// Exogenous parameters characterizing a society.
struct SocietyParams {
  double lambda_b;  ///< birth mass-rate (mass/time), > 0
  double lambda_d;  ///< natural death hazard (1/time), > 0
  double r;         ///< death-boundary magnitude (welfare units), > 0; the boundary sits at -r
  double w;         ///< collectivism weight, in [0, 1]
};

/// Parameter rejection; remembers which field failed its bound.
class param_error : public std::domain_error {
 public:
  param_error(std::string field, const std::string& message)
      : std::domain_error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Checks bounds and returns the validated parameter set.
/// Throws param_error naming the offending field.
SocietyParams validate_params(double lambda_b, double lambda_d, double r, double w);

}  // namespace coevo
