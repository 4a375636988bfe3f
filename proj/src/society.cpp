#include "coevo/society.hpp"

#include <cmath>
#include <sstream>

namespace coevo {
namespace {

void require(bool ok, const char* field, double value, const char* what) {
  if (!ok) {
    std::ostringstream msg;
    msg << "invalid " << field << " = " << value << ": " << what;
    throw param_error(field, msg.str());
  }
}

}  // namespace

SocietyParams validate_params(double lambda_b, double lambda_d, double r, double w) {
  require(std::isfinite(lambda_b) && lambda_b > 0.0, "lambda_b", lambda_b,
          "must be finite and > 0");
  require(std::isfinite(lambda_d) && lambda_d > 0.0, "lambda_d", lambda_d,
          "must be finite and > 0");
  require(std::isfinite(r) && r > 0.0, "r", r, "must be finite and > 0");
  require(std::isfinite(w) && w >= 0.0 && w <= 1.0, "w", w, "must lie in [0, 1]");
  return SocietyParams{lambda_b, lambda_d, r, w};
}

}  // namespace coevo
