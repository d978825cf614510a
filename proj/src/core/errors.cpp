#include "core/errors.hpp"

namespace antilimit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Hypothesis: return "hypothesis";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::BoundaryEscape: return "boundary-escape";
    case ErrorKind::NoConvergence: return "no-convergence";
    case ErrorKind::DegeneratePotential: return "degenerate-potential";
    case ErrorKind::Internal: return "internal";
  }
  return "internal";
}

nlohmann::json Error::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  j["message"] = what();
  if (!details_.is_null()) j["details"] = details_;
  return j;
}

}  // namespace antilimit
