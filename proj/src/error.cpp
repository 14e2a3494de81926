#include "pi3nn/error.hpp"

namespace pi3nn {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kArgument: return "argument";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kData: return "data";
    case ErrorKind::kNormalization: return "normalization";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kTie: return "tie";
    case ErrorKind::kInfeasibleGamma: return "infeasible_gamma";
  }
  return "unknown";
}

}  // namespace pi3nn
