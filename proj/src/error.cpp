#include "nlpn/error.hpp"

namespace nlpn {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::wrong_amplification_kind: return "wrong-amplification-kind";
    case Errc::undefined_input: return "undefined-input";
    case Errc::calibration_required: return "calibration-required";
    case Errc::invalid_config: return "invalid-config";
    case Errc::aliasing: return "aliasing";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace nlpn
