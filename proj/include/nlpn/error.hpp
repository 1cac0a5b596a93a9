#ifndef NLPN_ERROR_HPP
#define NLPN_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlpn {

enum class Errc {
  invalid_parameter,
  wrong_amplification_kind,
  undefined_input,
  calibration_required,
  invalid_config,
  aliasing,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

/// Single exception type for the library; `code()` is what callers branch on.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace nlpn

#endif  // NLPN_ERROR_HPP
