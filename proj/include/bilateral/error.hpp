#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bilateral {

enum class Errc {
  domain,
  precondition,
  unsupported_model,
  insufficient_sample,
  degenerate_state,
  divergence,
  singular_system,
  startup,
  tail_estimation,
  unbounded_variation,
  pole,
  non_convergence,
  quadrature,
  io,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::domain: return "domain";
    case Errc::precondition: return "precondition";
    case Errc::unsupported_model: return "unsupported-model";
    case Errc::insufficient_sample: return "insufficient-sample";
    case Errc::degenerate_state: return "degenerate-state";
    case Errc::divergence: return "divergence";
    case Errc::singular_system: return "singular-system";
    case Errc::startup: return "startup";
    case Errc::tail_estimation: return "tail-estimation";
    case Errc::unbounded_variation: return "unbounded-variation";
    case Errc::pole: return "pole";
    case Errc::non_convergence: return "non-convergence";
    case Errc::quadrature: return "quadrature";
    case Errc::io: return "io";
  }
  return "unknown";
}

// Input errors are the caller's fault; the rest are numerical diagnostics.
inline bool is_validation(Errc code) {
  switch (code) {
    case Errc::domain:
    case Errc::precondition:
    case Errc::unsupported_model:
    case Errc::unbounded_variation:
    case Errc::io:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool ok, Errc code, const char* what) {
  if (!ok) throw Error(code, what);
}

}  // namespace bilateral
