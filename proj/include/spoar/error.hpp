#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spoar {

/// Failure categories raised by the library. Callers branch on these rather
/// than on message text.
enum class Errc {
  invalid_argument,
  dimension_mismatch,
  non_finite,
  degenerate_region,
  wrong_region_kind,
  unsupported,
  insufficient_data,
  degenerate_variance,
  rank_deficient,
  divergence,
  not_psd,
  unstable_system,
  overflow,
  infeasible_confidence,
  degenerate_denominator,
  trial_failed,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::non_finite: return "non_finite";
    case Errc::degenerate_region: return "degenerate_region";
    case Errc::wrong_region_kind: return "wrong_region_kind";
    case Errc::unsupported: return "unsupported";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::degenerate_variance: return "degenerate_variance";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::divergence: return "divergence";
    case Errc::not_psd: return "not_psd";
    case Errc::unstable_system: return "unstable_system";
    case Errc::overflow: return "overflow";
    case Errc::infeasible_confidence: return "infeasible_confidence";
    case Errc::degenerate_denominator: return "degenerate_denominator";
    case Errc::trial_failed: return "trial_failed";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

namespace detail {

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace detail
}  // namespace spoar
