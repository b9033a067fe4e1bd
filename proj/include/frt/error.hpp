#pragma once

#include <stdexcept>
#include <string>

namespace frt {

enum class Errc {
  ArmTooSmall,
  StratumCellTooSmall,
  MixedClusterTreatment,
  DimensionMismatch,
  DegenerateVariance,
  RankDeficient,
  NotContrast,
  CapExceeded,
  BadDoses,
  CrossEntryComparison,
  IllConditioned,
  StratumTargetMismatch,
  SingularCovariance,
  TooManyDegenerateDraws,
  UnsupportedStatistic,
  SingularDenominator,
  ParseError,
  InvalidArgument,
};

const char* to_string(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// CLI can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace frt
