#include "frt/error.hpp"

namespace frt {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::ArmTooSmall: return "ArmTooSmall";
    case Errc::StratumCellTooSmall: return "StratumCellTooSmall";
    case Errc::MixedClusterTreatment: return "MixedClusterTreatment";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::NotContrast: return "NotContrast";
    case Errc::CapExceeded: return "CapExceeded";
    case Errc::BadDoses: return "BadDoses";
    case Errc::CrossEntryComparison: return "CrossEntryComparison";
    case Errc::IllConditioned: return "IllConditioned";
    case Errc::StratumTargetMismatch: return "StratumTargetMismatch";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::TooManyDegenerateDraws: return "TooManyDegenerateDraws";
    case Errc::UnsupportedStatistic: return "UnsupportedStatistic";
    case Errc::SingularDenominator: return "SingularDenominator";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace frt
