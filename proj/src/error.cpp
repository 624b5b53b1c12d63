#include "etc/error.hpp"

namespace etc {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NonSquare: return "NonSquare";
    case Errc::SelfLoop: return "SelfLoop";
    case Errc::NonBinaryEntry: return "NonBinaryEntry";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::NonFinite: return "NonFinite";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::MissingGain: return "MissingGain";
    case Errc::ExtraGain: return "ExtraGain";
    case Errc::NegativeWeight: return "NegativeWeight";
    case Errc::LambdaThetaViolation: return "LambdaThetaViolation";
    case Errc::SigmaPatternMismatch: return "SigmaPatternMismatch";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::MissingStageOne: return "MissingStageOne";
    case Errc::NonPositiveGamma: return "NonPositiveGamma";
    case Errc::SolverNumericalFailure: return "SolverNumericalFailure";
    case Errc::SingularG: return "SingularG";
    case Errc::SingularR: return "SingularR";
    case Errc::UninitializedBroadcast: return "UninitializedBroadcast";
    case Errc::ParamViolation: return "ParamViolation";
    case Errc::ZeroDisturbance: return "ZeroDisturbance";
    case Errc::MissingVariables: return "MissingVariables";
    case Errc::Config: return "Config";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace etc
