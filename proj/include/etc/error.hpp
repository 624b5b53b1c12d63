#pragma once

#include <stdexcept>
#include <string>

namespace etc {

enum class Errc {
  NonSquare,
  SelfLoop,
  NonBinaryEntry,
  IndexOutOfRange,
  NonFinite,
  DimensionMismatch,
  RankDeficient,
  MissingGain,
  ExtraGain,
  NegativeWeight,
  LambdaThetaViolation,
  SigmaPatternMismatch,
  DegenerateData,
  MissingStageOne,
  NonPositiveGamma,
  SolverNumericalFailure,
  SingularG,
  SingularR,
  UninitializedBroadcast,
  ParamViolation,
  ZeroDisturbance,
  MissingVariables,
  Config,
  Io,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace etc
