#pragma once

#include <stdexcept>
#include <string>

namespace opkit {

enum class ErrorCode {
  NotHermitian,
  IndefiniteBeyondTolerance,
  NotAContraction,
  DimensionMismatch,
  NonFiniteEntry,
  IncompatibleOperators,
  NotToeplitz,
  NoConvergence,
  RootFindingFailure,
  GridTooCoarse,
  ResidualTooLarge,
  RankDeficientSystem,
  MissingInput,
  InvalidParams,
  ResolventSingular,
  TruncationInsufficient,
  TailTooLarge,
  HypothesisViolated,
  EmbeddingNotFound,
  SolverDisagreement,
  ParseError,
};

const char* error_name(ErrorCode code);

class OpkitError : public std::runtime_error {
 public:
  OpkitError(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) { throw OpkitError(code, detail); }

}  // namespace opkit
