#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace linfsc {

enum class ErrorCode {
  // data / panel
  NonFinite,
  BadCutover,
  TooFewControls,
  DimensionMismatch,
  ParseError,
  MissingTreatedColumn,
  RaggedRows,
  DegenerateColumn,
  LambdaMaxZero,
  // qp / fitting
  DomainViolation,
  Infeasible,
  LinearSolveFailure,
  UnsupportedPenalty,
  SolverFailure,
  RankDeficient,
  // configuration
  InvalidArgument,
  BadK,
  OddJ,
  NonStationary,
  ConfigError,
};

/// Coarse grouping used by the command-line front end to pick an exit code.
enum class ErrorCategory { Config = 1, Data = 2, Solver = 3 };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace linfsc
