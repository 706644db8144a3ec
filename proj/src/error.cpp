#include "linfsc/error.hpp"

namespace linfsc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::BadCutover: return "BadCutover";
    case ErrorCode::TooFewControls: return "TooFewControls";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingTreatedColumn: return "MissingTreatedColumn";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::LambdaMaxZero: return "LambdaMaxZero";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::UnsupportedPenalty: return "UnsupportedPenalty";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::OddJ: return "OddJ";
    case ErrorCode::NonStationary: return "NonStationary";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite:
    case ErrorCode::BadCutover:
    case ErrorCode::TooFewControls:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ParseError:
    case ErrorCode::MissingTreatedColumn:
    case ErrorCode::RaggedRows:
    case ErrorCode::DegenerateColumn:
    case ErrorCode::LambdaMaxZero:
      return ErrorCategory::Data;
    case ErrorCode::DomainViolation:
    case ErrorCode::Infeasible:
    case ErrorCode::LinearSolveFailure:
    case ErrorCode::SolverFailure:
    case ErrorCode::RankDeficient:
      return ErrorCategory::Solver;
    case ErrorCode::UnsupportedPenalty:
    case ErrorCode::InvalidArgument:
    case ErrorCode::BadK:
    case ErrorCode::OddJ:
    case ErrorCode::NonStationary:
    case ErrorCode::ConfigError:
      return ErrorCategory::Config;
  }
  return ErrorCategory::Config;
}

}  // namespace linfsc
