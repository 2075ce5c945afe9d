#pragma once

#include <stdexcept>
#include <string>

namespace n2a {

// Base error; subclasses map onto the CLI exit-code buckets
// (config/data -> 2, plan -> 3, class coverage -> 4, shape -> 5).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct TrainingError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct PlanError : Error { using Error::Error; };
struct CoverageError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

}  // namespace n2a
