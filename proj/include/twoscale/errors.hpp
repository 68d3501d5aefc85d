#pragma once

#include <stdexcept>
#include <string>

namespace twoscale {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct PreconditionError : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct ExtrapolationError : Error { using Error::Error; };
struct StabilityError : Error { using Error::Error; };
struct ConsistencyError : Error { using Error::Error; };
struct AccuracyError : Error { using Error::Error; };

}  // namespace twoscale
