#pragma once

#include <stdexcept>
#include <string>

namespace epical {

/// Broad failure class; the CLI maps each onto its exit code.
enum class ErrorKind { Usage, Data, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define EPICAL_DEFINE_ERROR(Name, Kind)                                          \
    class Name : public Error {                                                  \
    public:                                                                      \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    };

// numerical
EPICAL_DEFINE_ERROR(DegenerateState, Numerical)
EPICAL_DEFINE_ERROR(NonpositiveMean, Numerical)
EPICAL_DEFINE_ERROR(FactorizationFailure, Numerical)
EPICAL_DEFINE_ERROR(DomainError, Numerical)
EPICAL_DEFINE_ERROR(ZeroVariance, Numerical)
EPICAL_DEFINE_ERROR(SamplerFailure, Numerical)

// data / input
EPICAL_DEFINE_ERROR(DimensionMismatch, Data)
EPICAL_DEFINE_ERROR(ParseError, Data)
EPICAL_DEFINE_ERROR(DateGapError, Data)
EPICAL_DEFINE_ERROR(NegativePopulation, Data)
EPICAL_DEFINE_ERROR(ShiftTooLarge, Data)
EPICAL_DEFINE_ERROR(ConstantColumn, Data)
EPICAL_DEFINE_ERROR(EmptyDraws, Data)
EPICAL_DEFINE_ERROR(HorizonMismatch, Data)
EPICAL_DEFINE_ERROR(MissingArtifact, Data)
EPICAL_DEFINE_ERROR(IoError, Data)

// usage
EPICAL_DEFINE_ERROR(ConfigError, Usage)

#undef EPICAL_DEFINE_ERROR

}  // namespace epical
