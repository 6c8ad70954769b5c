#pragma once

#include <stdexcept>
#include <string>

namespace conewalk {

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define CONEWALK_ERROR(Name)                                                  \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name, what) {}        \
    };

CONEWALK_ERROR(NegativeProbability)
CONEWALK_ERROR(MassExceedsOne)
CONEWALK_ERROR(DimensionMismatch)
CONEWALK_ERROR(EmptyWindow)
CONEWALK_ERROR(SolverFailure)
CONEWALK_ERROR(OutOfWindow)
CONEWALK_ERROR(WindowTooSmallForHorizon)
CONEWALK_ERROR(NegativeAEntry)
CONEWALK_ERROR(NotSuperharmonic)
CONEWALK_ERROR(IterationDivergence)
CONEWALK_ERROR(RowSumExceedsOne)
CONEWALK_ERROR(NotHarmonic)
CONEWALK_ERROR(NonPositiveH)
CONEWALK_ERROR(NoBoundary)
CONEWALK_ERROR(NonConvergence)
CONEWALK_ERROR(MassNotOne)
CONEWALK_ERROR(ParseError)
CONEWALK_ERROR(SchemaError)

#undef CONEWALK_ERROR

}  // namespace conewalk
