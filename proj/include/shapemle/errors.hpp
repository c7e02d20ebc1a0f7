#pragma once

#include <stdexcept>
#include <string>

namespace shapemle {

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateSample : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OverflowError : std::range_error {
    using std::range_error::range_error;
};

struct NonIntegrable : std::domain_error {
    using std::domain_error::domain_error;
};

struct InvalidEnvelope : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FactorizationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Halving loop exhausted without sufficient increase; indicates an
// inconsistency between objective and gradient, not a data condition.
struct NoProgress : std::logic_error {
    using std::logic_error::logic_error;
};

struct IterationCap : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyCandidates : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace shapemle
