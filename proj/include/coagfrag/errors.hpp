#pragma once

#include <stdexcept>

namespace coagfrag {

/// Violation of a model contract: non-finite or negative rate, invalid
/// kernel value, degenerate fragment, sampler misbehaviour.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Caller-side misuse: bad index, bad configuration, unknown registry name.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace coagfrag
