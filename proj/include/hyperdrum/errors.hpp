#pragma once

#include <stdexcept>

namespace hyperdrum {

/// An input violates a geometric invariant (hyperboloid constraint,
/// SO(3,1) membership, ...).
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation failed to converge or was given parameters outside the
/// range where it is meaningful.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hyperdrum
