#pragma once

// Manifold description files.
//
// Format (line oriented, '#' starts a comment line):
//
//   hyperdrum-manifold 1
//   name <string>
//   census <string>              optional
//   volume <real>                optional metadata
//   symmetry <label>             optional
//   diameter <real>              optional
//   geodesic_length <real>       optional
//   reference_<key> <value>      optional, free-form reference values
//   generators <count>           optional; checked against the blocks
//   generator <label>
//   <row 0: 4 reals>
//   ...
//   <row 3: 4 reals>
//
// Matrices act on column vectors (x0, x1, x2, x3) with Gram form
// diag(+1, -1, -1, -1) and must fix the basepoint's Dirichlet domain.

#include "hyperdrum/tiling.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace hyperdrum {

inline constexpr int kManifoldSchemaVersion = 1;

struct ManifoldSpec {
    std::string name;
    std::string census;
    GeneratorSet generators;
    std::optional<double> volume;
    std::optional<double> diameter;
    std::optional<double> geodesic_length;
    std::optional<std::string> symmetry;
    std::map<std::string, std::string> reference;  // reference_* keys, prefix stripped

    std::optional<double> reference_value(const std::string& key) const;
};

/// Parses manifold text; `source` names the input in error messages.
/// Throws GeometryError for invalid matrices or generator sets and
/// std::runtime_error for syntax or schema problems.
ManifoldSpec parse_manifold_text(const std::string& text, const std::string& source = "<string>");
ManifoldSpec parse_manifold(const std::filesystem::path& path);

}  // namespace hyperdrum
