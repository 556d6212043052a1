#pragma once

#include "hyperdrum/manifold.hpp"

#include <filesystem>
#include <string>

namespace hyperdrum::testing {

inline std::filesystem::path data_path(const std::string& rel) {
    return std::filesystem::path(HYPERDRUM_DATA_DIR) / rel;
}

inline ManifoldSpec load_fixture(const std::string& stem) {
    return parse_manifold(data_path("manifolds/" + stem + ".mfd"));
}

inline const char* const kAllFixtures[] = {
    "m003_m3_1", "m003_m2_3", "s556_m1_1", "m006_m1_2", "m188_m1_1", "v2030_1_1",
    "m015_4_1",  "s718_1_1",  "m120_m6_1", "s654_m3_1", "v2833_2_3", "v3509_4_3",
};

}  // namespace hyperdrum::testing
