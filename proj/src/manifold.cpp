#include "hyperdrum/manifold.hpp"

#include "hyperdrum/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace hyperdrum {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& token, const std::string& where) {
    double v = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error(where + ": expected a real number, got '" + token + "'");
    }
    return v;
}

}  // namespace

std::optional<double> ManifoldSpec::reference_value(const std::string& key) const {
    const auto it = reference.find(key);
    if (it == reference.end()) {
        return std::nullopt;
    }
    return parse_real(it->second, "reference_" + key);
}

ManifoldSpec parse_manifold_text(const std::string& text, const std::string& source) {
    std::vector<std::pair<int, std::string>> lines;
    {
        std::istringstream in(text);
        std::string raw;
        int number = 0;
        while (std::getline(in, raw)) {
            ++number;
            const std::string line = trim(raw);
            if (line.empty() || line.front() == '#') {
                continue;
            }
            lines.emplace_back(number, line);
        }
    }
    auto at = [&](std::size_t i) { return source + ":" + std::to_string(lines[i].first); };

    if (lines.empty()) {
        throw std::runtime_error(source + ": empty manifold file");
    }
    {
        std::istringstream header(lines[0].second);
        std::string magic;
        int version = 0;
        header >> magic >> version;
        if (magic != "hyperdrum-manifold") {
            throw std::runtime_error(at(0) + ": missing 'hyperdrum-manifold' header");
        }
        if (version != kManifoldSchemaVersion) {
            throw std::runtime_error(at(0) + ": unsupported schema version " + std::to_string(version));
        }
    }

    ManifoldSpec spec;
    std::vector<Isometry> mats;
    std::vector<std::string> labels;
    std::optional<std::size_t> declared;

    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& line = lines[i].second;
        const auto space = line.find_first_of(" \t");
        const std::string key = line.substr(0, space);
        const std::string value = space == std::string::npos ? std::string{} : trim(line.substr(space));

        if (key == "generator") {
            const std::string label = value.empty() ? "g" + std::to_string(mats.size()) : value;
            Eigen::Matrix4d g;
            for (int r = 0; r < 4; ++r) {
                const std::size_t row = i + 1 + r;
                if (row >= lines.size()) {
                    throw std::runtime_error(at(i) + ": generator " + label + " has fewer than 4 matrix rows");
                }
                std::istringstream rs(lines[row].second);
                std::vector<std::string> tokens;
                for (std::string t; rs >> t;) {
                    tokens.push_back(t);
                }
                if (tokens.size() != 4) {
                    throw std::runtime_error(at(row) + ": malformed matrix row for generator " + label +
                                             " (expected 4 entries, got " + std::to_string(tokens.size()) +
                                             ")");
                }
                for (int c = 0; c < 4; ++c) {
                    g(r, c) = parse_real(tokens[c], at(row));
                }
            }
            if (const auto problem = Isometry::check(g, 1e-9); !problem.empty()) {
                throw GeometryError(at(i) + ": generator " + label + ": " + problem);
            }
            mats.push_back(Isometry::from_matrix(g, 1e-9));
            labels.push_back(label);
            i += 4;
        } else if (value.empty()) {
            throw std::runtime_error(at(i) + ": key '" + key + "' has no value");
        } else if (key == "name") {
            spec.name = value;
        } else if (key == "census") {
            spec.census = value;
        } else if (key == "volume") {
            spec.volume = parse_real(value, at(i));
        } else if (key == "diameter") {
            spec.diameter = parse_real(value, at(i));
        } else if (key == "geodesic_length") {
            spec.geodesic_length = parse_real(value, at(i));
        } else if (key == "symmetry") {
            spec.symmetry = value;
        } else if (key == "generators") {
            declared = static_cast<std::size_t>(parse_real(value, at(i)));
        } else if (key.rfind("reference_", 0) == 0) {
            spec.reference[key.substr(10)] = value;
        } else {
            throw std::runtime_error(at(i) + ": unknown key '" + key + "'");
        }
    }

    if (mats.empty()) {
        throw std::runtime_error(source + ": no generators");
    }
    if (declared && *declared != mats.size()) {
        throw std::runtime_error(source + ": declares " + std::to_string(*declared) + " generators but lists " +
                                 std::to_string(mats.size()));
    }
    if (spec.name.empty()) {
        spec.name = source;
    }
    try {
        spec.generators = GeneratorSet::from_isometries(mats, labels);
    } catch (const GeometryError& e) {
        throw GeometryError(source + ": " + e.what());
    }
    return spec;
}

ManifoldSpec parse_manifold(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifold file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifold_text(buf.str(), path.string());
}

}  // namespace hyperdrum
