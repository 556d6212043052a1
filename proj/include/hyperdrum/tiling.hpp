#pragma once

// Group-theoretic machinery for a manifold H^3 / Gamma given by the
// face-pairing generators of a Dirichlet domain centred at the origin.

#include "hyperdrum/geometry.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hyperdrum {

using Word = std::vector<std::uint16_t>;

/// Face-pairing generators, each followed by its inverse.
class GeneratorSet {
public:
    GeneratorSet() = default;

    /// Validates the list and closes it under inversion: a missing inverse is
    /// appended (label + "^-1"), and each element is placed directly before
    /// its inverse. Throws GeometryError on identity or duplicate generators.
    static GeneratorSet from_isometries(const std::vector<Isometry>& gens,
                                        const std::vector<std::string>& labels = {});

    std::size_t size() const { return elements_.size(); }
    const Isometry& operator[](std::size_t i) const { return elements_[i]; }
    const std::vector<Isometry>& elements() const { return elements_; }
    const std::string& label(std::size_t i) const { return labels_[i]; }
    std::size_t inverse_index(std::size_t i) const { return inverse_[i]; }

    /// Smallest and largest translation length arccosh(g00).
    double min_translation() const;
    double max_translation() const;

private:
    std::vector<Isometry> elements_;
    std::vector<std::string> labels_;
    std::vector<std::size_t> inverse_;
};

struct GroupElement {
    Isometry g;
    Word word;       // generator indices, applied right to left: g = w0 w1 ... wn
    HPoint origin_image;
    double radius = 0.0;  // d(origin, g * origin)
};

struct EnumerationOptions {
    /// Children farther than radius + margin are pruned. Negative selects the
    /// default 2 * max translation length. Any margin >= the out-radius of the
    /// Dirichlet domain is exact: the tiles met by the geodesic from the origin
    /// to g o form a face-adjacent chain whose centres lie within radius +
    /// out-radius.
    double prune_margin = -1.0;
    std::size_t max_word_length = 30;
    /// Image dedup distance. Group elements are deduplicated by origin image
    /// with at least 1e-3 times the minimal translation length.
    double dedup_tolerance = 1e-9;
};

/// Every group element g (identity first) with d(o, g o) <= radius, by
/// breadth-first growth of words, sorted by radius. Throws NumericalError if
/// the word-length cap is reached while the frontier is still growing.
std::vector<GroupElement> enumerate_group(const GeneratorSet& gens, double radius,
                                          const EnumerationOptions& opts = {});

struct Image {
    Word word;
    HPoint point;
    double radius = 0.0;
};

struct ImageSet {
    HPoint base;
    std::vector<Image> images;
};

/// Distinct images g p (g != identity) with rho_min <= d(o, g p) <= rho_max.
ImageSet enumerate_images(const HPoint& p, const GeneratorSet& gens, double rho_min, double rho_max,
                          const EnumerationOptions& opts = {});

/// Same as enumerate_images, but drawing g from a precomputed element list
/// that covers radius rho_max + d(o, p).
ImageSet images_from_elements(const HPoint& p, const std::vector<GroupElement>& elements,
                              double rho_min, double rho_max);

/// True iff d(p, o) <= d(p, y) for every orbit point y (boundary counts as
/// inside). Throws std::invalid_argument on an empty orbit.
bool in_dirichlet_domain(const HPoint& p, const std::vector<HPoint>& orbit);

/// Uniform sampling and integration over the Dirichlet domain by rejection
/// from a ball about the origin.
class DomainSampler {
public:
    explicit DomainSampler(const GeneratorSet& gens, unsigned threads = 0);

    /// Radius of the rejection ball (an upper bound for the out-radius).
    double ball_radius() const { return ball_radius_; }
    /// Max exit radius over the probe directions before the safety margin.
    double out_radius_estimate() const { return out_radius_; }
    double ball_volume() const;
    /// Images of the origin within 2 * ball_radius, identity excluded.
    const std::vector<HPoint>& orbit() const { return orbit_; }

    bool contains(const HPoint& p) const { return in_dirichlet_domain(p, orbit_); }

    /// Enumeration options with the pruning margin set to ball_radius().
    EnumerationOptions enumeration_options() const {
        EnumerationOptions o;
        o.prune_margin = ball_radius_;
        return o;
    }

    /// n i.i.d. points, uniform in hyperbolic volume, deterministic in seed.
    std::vector<HPoint> sample(std::size_t n, std::uint64_t seed) const;

    /// Uniform point in the rejection ball.
    HPoint ball_point(std::mt19937_64& rng) const;

    struct VolumeEstimate {
        double volume = 0.0;
        double stderr_ = 0.0;
        std::size_t accepted = 0;
        std::size_t trials = 0;
    };
    VolumeEstimate volume(std::size_t trials, std::uint64_t seed) const;

private:
    double ball_radius_ = 0.0;
    double out_radius_ = 0.0;
    std::vector<HPoint> orbit_;
    unsigned threads_ = 0;
};

std::vector<HPoint> sample_domain_points(std::size_t n, const GeneratorSet& gens, std::uint64_t seed);

struct VolumeResult {
    double volume = 0.0;
    double stderr_ = 0.0;
};

/// Acceptance fraction times ball volume pi (sinh 2R - 2R). Requires n >= 1e4.
VolumeResult domain_volume_mc(const GeneratorSet& gens, std::size_t n, std::uint64_t seed,
                              unsigned threads = 0);

struct MatchedCircle {
    double alpha = 0.0;        // angular radius seen from the origin
    Spherical center;          // direction of g * origin (rho unused)
    Spherical partner_center;  // direction of g^-1 * origin
    double rho = 0.0;
};

/// cos alpha = (g00 - 1) / (sqrt(g00^2 - 1) tanh rho). Returns nullopt when
/// the argument exceeds 1 (the rho-sphere does not reach the face plane).
std::optional<MatchedCircle> matched_circle(const Isometry& g, double rho);

/// Point on the circle of angular radius alpha about `center` on the
/// rho-sphere, at angle t measured from the meridian through the pole.
HPoint circle_point(const Spherical& center, double alpha, double rho, double t);

/// Lower bound on the diameter: max over sampled pairs (p, q) of
/// min over group elements of d(p, g q). Requires n >= 1000.
double estimate_diameter(const GeneratorSet& gens, std::size_t n, std::uint64_t seed,
                         unsigned threads = 0);

/// Diameter lower bound for a given point sample (shared with the estimator;
/// useful for nested-sample monotonicity).
double diameter_of_sample(const std::vector<HPoint>& points, const std::vector<GroupElement>& elements,
                          unsigned threads = 0);

}  // namespace hyperdrum
