#pragma once

// Checks on computed spectra: Monte Carlo normalization and overlaps, the
// Weyl staircase, coefficient statistics, matched circles and the
// diameter bounds on the lowest eigenvalue.

#include "hyperdrum/basis.hpp"
#include "hyperdrum/tiling.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hyperdrum {

struct NormalizedMode {
    ModeCoefficients mode;
    double scale = 0.0;      // factor applied to the input coefficients
    double rel_error = 0.0;  // relative standard error of the integral of Psi^2
    std::string warning;     // set when rel_error exceeds 2%
};

/// Rescales so that the Monte Carlo integral of Psi^2 over the domain is 1.
/// Uses n_mc uniform domain points and a volume estimate from 4 n_mc ball trials.
NormalizedMode normalize_mode(const ModeCoefficients& mode, const DomainSampler& sampler, std::size_t n_mc,
                              std::uint64_t seed);

struct Overlap {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Monte Carlo estimate of the integral of Psi_a Psi_b for normalized modes,
/// from n_mc uniform domain points. The volume is taken from the sampler's
/// own estimate with 4 n_mc trials.
Overlap overlap(const ModeCoefficients& a, const ModeCoefficients& b, const DomainSampler& sampler,
                std::size_t n_mc, std::uint64_t seed);

/// Normalized Gram matrix G_ij = <a_i, a_j> / sqrt(<a_i, a_i> <a_j, a_j>) with
/// every mode evaluated on one shared sample. Independent of the volume.
Eigen::MatrixXd overlap_matrix(const std::vector<ModeCoefficients>& modes, const DomainSampler& sampler,
                               std::size_t n_mc, std::uint64_t seed, unsigned threads = 0);

struct Staircase {
    std::vector<double> k;                   // distinct wavenumbers, ascending
    std::vector<std::size_t> multiplicity;  // matching k
    std::vector<std::size_t> count;         // N(<= k[i])
    double a = 0.0;                          // fitted N ~ a k^3 + b
    double b = 0.0;
    double fit_lo = 0.0;  // fit window [k_top / 2, k_top]
    double fit_hi = 0.0;

    std::size_t count_at(double kk) const;  // N(<= kk)
};

/// Least-squares fit of a k^3 + b to the staircase corners in the upper half
/// of the range. Requires at least 10 modes (counting multiplicity).
Staircase weyl_staircase(const std::vector<double>& k, const std::vector<std::size_t>& multiplicity);

/// Vol / (6 pi^2).
double weyl_coefficient(double volume);

/// Published eigenvalue list:
///
///   hyperdrum-spectrum 1
///   name <string>
///   volume <real>            optional
///   <q2> <multiplicity>      one line per distinct eigenvalue
struct Spectrum {
    std::string name;
    std::optional<double> volume;
    std::vector<double> q2;
    std::vector<std::size_t> multiplicity;

    std::vector<double> k() const;  // sqrt(q2 - 1)
};

Spectrum parse_spectrum_text(const std::string& text, const std::string& source = "<string>");
Spectrum parse_spectrum(const std::filesystem::path& path);

struct GoeReport {
    std::vector<double> x;    // sorted (a - mean)^2 / variance
    std::vector<double> cdf;  // empirical CDF at x
    double ks = 0.0;          // sup |F - I|
};

/// I(x) = erf(sqrt(x / 2)); 0 for x <= 0.
double goe_cumulative(double x);

/// KS comparison of one coefficient vector with the chi-square(1) law.
/// Throws std::invalid_argument for fewer than 2 values or zero variance.
GoeReport goe_test(const Eigen::VectorXd& coefficients);

struct CirclesReport {
    double rms_mismatch = 0.0;
    double rms_mode = 0.0;
    double alpha = 0.0;
    std::vector<double> t;             // angle around C
    std::vector<double> psi;           // Psi on C
    std::vector<double> psi_partner;   // Psi at g applied to the points of C

    double ratio() const { return rms_mismatch / rms_mode; }
};

/// C is the circle about the direction of g^-1 * origin on the rho-sphere;
/// g maps it onto the partner circle about g * origin. Throws GeometryError
/// if the sphere does not reach the face plane of g.
CirclesReport circles_test(const std::function<double(const HPoint&)>& psi, const Isometry& g, double rho,
                           std::size_t n_samples);

CirclesReport circles_test(const ModeCoefficients& mode, const Isometry& g, double rho,
                           std::size_t n_samples = 256);

struct BoundsReport {
    double D = 0.0;
    double D_tilde = 0.0;  // sqrt of the smallest integer >= D^2
    double lower = 0.0;
    double upper = 0.0;
};

/// lower = 4 D~ / (D^2 (sinh D~ + D~)^2), upper = 1 + (2 pi / D)^2.
BoundsReport eigenvalue_bounds(double D);

/// (2 pi / k) / D.
double wavelength_ratio(double k, double D);

}  // namespace hyperdrum
