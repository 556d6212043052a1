#pragma once

// Eigenmodes of the Laplacian on H^3 / Gamma from the periodicity conditions
// Psi(g_a p) = Psi(g_b p), expanded in covering-space modes Q_klm and solved
// in the least-squares sense by SVD.

#include "hyperdrum/basis.hpp"
#include "hyperdrum/tiling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hyperdrum {

struct ScanConfig {
    double k_lo = 1.0;
    double k_hi = 10.0;
    double dk = 0.01;
    std::size_t points = 20;  // d
    int L_offset = 10;        // L = L_offset + floor(k)
    int ell_min = 5;
    int c_offset = 10;        // c = c_offset + floor(c_scale / k)
    double c_scale = 100.0;
    double envelope = 0.25;  // X^l_k(rho) sinh(rho) threshold defining rho_min, rho_max
    // Below low_k_limit the dips of large manifolds are too shallow at the
    // default radius; a smaller threshold takes more images per point.
    double low_k_envelope = 0.1;
    double low_k_limit = 3.0;
    std::size_t min_images = 10;
    std::size_t n_keep = 5;
    std::size_t refine_keep = 8;  // singular pairs retained at a refined minimum
    double multiplicity_tau = 0.1;
    // A further sigma_i also counts if chi2_i dips at k*: its value there is
    // below dip_ratio times the smaller of chi2_i(k* +- dip_window).
    double dip_window = 0.08;
    double dip_ratio = 0.7;
    // Refinement re-solves each candidate with L + polish_L and this envelope,
    // within polish_window of the scan-level minimum. polish_L < 0 disables it.
    int polish_L = 4;
    double polish_envelope = 0.1;
    double polish_window = 0.03;
    double refine_tol = 1e-4;
    std::uint64_t seed = 1;
    unsigned threads = 0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    /// Number of grid points k_lo, k_lo + dk, ... <= k_hi.
    std::size_t grid_size() const;
    double envelope_at(double k) const { return k < low_k_limit ? low_k_envelope : envelope; }
    double grid_k(std::size_t i) const { return k_lo + dk * static_cast<double>(i); }
};

struct SolveParams {
    int L = 0;
    int ell_min = 0;
    double rho_min = 0.0;
    double rho_max = 0.0;
    int c = 0;

    int N() const { return coefficient_count(L); }
    std::size_t target_rows() const { return static_cast<std::size_t>(c) * static_cast<std::size_t>(N()); }
    bool operator==(const SolveParams&) const = default;
};

/// Heuristic parameters without the image-count rule.
SolveParams base_params(double k, const ScanConfig& cfg);

struct RowSource {
    std::uint32_t point = 0;
    std::uint32_t a = 0;  // copy indices into Problem::copies(point); 0 is the base point
    std::uint32_t b = 0;
};

struct SystemMatrix {
    Eigen::MatrixXd A;
    std::vector<RowSource> rows;
    std::size_t full_pairs = 0;  // pairs available before subsampling
    std::size_t points_used = 0;
};

struct SingularPairs {
    std::vector<double> sigma;  // ascending
    Eigen::MatrixXd vectors;    // matching right singular vectors as columns
};

/// The n smallest singular values of A and their right singular vectors.
/// Requires rows >= cols. Throws NumericalError if the SVD fails.
SingularPairs svd_smallest(const Eigen::MatrixXd& A, std::size_t n);

/// Sample points and group elements shared by every k of a scan.
class Problem {
public:
    Problem(const GeneratorSet& gens, const ScanConfig& cfg);

    const ScanConfig& config() const { return cfg_; }
    const GeneratorSet& generators() const { return gens_; }
    const DomainSampler& sampler() const { return sampler_; }
    /// Points in use order; the first cfg.points are the primary sample,
    /// the rest are drawn on when a k needs more rows.
    const std::vector<HPoint>& points() const { return points_; }

    /// Makes the element list cover images out to rho_max. Not thread safe.
    void ensure_radius(double rho_max);
    double covered_radius() const { return covered_; }

    /// base_params plus the image-count rule: L grows until each primary
    /// point has at least cfg.min_images images inside [0, rho_max].
    /// Extends the element list as needed, so not thread safe.
    SolveParams params(double k);

    /// Parameters frozen over the unit interval floor(k) <= k' < floor(k) + 1
    /// (constant L), evaluated at its midpoint. Within a segment the system
    /// depends smoothly on k.
    SolveParams segment_params(double k);

    /// Higher-accuracy parameters for refinement near k, derived from the
    /// scan parameters `base`. Extends the element list, so not thread safe.
    SolveParams polish_params(double k, const SolveParams& base);

    /// Base point followed by its images within [rho_min, rho_max], ordered
    /// by element index (stable across k).
    std::vector<HPoint> copies(std::size_t point, const SolveParams& p) const;

    SystemMatrix assemble(double k, const SolveParams& p) const;
    SingularPairs solve(double k, const SolveParams& p, std::size_t n_keep) const;

private:
    std::size_t image_count(std::size_t point, double rho_max) const;

    GeneratorSet gens_;
    ScanConfig cfg_;
    DomainSampler sampler_;
    std::vector<HPoint> points_;
    std::vector<GroupElement> elements_;
    double covered_ = 0.0;
};

/// Assembles one row per pair. Exposed for tests; `copies[j]` holds the base
/// point and images of point j.
SystemMatrix assemble_system(const std::vector<std::vector<HPoint>>& copies, double k, int L,
                             std::size_t target_rows, std::uint64_t seed);

struct ScanPoint {
    double k = 0.0;
    std::vector<double> sigma;
    SolveParams params;
    std::size_t rows = 0;

    double chi2(std::size_t i = 0) const { return sigma[i] * sigma[i]; }
};

struct ScanResult {
    std::vector<ScanPoint> points;
    /// Evaluations just past each segment end with that segment's parameters,
    /// so a minimum near a segment boundary is seen by one smooth curve.
    std::vector<ScanPoint> overlap;
};

/// Lowest k the method is trusted at; scans never evaluate below it.
inline constexpr double kMinScanK = 0.25;

/// Grid points beyond each segment end that are also evaluated with the
/// segment's parameters. An end that is still rising is extended in these
/// steps, up to kMaxSegmentExtension points, until it stands kFlankRise above
/// the bottom of its flank, so a minimum near a segment end gets a proper
/// bracket. Overlap points may lie outside [k_lo, k_hi].
inline constexpr std::size_t kSegmentOverlap = 4;
inline constexpr std::size_t kMaxSegmentExtension = 40;
inline constexpr double kFlankRise = 3.0;

ScanResult scan(Problem& problem);

struct Candidate {
    std::size_t index = 0;  // grid index of the chi2_1 minimum
    double k = 0.0;
    double k_lo = 0.0;  // bracket
    double k_hi = 0.0;
    double prominence = 0.0;  // ratio of the lower bracketing maximum to the minimum
    bool blended = false;
    std::optional<std::size_t> partner;  // index into the candidate list
    SolveParams params;                  // parameters of the curve the minimum was found on
};

struct MinimaOptions {
    double min_prominence = 1.5;
    std::size_t blend_steps = 3;  // minima closer than this many grid steps are blended
};

/// Local minima of chi2_1 with enough prominence, in grid order. Each run of
/// equal parameters (with its overlap points) is searched as one curve;
/// minima seen from two segments are reported once.
std::vector<Candidate> detect_minima(const ScanResult& scan, const MinimaOptions& opts = {});

struct Eigenmode {
    double k = 0.0;
    std::size_t multiplicity = 0;
    int L = 0;
    double chi2 = 0.0;
    std::vector<double> sigma;    // retained singular values at k
    Eigen::MatrixXd coefficients;  // N x multiplicity, orthonormal columns
    std::string manifold;
    std::uint64_t config_hash = 0;

    double q2() const { return k * k + 1.0; }
    ModeCoefficients mode(std::size_t i = 0) const;
};

struct RefineOutcome {
    std::vector<Eigenmode> modes;  // one, or two for a resolved blend
    bool rejected = false;
    std::string reason;
};

/// Golden-section refinement of chi2_1 inside the candidate bracket with the
/// candidate's parameters, then again with polish parameters near that
/// minimum; multiplicity and vectors come from the polished solve. With a
/// partner, the union of both brackets is sampled finely and split by
/// fit_two_quadratics first; both modes are returned.
RefineOutcome refine_minimum(Problem& problem, const Candidate& c, const Candidate* partner = nullptr);

/// Refines every candidate, handling each blended pair once. Candidates run
/// in parallel.
std::vector<RefineOutcome> refine_all(Problem& problem, const std::vector<Candidate>& candidates);

/// Multiplicity from singular values at k* and at k* -+ dip_window (all
/// ascending, same length).
std::size_t count_multiplicity(const std::vector<double>& at, const std::vector<double>& below,
                               const std::vector<double>& above, const ScanConfig& cfg);

/// Two-quadratic model for a blended bracket: the lower envelope of two
/// parabolas fitted to (k, chi2) samples. Returns the two vertex positions in
/// ascending order, or nullopt if no split point gives two interior minima.
std::optional<std::pair<double, double>> fit_two_quadratics(const std::vector<double>& k,
                                                            const std::vector<double>& chi2);

/// Stable hash of the configuration fields that affect results.
std::uint64_t config_hash(const ScanConfig& cfg);

}  // namespace hyperdrum
