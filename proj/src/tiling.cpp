#include "hyperdrum/tiling.hpp"

#include "hyperdrum/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace hyperdrum {

namespace {

constexpr double kPi = std::numbers::pi;

// Matrices closer than this (max entry) are treated as equal group elements.
constexpr double kSameElement = 1e-8;

bool near_identity(const Eigen::Matrix4d& m) {
    return (m - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < kSameElement;
}

// Spatial hash over the (x1, x2, x3) ambient coordinates. Distinct orbit
// points of a torsion-free group are at least 2 * in-radius apart, which in
// these coordinates is far more than one cell.
class PointIndex {
public:
    explicit PointIndex(double tol) : tol_(tol) {}

    bool contains(const HPoint& p) const {
        const auto c = cell(p);
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    const auto it = cells_.find(key(c[0] + dx, c[1] + dy, c[2] + dz));
                    if (it == cells_.end()) {
                        continue;
                    }
                    for (const HPoint& q : it->second) {
                        if (distance(p, q) < tol_) {
                            return true;
                        }
                    }
                }
            }
        }
        return false;
    }

    void insert(const HPoint& p) {
        const auto c = cell(p);
        cells_[key(c[0], c[1], c[2])].push_back(p);
    }

private:
    static constexpr double kCell = 0.25;

    static std::array<std::int64_t, 3> cell(const HPoint& p) {
        return {static_cast<std::int64_t>(std::floor(p[1] / kCell)),
                static_cast<std::int64_t>(std::floor(p[2] / kCell)),
                static_cast<std::int64_t>(std::floor(p[3] / kCell))};
    }
    static std::uint64_t key(std::int64_t a, std::int64_t b, std::int64_t c) {
        return mix64(static_cast<std::uint64_t>(a) ^ mix64(static_cast<std::uint64_t>(b) ^
                                                           mix64(static_cast<std::uint64_t>(c))));
    }

    double tol_;
    std::unordered_map<std::uint64_t, std::vector<HPoint>> cells_;
};

double ball_volume_of(double r) { return kPi * (std::sinh(2.0 * r) - 2.0 * r); }

// Quasi-uniform directions on the unit sphere (Fibonacci lattice).
std::vector<Eigen::Vector3d> fibonacci_directions(int n) {
    std::vector<Eigen::Vector3d> out;
    out.reserve(n);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        out.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
    }
    return out;
}

HPoint along(const Eigen::Vector3d& dir, double rho) {
    const double s = std::sinh(rho);
    return HPoint::from_ambient(Eigen::Vector4d(std::cosh(rho), s * dir[0], s * dir[1], s * dir[2]));
}

// `margin` must bound the out-radius (see enumerate_group).
std::vector<HPoint> orbit_points(const GeneratorSet& gens, double radius, double margin) {
    EnumerationOptions opts;
    opts.prune_margin = margin;
    std::vector<HPoint> out;
    for (const auto& e : enumerate_group(gens, radius, opts)) {
        if (!e.word.empty()) {
            out.push_back(e.origin_image);
        }
    }
    return out;
}

}  // namespace

GeneratorSet GeneratorSet::from_isometries(const std::vector<Isometry>& gens,
                                           const std::vector<std::string>& labels) {
    if (gens.empty()) {
        throw GeometryError("empty generator list");
    }
    auto label_of = [&](std::size_t i) {
        return i < labels.size() ? labels[i] : "g" + std::to_string(i);
    };
    for (std::size_t i = 0; i < gens.size(); ++i) {
        if (gens[i](0, 0) <= 1.0 + 1e-9) {
            throw GeometryError("identity generator: " + label_of(i) + " does not move the basepoint");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if ((gens[i].matrix() - gens[j].matrix()).cwiseAbs().maxCoeff() < kSameElement) {
                throw GeometryError("duplicate generators: " + label_of(j) + " and " + label_of(i));
            }
        }
    }
    GeneratorSet out;
    std::vector<bool> used(gens.size(), false);
    for (std::size_t i = 0; i < gens.size(); ++i) {
        if (used[i]) {
            continue;
        }
        used[i] = true;
        const std::size_t at = out.elements_.size();
        out.elements_.push_back(gens[i]);
        out.labels_.push_back(label_of(i));
        std::optional<std::size_t> partner;
        for (std::size_t j = i + 1; j < gens.size(); ++j) {
            if (!used[j] && near_identity(gens[i].matrix() * gens[j].matrix())) {
                partner = j;
                break;
            }
        }
        if (partner) {
            used[*partner] = true;
            out.elements_.push_back(gens[*partner]);
            out.labels_.push_back(label_of(*partner));
        } else {
            out.elements_.push_back(inverse(gens[i]));
            out.labels_.push_back(label_of(i) + "^-1");
        }
        out.inverse_.push_back(at + 1);
        out.inverse_.push_back(at);
    }
    return out;
}

double GeneratorSet::min_translation() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& g : elements_) {
        m = std::min(m, g.displacement());
    }
    return m;
}

double GeneratorSet::max_translation() const {
    double m = 0.0;
    for (const auto& g : elements_) {
        m = std::max(m, g.displacement());
    }
    return m;
}

std::vector<GroupElement> enumerate_group(const GeneratorSet& gens, double radius,
                                          const EnumerationOptions& opts) {
    if (gens.size() == 0) {
        throw std::invalid_argument("enumerate_group: empty generator set");
    }
    const double margin = opts.prune_margin >= 0.0 ? opts.prune_margin : 2.0 * gens.max_translation();
    const double prune = radius + margin;

    // Distinct points of the origin's orbit are at least the minimal
    // translation length apart, while rounding in long words (letters
    // translating by ~2) reaches 1e-7 by radius 5. Comparing against a fixed
    // 1e-9 would let near-duplicates through and blow up the search.
    const double tol = std::max(opts.dedup_tolerance, 1e-3 * gens.min_translation());
    std::vector<GroupElement> result;
    PointIndex seen(tol);
    GroupElement identity;
    result.push_back(identity);
    seen.insert(identity.origin_image);

    std::vector<GroupElement> frontier{identity};
    for (std::size_t length = 1; !frontier.empty(); ++length) {
        if (length > opts.max_word_length) {
            throw NumericalError("enumerate_group: word-length cap " +
                                 std::to_string(opts.max_word_length) +
                                 " reached before the orbit closed (ill-conditioned generators?)");
        }
        std::vector<GroupElement> next;
        for (const auto& w : frontier) {
            for (std::size_t i = 0; i < gens.size(); ++i) {
                // skip immediate backtracking
                if (!w.word.empty() && gens.inverse_index(w.word.back()) == i) {
                    continue;
                }
                const Eigen::Vector4d col = w.g.matrix() * gens[i].matrix().col(0);
                const HPoint pt = HPoint::from_ambient(col);
                const double r = pt.radius();
                if (r > prune || seen.contains(pt)) {
                    continue;
                }
                seen.insert(pt);
                GroupElement child;
                child.g = compose(w.g, gens[i]);
                child.word = w.word;
                child.word.push_back(static_cast<std::uint16_t>(i));
                child.origin_image = apply(child.g, HPoint::origin());
                child.radius = child.origin_image.radius();
                if (child.radius <= radius) {
                    result.push_back(child);
                }
                next.push_back(std::move(child));
            }
        }
        frontier = std::move(next);
    }
    std::stable_sort(result.begin(), result.end(),
                     [](const GroupElement& a, const GroupElement& b) { return a.radius < b.radius; });
    return result;
}

ImageSet images_from_elements(const HPoint& p, const std::vector<GroupElement>& elements,
                              double rho_min, double rho_max) {
    ImageSet out;
    out.base = p;
    for (const auto& e : elements) {
        if (e.word.empty()) {
            continue;
        }
        const HPoint x = apply(e.g, p);
        const double r = x.radius();
        if (r >= rho_min && r <= rho_max) {
            out.images.push_back({e.word, x, r});
        }
    }
    return out;
}

ImageSet enumerate_images(const HPoint& p, const GeneratorSet& gens, double rho_min, double rho_max,
                          const EnumerationOptions& opts) {
    if (!(rho_max > 0.0)) {
        throw std::invalid_argument("enumerate_images: rho_max must be positive");
    }
    const auto elements = enumerate_group(gens, rho_max + p.radius(), opts);
    ImageSet raw = images_from_elements(p, elements, rho_min, rho_max);
    ImageSet out;
    out.base = p;
    for (auto& img : raw.images) {
        const bool dup = std::any_of(out.images.begin(), out.images.end(), [&](const Image& q) {
            return distance(q.point, img.point) < opts.dedup_tolerance;
        });
        if (!dup) {
            out.images.push_back(std::move(img));
        }
    }
    return out;
}

bool in_dirichlet_domain(const HPoint& p, const std::vector<HPoint>& orbit) {
    if (orbit.empty()) {
        throw std::invalid_argument("in_dirichlet_domain: empty orbit");
    }
    // d(p,o) <= d(p,y)  <=>  <p,o> <= <p,y>  with <p,o> = p0
    const double p0 = p[0];
    const double tol = 1e-12 * p0;
    for (const HPoint& y : orbit) {
        if (minkowski_dot(p.ambient(), y.ambient()) < p0 - tol) {
            return false;
        }
    }
    return true;
}

DomainSampler::DomainSampler(const GeneratorSet& gens, unsigned threads) : threads_(threads) {
    constexpr int kDirections = 1000;
    const auto dirs = fibonacci_directions(kDirections);
    // Every face lies at half a translation length, so the domain reaches at
    // least this far; grow the probe radius until every direction exits.
    double probe = 0.75 * gens.max_translation();
    std::vector<HPoint> orbit;
    for (;;) {
        // An incomplete orbit only enlarges the apparent domain, so using the
        // probe radius as the margin can delay closure but never fake it.
        orbit = orbit_points(gens, 2.0 * probe, probe);
        const bool closed = std::none_of(dirs.begin(), dirs.end(), [&](const Eigen::Vector3d& u) {
            return in_dirichlet_domain(along(u, probe), orbit);
        });
        if (closed) {
            break;
        }
        probe *= 1.1;
        if (probe > 20.0) {
            throw NumericalError("DomainSampler: Dirichlet domain does not close within radius 20");
        }
    }
    double rmax = 0.0;
    for (const auto& u : dirs) {
        double lo = 0.0;
        double hi = probe;
        while (hi - lo > 1e-7) {
            const double mid = 0.5 * (lo + hi);
            (in_dirichlet_domain(along(u, mid), orbit) ? lo : hi) = mid;
        }
        rmax = std::max(rmax, hi);
    }
    out_radius_ = rmax;
    // Vertices can fall between probe directions.
    ball_radius_ = 1.04 * rmax;
    orbit_ = orbit_points(gens, 2.0 * ball_radius_, ball_radius_);
}

double DomainSampler::ball_volume() const { return ball_volume_of(ball_radius_); }

HPoint DomainSampler::ball_point(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal;
    const double target = uni(rng) * ball_volume() / kPi;
    // invert sinh(2r) - 2r = target by Newton from the right (convex, increasing)
    double r = ball_radius_;
    for (int it = 0; it < 100; ++it) {
        const double f = std::sinh(2.0 * r) - 2.0 * r - target;
        const double df = 4.0 * std::sinh(r) * std::sinh(r);
        if (df <= 0.0) {
            break;
        }
        const double step = f / df;
        r -= step;
        if (std::abs(step) < 1e-15 * std::max(r, 1e-300)) {
            break;
        }
    }
    r = std::clamp(r, 0.0, ball_radius_);
    Eigen::Vector3d u(normal(rng), normal(rng), normal(rng));
    u.normalize();
    return along(u, r);
}

std::vector<HPoint> DomainSampler::sample(std::size_t n, std::uint64_t seed) const {
    if (n == 0) {
        throw std::invalid_argument("sample: n must be at least 1");
    }
    auto rng = task_rng(seed, 0);
    std::vector<HPoint> out;
    out.reserve(n);
    std::size_t trials = 0;
    while (out.size() < n) {
        const HPoint p = ball_point(rng);
        ++trials;
        if (contains(p)) {
            out.push_back(p);
        }
        if (trials >= 10000 && out.size() * 1000 < trials) {
            throw NumericalError("sample: acceptance rate below 1e-3, out-radius estimate is wrong");
        }
    }
    return out;
}

DomainSampler::VolumeEstimate DomainSampler::volume(std::size_t trials, std::uint64_t seed) const {
    constexpr std::size_t kChunk = 1 << 16;
    const std::size_t chunks = (trials + kChunk - 1) / kChunk;
    std::vector<std::size_t> hits(chunks, 0);
    parallel_for(chunks, threads_, [&](std::size_t c) {
        auto rng = task_rng(seed, c);
        const std::size_t count = std::min(kChunk, trials - c * kChunk);
        std::size_t h = 0;
        for (std::size_t i = 0; i < count; ++i) {
            if (contains(ball_point(rng))) {
                ++h;
            }
        }
        hits[c] = h;
    });
    VolumeEstimate est;
    est.trials = trials;
    for (auto h : hits) {
        est.accepted += h;
    }
    const double f = static_cast<double>(est.accepted) / static_cast<double>(trials);
    est.volume = f * ball_volume();
    est.stderr_ = ball_volume() * std::sqrt(f * (1.0 - f) / static_cast<double>(trials));
    return est;
}

std::vector<HPoint> sample_domain_points(std::size_t n, const GeneratorSet& gens, std::uint64_t seed) {
    return DomainSampler(gens).sample(n, seed);
}

VolumeResult domain_volume_mc(const GeneratorSet& gens, std::size_t n, std::uint64_t seed, unsigned threads) {
    if (n < 10000) {
        throw std::invalid_argument("domain_volume_mc: need at least 1e4 trials");
    }
    const auto est = DomainSampler(gens, threads).volume(n, seed);
    return {est.volume, est.stderr_};
}

std::optional<MatchedCircle> matched_circle(const Isometry& g, double rho) {
    const double g00 = g(0, 0);
    if (!(g00 > 1.0) || !(rho > 0.0)) {
        throw std::invalid_argument("matched_circle: need g00 > 1 and rho > 0");
    }
    const double sh = std::sqrt(g00 * g00 - 1.0);
    const double arg = (g00 - 1.0) / (sh * std::tanh(rho));
    // tangency can round either way
    if (arg > 1.0 + 1e-12) {
        return std::nullopt;
    }
    auto direction = [&](const Eigen::Vector4d& col) {
        Spherical s;
        s.theta = std::acos(std::clamp(col[3] / sh, -1.0, 1.0));
        s.phi = std::atan2(col[2], col[1]);
        if (s.phi < 0.0) {
            s.phi += 2.0 * kPi;
        }
        s.rho = rho;
        return s;
    };
    MatchedCircle c;
    c.rho = rho;
    c.alpha = std::acos(std::min(arg, 1.0));
    c.center = direction(g.matrix().col(0));
    c.partner_center = direction(inverse(g).matrix().col(0));
    return c;
}

HPoint circle_point(const Spherical& center, double alpha, double rho, double t) {
    const double st = std::sin(center.theta);
    const double ct = std::cos(center.theta);
    const double sp = std::sin(center.phi);
    const double cp = std::cos(center.phi);
    const Eigen::Vector3d c(st * cp, st * sp, ct);
    const Eigen::Vector3d e_theta(ct * cp, ct * sp, -st);
    const Eigen::Vector3d e_phi(-sp, cp, 0.0);
    const Eigen::Vector3d u =
        std::cos(alpha) * c + std::sin(alpha) * (std::cos(t) * e_theta + std::sin(t) * e_phi);
    return along(u.normalized(), rho);
}

double diameter_of_sample(const std::vector<HPoint>& points, const std::vector<GroupElement>& elements,
                          unsigned threads) {
    const std::size_t n = points.size();
    const std::size_t m = elements.size();
    Eigen::Matrix<double, Eigen::Dynamic, 4> pts_eta(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = points[i].ambient();
        pts_eta.row(i) << x[0], -x[1], -x[2], -x[3];
    }
    std::vector<double> best(n, 1.0);
    parallel_for(n, threads, [&](std::size_t j) {
        if (j == 0) {
            return;
        }
        Eigen::Matrix<double, 4, Eigen::Dynamic> imgs(4, m);
        for (std::size_t e = 0; e < m; ++e) {
            imgs.col(e) = elements[e].g.matrix() * points[j].ambient();
        }
        // cosh of the manifold distance from each earlier point to point j
        constexpr std::size_t kRows = 128;
        double c = 1.0;
        for (std::size_t r0 = 0; r0 < j; r0 += kRows) {
            const auto rows = static_cast<Eigen::Index>(std::min(kRows, j - r0));
            const Eigen::MatrixXd dots = pts_eta.middleRows(static_cast<Eigen::Index>(r0), rows) * imgs;
            c = std::max(c, dots.rowwise().minCoeff().maxCoeff());
        }
        best[j] = c;
    });
    const double c = *std::max_element(best.begin(), best.end());
    return std::acosh(std::max(1.0, c));
}

double estimate_diameter(const GeneratorSet& gens, std::size_t n, std::uint64_t seed, unsigned threads) {
    if (n < 1000) {
        throw std::invalid_argument("estimate_diameter: need at least 1e3 points");
    }
    const DomainSampler sampler(gens, threads);
    const auto points = sampler.sample(n, seed);
    // d(p, g q) <= D <= 2R forces d(o, g o) <= 4R for the minimizing g
    const auto elements = enumerate_group(gens, 4.0 * sampler.ball_radius(), sampler.enumeration_options());
    return diameter_of_sample(points, elements, threads);
}

}  // namespace hyperdrum
