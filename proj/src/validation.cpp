#include "hyperdrum/validation.hpp"

#include "hyperdrum/errors.hpp"
#include "hyperdrum/parallel.hpp"

#include <algorithm>
#include <fstream>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hyperdrum {

namespace {

constexpr std::size_t kChunk = 1024;
constexpr std::uint64_t kVolumeStream = 0x766f6c756d65ULL;

// values(i, j) = Psi_j(points[i])
Eigen::MatrixXd evaluate_on(const std::vector<ModeCoefficients>& modes, const std::vector<HPoint>& points,
                            unsigned threads) {
    Eigen::MatrixXd values(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(modes.size()));
    const std::size_t chunks = (points.size() + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t end = std::min(points.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            for (std::size_t j = 0; j < modes.size(); ++j) {
                values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    evaluate_mode(modes[j], points[i]);
            }
        }
    });
    return values;
}

void require_samples(std::size_t n_mc) {
    if (n_mc < 2) {
        throw std::invalid_argument("Monte Carlo integration needs at least 2 samples");
    }
}

}  // namespace

NormalizedMode normalize_mode(const ModeCoefficients& mode, const DomainSampler& sampler, std::size_t n_mc,
                              std::uint64_t seed) {
    require_samples(n_mc);
    if (mode.a.size() == 0 || mode.a.cwiseAbs().maxCoeff() == 0.0) {
        throw std::invalid_argument("normalize_mode: zero coefficient vector");
    }
    const auto points = sampler.sample(n_mc, seed);
    const Eigen::VectorXd psi = evaluate_on({mode}, points, 0).col(0);
    const Eigen::ArrayXd sq = psi.array().square();
    const double n = static_cast<double>(n_mc);
    const double mean = sq.mean();
    const double var = (sq - mean).square().sum() / (n - 1.0);
    const auto vol = sampler.volume(4 * n_mc, mix64(seed ^ kVolumeStream));

    NormalizedMode out;
    const double integral = vol.volume * mean;
    out.scale = 1.0 / std::sqrt(integral);
    out.mode = mode;
    out.mode.a *= out.scale;
    const double rel_mean = std::sqrt(var / n) / mean;
    const double rel_vol = vol.stderr_ / vol.volume;
    out.rel_error = std::sqrt(rel_mean * rel_mean + rel_vol * rel_vol);
    if (out.rel_error > 0.02) {
        const double factor = (out.rel_error / 0.02) * (out.rel_error / 0.02);
        std::ostringstream msg;
        msg << "normalization error " << 100.0 * out.rel_error << "% exceeds 2%; try n_mc >= "
            << static_cast<std::size_t>(std::ceil(1.1 * factor * n));
        out.warning = msg.str();
    }
    return out;
}

Overlap overlap(const ModeCoefficients& a, const ModeCoefficients& b, const DomainSampler& sampler,
                std::size_t n_mc, std::uint64_t seed) {
    require_samples(n_mc);
    const auto points = sampler.sample(n_mc, seed);
    const Eigen::MatrixXd v = evaluate_on({a, b}, points, 0);
    const Eigen::ArrayXd prod = v.col(0).array() * v.col(1).array();
    const double n = static_cast<double>(n_mc);
    const double mean = prod.mean();
    const double sd = std::sqrt((prod - mean).square().sum() / (n - 1.0));
    const double vol = sampler.volume(4 * n_mc, mix64(seed ^ kVolumeStream)).volume;
    return {vol * mean, vol * sd / std::sqrt(n)};
}

Eigen::MatrixXd overlap_matrix(const std::vector<ModeCoefficients>& modes, const DomainSampler& sampler,
                               std::size_t n_mc, std::uint64_t seed, unsigned threads) {
    require_samples(n_mc);
    const auto points = sampler.sample(n_mc, seed);
    const Eigen::MatrixXd v = evaluate_on(modes, points, threads);
    Eigen::MatrixXd g = v.transpose() * v;
    const Eigen::VectorXd d = g.diagonal().cwiseSqrt();
    if ((d.array() == 0.0).any()) {
        throw std::invalid_argument("overlap_matrix: a mode vanishes on the sample");
    }
    return d.cwiseInverse().asDiagonal() * g * d.cwiseInverse().asDiagonal();
}

std::size_t Staircase::count_at(double kk) const {
    const auto it = std::upper_bound(k.begin(), k.end(), kk);
    return it == k.begin() ? 0 : count[static_cast<std::size_t>(it - k.begin()) - 1];
}

Staircase weyl_staircase(const std::vector<double>& k, const std::vector<std::size_t>& multiplicity) {
    if (k.size() != multiplicity.size()) {
        throw std::invalid_argument("weyl_staircase: k and multiplicity lists differ in length");
    }
    std::vector<std::size_t> order(k.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return k[x] < k[y]; });

    Staircase s;
    std::size_t total = 0;
    for (std::size_t i : order) {
        if (!(k[i] > 0.0) || multiplicity[i] == 0) {
            throw std::invalid_argument("weyl_staircase: wavenumbers and multiplicities must be positive");
        }
        total += multiplicity[i];
        if (!s.k.empty() && s.k.back() == k[i]) {
            s.multiplicity.back() += multiplicity[i];
            s.count.back() = total;
            continue;
        }
        s.k.push_back(k[i]);
        s.multiplicity.push_back(multiplicity[i]);
        s.count.push_back(total);
    }
    if (total < 10) {
        throw std::invalid_argument("weyl_staircase: fit needs at least 10 modes, got " + std::to_string(total));
    }
    s.fit_hi = s.k.back();
    s.fit_lo = 0.5 * s.fit_hi;
    std::vector<std::size_t> use;
    for (std::size_t i = 0; i < s.k.size(); ++i) {
        if (s.k[i] >= s.fit_lo) {
            use.push_back(i);
        }
    }
    if (use.size() < 2) {
        throw std::invalid_argument("weyl_staircase: fewer than 2 distinct wavenumbers in the fit window");
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(use.size()), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(use.size()));
    for (std::size_t r = 0; r < use.size(); ++r) {
        const double kk = s.k[use[r]];
        X.row(static_cast<Eigen::Index>(r)) << kk * kk * kk, 1.0;
        y[static_cast<Eigen::Index>(r)] = static_cast<double>(s.count[use[r]]);
    }
    const Eigen::Vector2d c = X.colPivHouseholderQr().solve(y);
    s.a = c[0];
    s.b = c[1];
    return s;
}

double weyl_coefficient(double volume) { return volume / (6.0 * std::numbers::pi * std::numbers::pi); }

std::vector<double> Spectrum::k() const {
    std::vector<double> out;
    for (double q : q2) {
        out.push_back(std::sqrt(q - 1.0));
    }
    return out;
}

Spectrum parse_spectrum_text(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    Spectrum s;
    bool header = false;
    int number = 0;
    for (std::string line; std::getline(in, line);) {
        ++number;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        const std::string where = source + ":" + std::to_string(number);
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (!header) {
            int version = 0;
            if (key != "hyperdrum-spectrum" || !(ls >> version)) {
                throw std::runtime_error(where + ": missing 'hyperdrum-spectrum' header");
            }
            if (version != 1) {
                throw std::runtime_error(where + ": unsupported schema version " + std::to_string(version));
            }
            header = true;
        } else if (key == "name") {
            std::getline(ls >> std::ws, s.name);
        } else if (key == "volume") {
            double v = 0.0;
            if (!(ls >> v)) {
                throw std::runtime_error(where + ": expected a volume");
            }
            s.volume = v;
        } else {
            double q = 0.0;
            long long m = 0;
            std::string rest;
            try {
                std::size_t used = 0;
                q = std::stod(key, &used);
                if (used != key.size()) {
                    throw std::invalid_argument(key);
                }
            } catch (const std::exception&) {
                throw std::runtime_error(where + ": unknown key '" + key + "'");
            }
            if (!(ls >> m) || (ls >> rest) || m < 1 || !(q > 1.0)) {
                throw std::runtime_error(where + ": expected '<q2 > 1> <multiplicity >= 1>'");
            }
            s.q2.push_back(q);
            s.multiplicity.push_back(static_cast<std::size_t>(m));
        }
    }
    if (!header) {
        throw std::runtime_error(source + ": empty spectrum file");
    }
    return s;
}

Spectrum parse_spectrum(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open spectrum file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spectrum_text(buf.str(), path.string());
}

double goe_cumulative(double x) { return x <= 0.0 ? 0.0 : std::erf(std::sqrt(0.5 * x)); }

GoeReport goe_test(const Eigen::VectorXd& coefficients) {
    const auto n = coefficients.size();
    if (n < 2) {
        throw std::invalid_argument("goe_test: need at least 2 coefficients");
    }
    const double mean = coefficients.mean();
    const double var = (coefficients.array() - mean).square().mean();
    if (!(var > 0.0)) {
        throw std::invalid_argument("goe_test: coefficients have zero variance");
    }
    GoeReport r;
    r.x.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = coefficients[i] - mean;
        r.x[static_cast<std::size_t>(i)] = d * d / var;
    }
    std::sort(r.x.begin(), r.x.end());
    const double nn = static_cast<double>(n);
    r.cdf.resize(r.x.size());
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        r.cdf[i] = static_cast<double>(i + 1) / nn;
        const double model = goe_cumulative(r.x[i]);
        r.ks = std::max({r.ks, r.cdf[i] - model, model - static_cast<double>(i) / nn});
    }
    return r;
}

CirclesReport circles_test(const std::function<double(const HPoint&)>& psi, const Isometry& g, double rho,
                           std::size_t n_samples) {
    if (n_samples == 0) {
        throw std::invalid_argument("circles_test: need at least one sample");
    }
    const auto circle = matched_circle(g, rho);
    if (!circle) {
        std::ostringstream msg;
        msg << "circles_test: the sphere of radius " << rho << " does not reach the face plane of the generator";
        throw GeometryError(msg.str());
    }
    CirclesReport r;
    r.alpha = circle->alpha;
    double mismatch = 0.0;
    double mode = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_samples);
        const HPoint x = circle_point(circle->partner_center, circle->alpha, rho, t);
        const double a = psi(x);
        const double b = psi(apply(g, x));
        r.t.push_back(t);
        r.psi.push_back(a);
        r.psi_partner.push_back(b);
        mismatch += (a - b) * (a - b);
        mode += 0.5 * (a * a + b * b);
    }
    r.rms_mismatch = std::sqrt(mismatch / static_cast<double>(n_samples));
    r.rms_mode = std::sqrt(mode / static_cast<double>(n_samples));
    return r;
}

CirclesReport circles_test(const ModeCoefficients& mode, const Isometry& g, double rho, std::size_t n_samples) {
    return circles_test([&](const HPoint& p) { return evaluate_mode(mode, p); }, g, rho, n_samples);
}

BoundsReport eigenvalue_bounds(double D) {
    if (!(D > 0.0)) {
        throw std::invalid_argument("eigenvalue_bounds: diameter must be positive");
    }
    BoundsReport r;
    r.D = D;
    r.D_tilde = std::sqrt(std::ceil(D * D));
    const double s = std::sinh(r.D_tilde) + r.D_tilde;
    r.lower = 4.0 * r.D_tilde / (D * D * s * s);
    const double w = 2.0 * std::numbers::pi / D;
    r.upper = 1.0 + w * w;
    return r;
}

double wavelength_ratio(double k, double D) {
    if (!(k > 0.0) || !(D > 0.0)) {
        throw std::invalid_argument("wavelength_ratio: k and D must be positive");
    }
    return 2.0 * std::numbers::pi / (k * D);
}

}  // namespace hyperdrum
