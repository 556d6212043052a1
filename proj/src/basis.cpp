#include "hyperdrum/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hyperdrum {

namespace {

constexpr double kRescaleAbove = 1e200;

// Upward recursion is kept while it amplifies the rounding error of the
// decaying solution by less than exp(kMaxUpwardGrowth).
constexpr double kMaxUpwardGrowth = 4.0;
// Miller start: contamination suppressed by exp(-2 * kMillerDepth).
constexpr double kMillerDepth = 30.0;
constexpr int kMillerMaxExtra = 4000;

double beta(int l, double k) { return std::sqrt(static_cast<double>(l) * l + k * k); }

// Ratio X^{l+1}/X^l of the minimal solution of the l-recursion from the local
// characteristic equation beta_{l+1} r^2 - (2l+1) coth r + beta_l = 0.
// Returns 1 where the recursion is oscillatory.
double minimal_ratio(int l, double k, double coth) {
    const double b = (2.0 * l + 1.0) * coth;
    const double disc = b * b - 4.0 * beta(l, k) * beta(l + 1, k);
    if (disc <= 0.0) {
        return 1.0;
    }
    return (b - std::sqrt(disc)) / (2.0 * beta(l + 1, k));
}

}  // namespace

void hyper_bessel_table(int L, double k, double rho, std::span<double> out) {
    if (L < 0 || static_cast<int>(out.size()) < L + 1) {
        throw std::invalid_argument("hyper_bessel_table: output span too small");
    }
    if (rho == 0.0) {
        std::fill(out.begin(), out.begin() + L + 1, 0.0);
        out[0] = k;
        return;
    }
    const double sh = std::sinh(rho);
    const double coth = std::cosh(rho) / sh;
    const double skr = std::sin(k * rho);
    const double ckr = std::cos(k * rho);
    out[0] = skr / sh;
    if (L == 0) {
        return;
    }
    out[1] = (coth * skr - k * ckr) / (sh * std::sqrt(1.0 + k * k));
    // X^{l+1} beta_{l+1} = (2l+1) coth X^l - beta_l X^{l-1}
    for (int l = 1; l < L; ++l) {
        out[l + 1] = ((2 * l + 1) * coth * out[l] - beta(l, k) * out[l - 1]) / beta(l + 1, k);
    }

    // Past the turning point the regular solution decays in l and upward
    // recursion amplifies rounding error. Replace that tail by Miller's
    // downward recursion when the amplification matters.
    const int turn = std::min(L, static_cast<int>(k * sh));
    double growth = 0.0;
    for (int l = turn; l < L; ++l) {
        growth -= 2.0 * std::log(minimal_ratio(l, k, coth));
    }
    if (growth < kMaxUpwardGrowth) {
        return;
    }
    int top = L;
    for (double depth = 0.0; depth < kMillerDepth && top < L + kMillerMaxExtra; ++top) {
        depth -= std::log(minimal_ratio(top, k, coth));
    }
    const int match_lo = std::max(0, turn - 2);
    std::vector<double> down(L + 1 - match_lo, 0.0);
    double above = 0.0;  // level l+1
    double cur = 1.0;    // level l
    for (int l = top; l > match_lo; --l) {
        const double below = ((2 * l + 1) * coth * cur - beta(l + 1, k) * above) / beta(l, k);
        above = cur;
        cur = below;
        if (l <= L) {
            down[l - match_lo] = above;
        }
        if (l - 1 <= L) {
            down[l - 1 - match_lo] = cur;
        }
        if (std::abs(cur) > kRescaleAbove) {
            const double f = 1.0 / std::abs(cur);
            cur *= f;
            above *= f;
            for (double& d : down) {
                d *= f;
            }
        }
    }
    // Least-squares scale against the upward values at the turning point,
    // which are still accurate there.
    double num = 0.0;
    double den = 0.0;
    for (int l = match_lo; l <= turn; ++l) {
        num += out[l] * down[l - match_lo];
        den += down[l - match_lo] * down[l - match_lo];
    }
    const double scale = num / den;
    for (int l = turn + 1; l <= L; ++l) {
        out[l] = scale * down[l - match_lo];
    }
}

std::vector<double> hyper_bessel_table(int L, double k, double rho) {
    std::vector<double> out(L + 1);
    hyper_bessel_table(L, k, rho, out);
    return out;
}

double hyper_bessel(int l, double k, double rho) {
    if (l < 0 || l > kMaxMultipole) {
        throw std::invalid_argument("hyper_bessel: l out of range [0, " +
                                    std::to_string(kMaxMultipole) + "]");
    }
    if (!(k > 0.0) || !(rho >= 0.0) || !std::isfinite(k * rho)) {
        throw std::invalid_argument("hyper_bessel: need k > 0 and finite rho >= 0");
    }
    return hyper_bessel_table(l, k, rho)[l];
}

double envelope_radius(int l, double k, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("envelope_radius: threshold must lie in (0,1)");
    }
    if (l < 0 || l > kMaxMultipole || !(k > 0.0)) {
        throw std::invalid_argument("envelope_radius: bad l or k");
    }
    constexpr double kLimit = 50.0;
    auto f = [&](double rho) { return hyper_bessel(l, k, rho) * std::sinh(rho) - threshold; };
    const double step = std::min(0.01, std::numbers::pi / (40.0 * k));
    double lo = 0.0;
    while (lo < kLimit) {
        double hi = lo + step;
        if (f(hi) >= 0.0) {
            while (hi - lo > 1e-13 * std::max(1.0, hi)) {
                const double mid = 0.5 * (lo + hi);
                (f(mid) >= 0.0 ? hi : lo) = mid;
            }
            return 0.5 * (lo + hi);
        }
        lo = hi;
    }
    throw NumericalError("envelope_radius: no crossing below rho = 50");
}

void real_harmonics(int L, double theta, double phi, std::span<double> out) {
    const int n = coefficient_count(L);
    if (L < 0 || static_cast<int>(out.size()) < n) {
        throw std::invalid_argument("real_harmonics: output span too small");
    }
    const double x = std::cos(theta);
    const double s = std::sin(theta);
    const double sqrt2 = std::numbers::sqrt2;
    // Normalized associated Legendre functions sqrt((2l+1)/4pi (l-m)!/(l+m)!) P_l^m,
    // without the Condon-Shortley phase.
    double pmm = 0.5 / std::sqrt(std::numbers::pi);
    for (int m = 0; m <= L; ++m) {
        if (m > 0) {
            pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
        }
        const double cm = std::cos(m * phi);
        const double sm = std::sin(m * phi);
        auto store = [&](int l, double p) {
            if (m == 0) {
                out[harmonic_index(l, 0)] = p;
            } else {
                out[harmonic_index(l, m)] = sqrt2 * p * cm;
                out[harmonic_index(l, -m)] = sqrt2 * p * sm;
            }
        };
        store(m, pmm);
        if (m == L) {
            break;
        }
        double p_lm2 = pmm;
        double p_lm1 = std::sqrt(2.0 * m + 3.0) * x * pmm;
        store(m + 1, p_lm1);
        double a_prev = std::sqrt(2.0 * m + 3.0);
        for (int l = m + 2; l <= L; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
            const double p = a * (x * p_lm1 - p_lm2 / a_prev);
            store(l, p);
            p_lm2 = p_lm1;
            p_lm1 = p;
            a_prev = a;
        }
    }
}

std::vector<double> real_harmonics(int L, double theta, double phi) {
    std::vector<double> out(coefficient_count(L));
    real_harmonics(L, theta, phi, out);
    return out;
}

BasisPoint::BasisPoint(double k, int L, const HPoint& p)
    : coords(to_spherical(p)), radial(L + 1), harmonics(coefficient_count(L)) {
    hyper_bessel_table(L, k, coords.rho, radial);
    real_harmonics(L, coords.theta, coords.phi, harmonics);
}

void evaluate_Q(double k, int L, const HPoint& p, std::span<double> out) {
    const int n = coefficient_count(L);
    if (static_cast<int>(out.size()) < n) {
        throw std::invalid_argument("evaluate_Q: output span too small");
    }
    const Spherical sc = to_spherical(p);
    if (sc.rho == 0.0) {
        std::fill(out.begin(), out.begin() + n, 0.0);
        out[0] = k * 0.5 / std::sqrt(std::numbers::pi);
        return;
    }
    thread_local std::vector<double> radial;
    radial.resize(L + 1);
    hyper_bessel_table(L, k, sc.rho, radial);
    real_harmonics(L, sc.theta, sc.phi, out);
    for (int l = 0; l <= L; ++l) {
        for (int m = -l; m <= l; ++m) {
            out[harmonic_index(l, m)] *= radial[l];
        }
    }
}

Eigen::VectorXd evaluate_Q(double k, int L, const HPoint& p) {
    Eigen::VectorXd out(coefficient_count(L));
    evaluate_Q(k, L, p, std::span<double>(out.data(), out.size()));
    return out;
}

double evaluate_mode(const ModeCoefficients& c, const HPoint& p) {
    if (c.a.size() != coefficient_count(c.L)) {
        throw std::invalid_argument("evaluate_mode: coefficient vector length != (L+1)^2");
    }
    return evaluate_Q(c.k, c.L, p).dot(c.a);
}

}  // namespace hyperdrum
