#include "doctest.h"

#include "fixtures.hpp"
#include "hyperdrum/errors.hpp"
#include "hyperdrum/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace hyperdrum;
using hyperdrum::testing::data_path;
using hyperdrum::testing::load_fixture;

namespace {

// Simpson integration of the chi-square(1) density on [0, x] after x = u^2.
double chi2_1_cdf(double x) {
    const int n = 2000;
    const double U = std::sqrt(x);
    const double h = U / n;
    auto f = [](double u) { return 2.0 * std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); };
    double s = f(0.0) + f(U);
    for (int i = 1; i < n; ++i) {
        s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    }
    return s * h / 3.0;
}

ModeCoefficients random_mode(int L, double k, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    ModeCoefficients m{k, L, Eigen::VectorXd(coefficient_count(L))};
    for (Eigen::Index i = 0; i < m.a.size(); ++i) {
        m.a[i] = gauss(rng);
    }
    m.a.normalize();
    return m;
}

// Periodic function built as a sum over images of a Gaussian bump; exact
// periodicity is approached as the image radius grows.
struct ImageSum {
    std::vector<HPoint> centres;
    double width = 0.35;

    ImageSum(const std::vector<GroupElement>& elements, const HPoint& x0, double radius) {
        for (const auto& e : elements) {
            const HPoint y = apply(e.g, x0);
            if (y.radius() <= radius) {
                centres.push_back(y);
            }
        }
    }
    double operator()(const HPoint& p) const {
        double s = 0.0;
        for (const auto& c : centres) {
            const double d = distance(p, c);
            s += std::exp(-0.5 * d * d / (width * width));
        }
        return s;
    }
};

}  // namespace

TEST_CASE("GOE cumulative law") {
    CHECK(goe_cumulative(0.0) == 0.0);
    CHECK(goe_cumulative(-1.0) == 0.0);
    CHECK(goe_cumulative(1e4) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(goe_cumulative(1.0) == doctest::Approx(0.68269).epsilon(1e-5));
    for (double x : {0.01, 0.3, 1.0, 2.5, 7.0}) {
        CHECK(goe_cumulative(x) == doctest::Approx(chi2_1_cdf(x)).epsilon(1e-10));
    }
}

TEST_CASE("GOE test calibration on normal samples") {
    const double critical = 1.358 / std::sqrt(676.0);
    int below = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 rng(1000 + t);
        std::normal_distribution<double> gauss(0.3, 2.0);
        Eigen::VectorXd a(676);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            a[i] = gauss(rng);
        }
        const GoeReport r = goe_test(a);
        CHECK(r.x.size() == 676);
        CHECK(std::is_sorted(r.x.begin(), r.x.end()));
        CHECK(r.x.front() >= 0.0);
        CHECK(r.cdf.back() == 1.0);
        below += r.ks < critical ? 1 : 0;
    }
    CHECK(below >= 0.9 * trials);

    // uniform values are far from the chi-square law
    Eigen::VectorXd u(676);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        u[i] = static_cast<double>(i) / 675.0;
    }
    CHECK(goe_test(u).ks > 0.1);
    CHECK_THROWS_AS(goe_test(Eigen::VectorXd::Constant(10, 2.0)), std::invalid_argument);
}

TEST_CASE("Weyl fit") {
    SUBCASE("exact cubic staircase") {
        const double a = 0.02;
        const double b = -1.5;
        std::vector<double> k;
        std::vector<std::size_t> m;
        for (int i = 1; i <= 60; ++i) {
            k.push_back(std::cbrt((i - b) / a));
            m.push_back(1);
        }
        const Staircase s = weyl_staircase(k, m);
        CHECK(s.a == doctest::Approx(a).epsilon(1e-9));
        CHECK(s.b == doctest::Approx(b).epsilon(1e-9));
        CHECK(s.fit_lo == doctest::Approx(0.5 * k.back()));
    }
    SUBCASE("doubling multiplicities doubles a") {
        const Spectrum sp = parse_spectrum(data_path("spectra/m003_m3_1.spec"));
        auto m2 = sp.multiplicity;
        for (auto& x : m2) {
            x *= 2;
        }
        const Staircase one = weyl_staircase(sp.k(), sp.multiplicity);
        const Staircase two = weyl_staircase(sp.k(), m2);
        CHECK(two.a == doctest::Approx(2.0 * one.a).epsilon(1e-12));
    }
    SUBCASE("staircase shape") {
        const Staircase s = weyl_staircase({3.0, 1.0, 2.0, 2.0, 4.0}, {2, 3, 1, 1, 4});
        CHECK(s.k == std::vector<double>{1.0, 2.0, 3.0, 4.0});
        CHECK(s.multiplicity == std::vector<std::size_t>{3, 2, 2, 4});
        CHECK(s.count == std::vector<std::size_t>{3, 5, 7, 11});
        CHECK(s.count_at(0.5) == 0);
        CHECK(s.count_at(2.0) == 5);
        CHECK(s.count_at(2.5) == 5);
        CHECK(s.count_at(9.0) == 11);
    }
    SUBCASE("refuses short lists") {
        CHECK_THROWS_AS(weyl_staircase({1.0, 2.0}, {4, 5}), std::invalid_argument);
    }
    CHECK(weyl_coefficient(0.9427) == doctest::Approx(0.015921).epsilon(1e-4));
}

TEST_CASE("Weeks eigenvalue list") {
    const Spectrum sp = parse_spectrum(data_path("spectra/m003_m3_1.spec"));
    CHECK(sp.q2.size() == 42);
    std::size_t total = 0;
    for (auto m : sp.multiplicity) {
        total += m;
    }
    CHECK(total == 74);
    REQUIRE(sp.volume);
    const Staircase s = weyl_staircase(sp.k(), sp.multiplicity);
    CHECK(std::abs(s.a / weyl_coefficient(*sp.volume) - 1.0) < 0.15);
}

TEST_CASE("spectrum file errors") {
    CHECK_THROWS_WITH(parse_spectrum_text("27.8 1\n"), doctest::Contains("header"));
    CHECK_THROWS_WITH(parse_spectrum_text("hyperdrum-spectrum 2\n"), doctest::Contains("unsupported"));
    CHECK_THROWS_WITH(parse_spectrum_text("hyperdrum-spectrum 1\n27.8\n"), doctest::Contains("multiplicity"));
    CHECK_THROWS_WITH(parse_spectrum_text("hyperdrum-spectrum 1\nfoo 1\n"), doctest::Contains("unknown key"));
    const Spectrum s = parse_spectrum_text("hyperdrum-spectrum 1\nname x y\n5 2\n");
    CHECK(s.name == "x y");
    CHECK(s.k() == std::vector<double>{2.0});
}

TEST_CASE("eigenvalue bounds") {
    const BoundsReport w = eigenvalue_bounds(0.843);
    CHECK(w.D_tilde == 1.0);
    const double s1 = std::sinh(1.0) + 1.0;
    CHECK(w.lower == doctest::Approx(4.0 / (0.843 * 0.843 * s1 * s1)));
    CHECK(w.lower == doctest::Approx(1.190).epsilon(1e-3));
    CHECK(w.upper == doctest::Approx(56.55).epsilon(1e-3));
    CHECK(w.lower < 27.8);
    CHECK(27.8 < w.upper);

    const BoundsReport s = eigenvalue_bounds(1.946);
    CHECK(s.D_tilde == doctest::Approx(2.0));
    CHECK(s.lower < 5.88);
    CHECK(5.88 < s.upper);

    double last = std::numeric_limits<double>::infinity();
    for (double D = 0.1; D <= 10.0; D += 0.01) {
        const BoundsReport r = eigenvalue_bounds(D);
        CHECK(r.lower < r.upper);
        CHECK(r.D_tilde >= D);
        CHECK(r.upper < last);
        last = r.upper;
    }
    CHECK_THROWS_AS(eigenvalue_bounds(0.0), std::invalid_argument);
}

TEST_CASE("wavelength ratio") {
    CHECK(wavelength_ratio(5.18, 0.843) == doctest::Approx(1.439).epsilon(1e-3));
    CHECK(wavelength_ratio(2.30, 1.701) == doctest::Approx(1.606).epsilon(1e-3));
}

TEST_CASE("circles test on an image-sum function") {
    const auto spec = load_fixture("m003_m3_1");
    const DomainSampler sampler(spec.generators);
    const auto elements = enumerate_group(spec.generators, 5.0, sampler.enumeration_options());
    const HPoint x0 = from_spherical(0.2, 1.1, 0.4);

    // generators whose face plane the unit sphere crosses
    std::vector<std::size_t> crossing;
    for (std::size_t i = 0; i < spec.generators.size(); ++i) {
        if (matched_circle(spec.generators[i], 1.0)) {
            crossing.push_back(i);
        }
    }
    REQUIRE(crossing.size() >= 2);

    const Isometry& g = spec.generators[crossing.front()];
    std::vector<double> ratios;
    for (double R : {1.5, 2.5, 3.5, 4.8}) {
        const ImageSum f(elements, x0, R);
        const CirclesReport r = circles_test(std::function<double(const HPoint&)>(f), g, 1.0, 256);
        CHECK(r.psi.size() == 256);
        CHECK(r.rms_mode > 0.0);
        ratios.push_back(r.ratio());
    }
    for (std::size_t i = 1; i < ratios.size(); ++i) {
        CHECK(ratios[i] < ratios[i - 1]);
    }
    CHECK(ratios.back() < 1e-6);

    // every sampled point and its image lie on the unit sphere
    const ImageSum exact(elements, x0, 4.8);
    const auto circle = matched_circle(g, 1.0);
    for (double t : {0.0, 1.0, 4.0}) {
        const HPoint x = circle_point(circle->partner_center, circle->alpha, 1.0, t);
        CHECK(x.radius() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(apply(g, x).radius() == doctest::Approx(1.0).epsilon(1e-10));
    }

    // a sphere inside the in-radius meets no face plane
    CHECK_THROWS_AS(circles_test(std::function<double(const HPoint&)>(exact), g, 0.1, 16), GeometryError);
}

TEST_CASE("Monte Carlo normalization and overlaps") {
    const auto spec = load_fixture("m003_m3_1");
    const DomainSampler sampler(spec.generators);
    const ModeCoefficients m = random_mode(6, 4.0, 11);

    const NormalizedMode n1 = normalize_mode(m, sampler, 20000, 5);
    CHECK(std::isfinite(n1.scale));
    CHECK(n1.rel_error < 0.05);

    SUBCASE("idempotent") {
        const NormalizedMode again = normalize_mode(n1.mode, sampler, 20000, 5);
        CHECK(again.scale == doctest::Approx(1.0).epsilon(1e-12));
        const NormalizedMode other = normalize_mode(n1.mode, sampler, 20000, 6);
        CHECK(std::abs(other.scale - 1.0) < 3.0 * other.rel_error);
    }
    SUBCASE("projective") {
        ModeCoefficients big = m;
        big.a *= 3.0;
        const NormalizedMode n3 = normalize_mode(big, sampler, 20000, 5);
        CHECK((n3.mode.a - n1.mode.a).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("self overlap") {
        const Overlap o = overlap(n1.mode, n1.mode, sampler, 20000, 5);
        CHECK(o.value == doctest::Approx(1.0).epsilon(1e-12));
        const Overlap p = overlap(n1.mode, n1.mode, sampler, 20000, 9);
        CHECK(std::abs(p.value - 1.0) < 3.0 * p.stderr_ + 0.02);
    }
    SUBCASE("gram matrix") {
        const Eigen::MatrixXd g = overlap_matrix({m, random_mode(6, 4.0, 12)}, sampler, 5000, 3);
        CHECK(g(0, 0) == doctest::Approx(1.0));
        CHECK(g(1, 1) == doctest::Approx(1.0));
        CHECK(g(0, 1) == doctest::Approx(g(1, 0)));
        CHECK(std::abs(g(0, 1)) < 1.0);
    }
    SUBCASE("warning for a small sample") {
        const NormalizedMode tiny = normalize_mode(m, sampler, 50, 5);
        CHECK(tiny.rel_error > 0.02);
        CHECK(tiny.warning.find("n_mc") != std::string::npos);
    }
    CHECK_THROWS_AS(normalize_mode(ModeCoefficients{4.0, 1, Eigen::VectorXd::Zero(4)}, sampler, 100, 1),
                    std::invalid_argument);
}
