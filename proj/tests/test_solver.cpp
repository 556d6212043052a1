#include "doctest.h"

#include "fixtures.hpp"
#include "hyperdrum/errors.hpp"
#include "hyperdrum/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace hyperdrum;
using hyperdrum::testing::load_fixture;

namespace {

ScanPoint synthetic_point(double k, double chi2) {
    ScanPoint p;
    p.k = k;
    p.sigma = {std::sqrt(chi2)};
    p.params = SolveParams{11, 5, 0.5, 2.0, 20};
    return p;
}

// chi2 = min over dips of eps + ((k - c) / w)^2, capped at 1.
ScanResult synthetic_scan(std::size_t n, double dk, const std::vector<double>& centres, double w) {
    ScanResult s;
    for (std::size_t i = 0; i < n; ++i) {
        const double k = 1.0 + dk * static_cast<double>(i);
        double y = 1.0;
        for (double c : centres) {
            const double t = (k - c) / w;
            y = std::min(y, 0.01 + t * t);
        }
        s.points.push_back(synthetic_point(k, y));
    }
    return s;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd B(rows, cols);
    for (Eigen::Index i = 0; i < B.size(); ++i) {
        B.data()[i] = gauss(rng);
    }
    return B;
}

ScanConfig narrow_config(double lo, double hi) {
    ScanConfig cfg;
    cfg.k_lo = lo;
    cfg.k_hi = hi;
    return cfg;
}

// Scan, detect and refine; returns refined modes in k order.
std::vector<Eigenmode> solve_window(const std::string& stem, const ScanConfig& cfg) {
    Problem problem(load_fixture(stem).generators, cfg);
    const ScanResult res = scan(problem);
    std::vector<Eigenmode> modes;
    for (const auto& r : refine_all(problem, detect_minima(res))) {
        modes.insert(modes.end(), r.modes.begin(), r.modes.end());
    }
    return modes;
}

}  // namespace

TEST_CASE("heuristic parameters") {
    const ScanConfig cfg;
    const SolveParams p10 = base_params(10.0, cfg);
    CHECK(p10.L == 20);
    CHECK(p10.ell_min == 5);
    CHECK(p10.c == 20);
    const SolveParams p1 = base_params(1.0, cfg);
    CHECK(p1.L == 11);
    CHECK(p1.ell_min == 5);
    CHECK(p1.c == 110);
    CHECK(p1.N() == 144);
    CHECK(p1.rho_min < p1.rho_max);
    CHECK(envelope_radius(11, 1.0, 0.25) > envelope_radius(11, 5.0, 0.25));
}

TEST_CASE("config validation names the field") {
    ScanConfig cfg;
    cfg.k_lo = 0.1;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("k_lo"), std::invalid_argument);
    cfg = ScanConfig{};
    cfg.dk = 0.0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("dk"), std::invalid_argument);
    cfg = ScanConfig{};
    cfg.k_hi = 0.5;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("empty k range"), std::invalid_argument);
    CHECK(ScanConfig{}.grid_size() == 901);
}

TEST_CASE("one point with two images gives three rows") {
    const HPoint x = from_spherical(0.3, 1.0, 2.0);
    const HPoint y = from_spherical(1.2, 0.4, 5.0);
    const HPoint z = from_spherical(1.7, 2.5, 0.5);
    const double k = 3.3;
    const SystemMatrix sys = assemble_system({{x, y, z}}, k, 11, 1000, 1);
    REQUIRE(sys.A.rows() == 3);
    CHECK(sys.A.cols() == 144);
    CHECK(sys.full_pairs == 3);
    CHECK(sys.points_used == 1);

    const std::vector<HPoint> pts{x, y, z};
    for (Eigen::Index r = 0; r < 3; ++r) {
        const auto& src = sys.rows[static_cast<std::size_t>(r)];
        CHECK(src.a < src.b);
        const Eigen::VectorXd want = evaluate_Q(k, 11, pts[src.a]) - evaluate_Q(k, 11, pts[src.b]);
        CHECK((sys.A.row(r).transpose() - want).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("pair subsampling is deterministic and without repeats") {
    std::vector<std::vector<HPoint>> copies(3);
    for (std::size_t j = 0; j < copies.size(); ++j) {
        for (int i = 0; i < 12; ++i) {
            copies[j].push_back(from_spherical(0.2 + 0.1 * i, 0.3 * (i + 1), 0.5 * static_cast<double>(j + 1)));
        }
    }
    const SystemMatrix a = assemble_system(copies, 2.0, 4, 50, 7);
    const SystemMatrix b = assemble_system(copies, 2.0, 4, 50, 7);
    const SystemMatrix c = assemble_system(copies, 2.0, 4, 50, 8);
    CHECK(a.A.rows() == 50);
    CHECK(a.full_pairs == 3 * 66);
    CHECK(a.A == b.A);
    CHECK(a.A != c.A);
    std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;
    for (const auto& r : a.rows) {
        seen.insert({r.point, r.a, r.b});
    }
    CHECK(seen.size() == 50);
}

TEST_CASE("points without images contribute nothing; all empty is an error") {
    const HPoint x = from_spherical(0.3, 1.0, 2.0);
    const HPoint y = from_spherical(1.2, 0.4, 5.0);
    const SystemMatrix sys = assemble_system({{x}, {x, y}}, 2.0, 3, 100, 1);
    CHECK(sys.A.rows() == 1);
    CHECK(sys.rows[0].point == 1);
    CHECK_THROWS_AS(assemble_system({{x}, {y}}, 2.0, 3, 100, 1), NumericalError);
}

TEST_CASE("svd of the identity") {
    const SingularPairs sp = svd_smallest(Eigen::MatrixXd::Identity(9, 9), 3);
    for (double s : sp.sigma) {
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK((sp.vectors.transpose() * sp.vectors - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    CHECK_THROWS_AS(svd_smallest(Eigen::MatrixXd::Identity(3, 4), 1), std::invalid_argument);
}

TEST_CASE("synthetic nullspace recovery") {
    const Eigen::Index N = 36;
    const Eigen::MatrixXd B = random_matrix(200, N, 3);

    SUBCASE("one dimension") {
        Eigen::VectorXd v = random_matrix(N, 1, 4).col(0).normalized();
        const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(N, N) - v * v.transpose();
        const SingularPairs sp = svd_smallest(B * P, 3);
        CHECK(sp.sigma[0] < 1e-10);
        CHECK(sp.sigma[1] > 1e-3);
        const double dot = sp.vectors.col(0).dot(v);
        CHECK((sp.vectors.col(0) - (dot > 0 ? 1.0 : -1.0) * v).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("two dimensions") {
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(N, 2, 5));
        const Eigen::MatrixXd V = qr.householderQ() * Eigen::MatrixXd::Identity(N, 2);
        const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(N, N) - V * V.transpose();
        const SingularPairs sp = svd_smallest(B * P, 3);
        CHECK(sp.sigma[0] < 1e-10);
        CHECK(sp.sigma[1] < 1e-10);
        CHECK(sp.sigma[2] > 1e-3);
        // Projection onto the recovered span reproduces V.
        const Eigen::MatrixXd W = sp.vectors.leftCols(2);
        CHECK((W * (W.transpose() * V) - V).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("detect_minima on synthetic curves") {
    SUBCASE("monotone curve") {
        ScanResult s;
        for (int i = 0; i < 50; ++i) {
            s.points.push_back(synthetic_point(1.0 + 0.01 * i, 2.0 - 0.01 * i));
        }
        CHECK(detect_minima(s).empty());
    }
    SUBCASE("two well separated dips") {
        const ScanResult s = synthetic_scan(60, 0.01, {1.2, 1.3}, 0.02);
        const auto c = detect_minima(s);
        REQUIRE(c.size() == 2);
        CHECK(c[0].k == doctest::Approx(1.2).epsilon(1e-12));
        CHECK(c[1].k == doctest::Approx(1.3).epsilon(1e-12));
        CHECK(c[0].index == 20);
        CHECK_FALSE(c[0].blended);
        CHECK_FALSE(c[1].blended);
        CHECK(c[0].k_lo < 1.2);
        CHECK(c[0].k_hi > 1.2);
    }
    SUBCASE("dips 1.5 steps apart are a blended pair") {
        const ScanResult s = synthetic_scan(60, 0.01, {1.202, 1.217}, 0.005);
        const auto c = detect_minima(s);
        REQUIRE(c.size() == 2);
        CHECK(c[0].blended);
        CHECK(c[1].blended);
        CHECK(c[0].partner == std::optional<std::size_t>(1));
        CHECK(c[1].partner == std::optional<std::size_t>(0));
    }
    SUBCASE("shallow wiggles are ignored") {
        ScanResult s;
        for (int i = 0; i < 80; ++i) {
            const double k = 1.0 + 0.01 * i;
            s.points.push_back(synthetic_point(k, 1.0 + 0.05 * std::sin(40.0 * k)));
        }
        CHECK(detect_minima(s).empty());
    }
}

TEST_CASE("two-quadratic model recovers both vertices") {
    std::vector<double> k;
    std::vector<double> y;
    for (int i = 0; i <= 20; ++i) {
        const double x = 5.0 + 0.005 * i;
        k.push_back(x);
        y.push_back(std::min(0.1 + 300.0 * (x - 5.031) * (x - 5.031), 0.2 + 250.0 * (x - 5.072) * (x - 5.072)));
    }
    const auto v = fit_two_quadratics(k, y);
    REQUIRE(v);
    CHECK(v->first == doctest::Approx(5.031).epsilon(1e-9));
    CHECK(v->second == doctest::Approx(5.072).epsilon(1e-9));

    std::vector<double> one;
    for (double x : k) {
        one.push_back(1.0 + (x - 5.05) * (x - 5.05));
    }
    const auto s = fit_two_quadratics(k, one);
    if (s) {
        // a single parabola splits into two pieces of the same curve
        CHECK(s->first == doctest::Approx(5.05).epsilon(1e-9));
        CHECK(s->second == doctest::Approx(5.05).epsilon(1e-9));
    }
}

TEST_CASE("multiplicity counting") {
    const ScanConfig cfg;
    const std::vector<double> flat{1.0, 1.1, 1.2, 1.3};
    CHECK(count_multiplicity({0.3, 1.1, 1.2, 1.3}, flat, flat, cfg) == 1);
    // second value dips with the first
    CHECK(count_multiplicity({0.3, 0.5, 1.2, 1.3}, flat, flat, cfg) == 2);
    // a large gap counts even without the side samples
    CHECK(count_multiplicity({0.01, 0.02, 0.03, 1.3}, {0.01, 0.02, 0.03, 1.3}, {0.01, 0.02, 0.03, 1.3}, cfg) == 3);
    // counting stops at the first value that does not dip
    CHECK(count_multiplicity({0.3, 1.1, 0.2, 1.3}, flat, flat, cfg) == 1);
    CHECK_THROWS_AS(count_multiplicity({0.3}, flat, flat, cfg), std::invalid_argument);
}

TEST_CASE("scan is deterministic and thread independent") {
    ScanConfig cfg = narrow_config(5.15, 5.19);
    cfg.threads = 1;
    const auto gens = load_fixture("m003_m3_1").generators;
    Problem a(gens, cfg);
    Problem b(gens, cfg);
    cfg.threads = 3;
    Problem c(gens, cfg);
    const auto ra = scan(a);
    const auto rb = scan(b);
    const auto rc = scan(c);
    REQUIRE(ra.points.size() == 5);
    for (std::size_t i = 0; i < ra.points.size(); ++i) {
        CHECK(ra.points[i].sigma == rb.points[i].sigma);
        CHECK(ra.points[i].sigma == rc.points[i].sigma);
        CHECK(std::is_sorted(ra.points[i].sigma.begin(), ra.points[i].sigma.end()));
        CHECK(ra.points[i].sigma.front() >= 0.0);
        CHECK(ra.points[i].params == a.segment_params(5.15));
        // oversampling hits the configured target
        CHECK(ra.points[i].rows == ra.points[i].params.target_rows());
    }
}

TEST_CASE("image-count rule") {
    ScanConfig cfg = narrow_config(1.0, 1.0);
    cfg.min_images = 10;
    Problem problem(load_fixture("m003_m3_1").generators, cfg);
    const SolveParams p = problem.params(1.0);
    CHECK(p.L >= 11);
    for (std::size_t j = 0; j < cfg.points; ++j) {
        CHECK(problem.copies(j, SolveParams{p.L, p.ell_min, 0.0, p.rho_max, p.c}).size() >= 11);
    }
}

TEST_CASE("m188 lowest two modes") {
    const auto modes = solve_window("m188_m1_1", narrow_config(4.2, 4.9));
    REQUIRE(modes.size() == 2);
    CHECK(modes[0].k == doctest::Approx(std::sqrt(19.4)).epsilon(0.01));
    CHECK(modes[1].k == doctest::Approx(std::sqrt(21.6)).epsilon(0.01));
    for (const auto& m : modes) {
        CHECK(m.multiplicity == 1);
        CHECK(m.q2() == m.k * m.k + 1.0);
    }
}

TEST_CASE("Weeks first mode and seed robustness") {
    const auto one = solve_window("m003_m3_1", narrow_config(5.0, 5.4));
    ScanConfig other = narrow_config(5.0, 5.4);
    other.seed = 2;
    const auto two = solve_window("m003_m3_1", other);
    REQUIRE(one.size() == 1);
    REQUIRE(two.size() == 1);
    CHECK(one[0].k == doctest::Approx(5.18).epsilon(0.01));
    CHECK(one[0].multiplicity == 1);
    CHECK(std::abs(one[0].k - two[0].k) / one[0].k < 0.005);
}

TEST_CASE("Weeks doublet has orthonormal vectors") {
    const auto modes = solve_window("m003_m3_1", narrow_config(5.55, 5.75));
    REQUIRE(modes.size() == 1);
    const auto& m = modes[0];
    CHECK(m.q2() == doctest::Approx(32.9).epsilon(0.01));
    REQUIRE(m.multiplicity == 2);
    const Eigen::MatrixXd gram = m.coefficients.transpose() * m.coefficients;
    CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(m.mode(1).a.size() == coefficient_count(m.L));
    CHECK_THROWS_AS(m.mode(2), std::out_of_range);
}

TEST_CASE("a minimum just inside a segment start gets a full bracket") {
    // s654(-3,1) has its lowest mode near k = 2.18, close to the start of the
    // [2, 3) segment. At the 0.25 envelope the curve still rises at k = 2.
    ScanConfig cfg = narrow_config(2.0, 2.3);
    cfg.low_k_envelope = cfg.envelope;
    Problem problem(load_fixture("s654_m3_1").generators, cfg);
    const ScanResult res = scan(problem);
    const bool extended_below = std::any_of(res.overlap.begin(), res.overlap.end(), [&](const ScanPoint& p) {
        return p.k < 2.0 - kSegmentOverlap * 0.01 && p.params == res.points.front().params;
    });
    CHECK(extended_below);
    const auto cands = detect_minima(res);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].k > 2.1);
    CHECK(cands[0].k < 2.25);
    for (const auto& p : res.overlap) {
        CHECK(p.k >= kMinScanK);
    }
}

TEST_CASE("minima are reported only inside the scanned window") {
    // The Weeks dip at 5.17 lies on the right-hand overlap of this window.
    Problem problem(load_fixture("m003_m3_1").generators, narrow_config(5.0, 5.14));
    const ScanResult res = scan(problem);
    CHECK(std::any_of(res.overlap.begin(), res.overlap.end(), [](const ScanPoint& p) { return p.k > 5.175; }));
    CHECK(detect_minima(res).empty());
}
