#include "doctest.h"

#include "hyperdrum/io.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace hyperdrum;

namespace {

ScanPoint make_point(double k, int L) {
    ScanPoint p;
    p.k = k;
    p.sigma = {0.1 * k, 0.2 + 1.0 / 3.0, std::sqrt(2.0), 1e-300, 7.0};
    p.params.L = L;
    p.params.rho_min = 1.0 / 7.0;
    p.params.rho_max = std::acos(-1.0) / 3.0;
    p.rows = 4096;
    return p;
}

Eigenmode make_mode() {
    Eigenmode m;
    m.k = 5.6487812345678901;
    m.multiplicity = 2;
    m.L = 3;
    m.chi2 = 1.2345e-3;
    m.sigma = {0.035, 0.041, 0.2};
    m.manifold = "m003(-3,1)";
    m.config_hash = 0xfedcba9876543210ULL;
    m.coefficients.resize(16, 2);
    for (Eigen::Index i = 0; i < m.coefficients.size(); ++i) {
        m.coefficients.data()[i] = std::sin(1.0 + static_cast<double>(i)) / 3.0;
    }
    return m;
}

}  // namespace

TEST_CASE("reals round-trip through 17 digits") {
    for (double x : {0.1, 1.0 / 3.0, 5.18, 1e-300, -2.5e17, std::nextafter(1.0, 2.0)}) {
        CHECK(std::stod(format_real(x)) == x);
    }
}

TEST_CASE("config text round-trips every field") {
    ScanConfig cfg;
    cfg.k_lo = 4.0;
    cfg.k_hi = 7.5;
    cfg.dk = 0.005;
    cfg.points = 24;
    cfg.envelope = 0.2;
    cfg.seed = 123456789012345ULL;
    cfg.polish_L = -1;
    cfg.threads = 3;
    const ScanConfig back = config_from_string(config_to_string(cfg));
    CHECK(config_to_string(back) == config_to_string(cfg));
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK_THROWS_WITH_AS(config_from_string("k_lo=1 bogus=2"), "unknown config key 'bogus'", std::runtime_error);
    CHECK_THROWS_AS(config_from_string("k_lo=abc"), std::runtime_error);
    CHECK_THROWS_AS(config_from_string("k_lo"), std::runtime_error);
}

TEST_CASE("scan CSV round-trip") {
    ScanConfig cfg;
    cfg.k_lo = 5.0;
    cfg.k_hi = 5.02;
    const std::vector<ScanPoint> pts = {make_point(5.0, 15), make_point(5.01, 15), make_point(5.02, 16)};
    std::stringstream ss;
    write_scan_csv(ss, "m003(-3,1)", cfg, pts);
    const std::string text = ss.str();
    CHECK(text.rfind("# hyperdrum-scan 1\n", 0) == 0);
    CHECK(text.find("\nk,chi2_1,chi2_2,chi2_3,chi2_4,chi2_5,L,M,N,rho_min,rho_max\n") != std::string::npos);

    std::istringstream in(text);
    const ScanFile f = read_scan_csv(in);
    CHECK(f.manifold == "m003(-3,1)");
    CHECK(config_to_string(f.config) == config_to_string(cfg));
    REQUIRE(f.points.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(f.points[i].k == pts[i].k);
        CHECK(f.points[i].params.L == pts[i].params.L);
        CHECK(f.points[i].params.rho_min == pts[i].params.rho_min);
        CHECK(f.points[i].params.rho_max == pts[i].params.rho_max);
        CHECK(f.points[i].rows == pts[i].rows);
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(f.points[i].chi2(j) == pts[i].chi2(j));
        }
    }
    std::stringstream again;
    write_scan_csv(again, f.manifold, f.config, f.points);
    CHECK(again.str() == text);
    CHECK(overlap_path("out/scan.csv") == std::filesystem::path("out/scan.overlap.csv"));
}

TEST_CASE("scan CSV parser rejects bad input") {
    ScanConfig cfg;
    std::stringstream ss;
    write_scan_csv(ss, "x", cfg, {make_point(5.0, 15)});
    const std::string good = ss.str();
    auto reject = [](const std::string& text) {
        std::istringstream in(text);
        CHECK_THROWS_AS(read_scan_csv(in), std::runtime_error);
    };
    std::string bad_version = good;
    bad_version.replace(0, 18, "# hyperdrum-scan 2");
    reject(bad_version);
    reject("k,chi2_1\n1,2\n");
    reject(good.substr(0, good.rfind(',')) + "\n");  // short row
    std::string bad_n = good;
    bad_n.replace(bad_n.find(",15,") + 4, 0, "1");  // M column becomes a different number, still valid
    std::istringstream ok(bad_n);
    CHECK_NOTHROW(read_scan_csv(ok));
    std::string wrong_n = good;
    const auto pos = wrong_n.find(",256,");
    REQUIRE(pos != std::string::npos);
    wrong_n.replace(pos, 5, ",255,");
    reject(wrong_n);
}

TEST_CASE("eigenmode record round-trip") {
    const Eigenmode m = make_mode();
    std::stringstream ss;
    write_eigenmode(ss, m);
    const std::string text = ss.str();
    CHECK(text.rfind("hyperdrum-eigenmode 1\n", 0) == 0);
    CHECK(text.find("\n3 -2 ") != std::string::npos);

    std::istringstream in(text);
    const Eigenmode back = read_eigenmode(in);
    CHECK(back.k == m.k);
    CHECK(back.q2() == m.q2());
    CHECK(back.multiplicity == m.multiplicity);
    CHECK(back.L == m.L);
    CHECK(back.chi2 == m.chi2);
    CHECK(back.sigma == m.sigma);
    CHECK(back.manifold == m.manifold);
    CHECK(back.config_hash == m.config_hash);
    CHECK(back.coefficients == m.coefficients);
}

TEST_CASE("eigenmode parser rejects inconsistent records") {
    std::stringstream ss;
    write_eigenmode(ss, make_mode());
    const std::string good = ss.str();
    auto reject = [](const std::string& text) {
        std::istringstream in(text);
        CHECK_THROWS_AS(read_eigenmode(in), std::runtime_error);
    };
    reject("");
    reject("hyperdrum-eigenmode 9\n" + good.substr(good.find('\n') + 1));
    std::string q2 = good;
    const auto p = q2.find("\nq2 ");
    q2.replace(p, q2.find('\n', p + 1) - p, "\nq2 33.5");
    reject(q2);
    std::string mult = good;
    mult.replace(mult.find("multiplicity 2"), 14, "multiplicity 3");
    reject(mult);
    reject(good + "colour blue\n");
}

TEST_CASE("summary table and report layout") {
    std::vector<Eigenmode> modes;
    for (int i = 0; i < 7; ++i) {
        Eigenmode m = make_mode();
        m.k = 5.0 + i;
        m.multiplicity = 1 + i % 2;
        modes.push_back(m);
    }
    std::stringstream ss;
    write_summary_table(ss, "m003(-3,1)", modes);
    const std::string t = ss.str();
    CHECK(t.rfind("hyperdrum-summary 1\n", 0) == 0);
    CHECK(t.find("26.0") != std::string::npos);
    CHECK(t.find("mode 6 ") != std::string::npos);

    Report r;
    r.check = "bounds";
    r.add("lower", 1.0 / 3.0);
    r.pass = true;
    std::stringstream rs;
    write_report(rs, r);
    CHECK(rs.str() == "hyperdrum-report 1\ncheck bounds\nlower 0.33333333333333331\npass true\n");
}
