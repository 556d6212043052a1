#include "hyperdrum/solver.hpp"

#include "hyperdrum/errors.hpp"
#include "hyperdrum/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hyperdrum {

namespace {

std::string fmt(double x) {
    std::ostringstream out;
    out.precision(10);
    out << x;
    return out.str();
}

std::uint64_t pair_key(std::uint64_t seed, std::size_t point, std::size_t a, std::size_t b) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ point);
    h = mix64(h ^ a);
    return mix64(h ^ (b << 1));
}

// Golden-section search on [a, b]; returns the best abscissa seen.
template <class F>
std::pair<double, double> golden_section(F&& f, double a, double b, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 < f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

// Least-squares parabola c0 + c1 t + c2 t^2 in t = k - center; returns the
// coefficients and the residual sum of squares.
std::pair<Eigen::Vector3d, double> fit_parabola(const std::vector<double>& k, const std::vector<double>& y,
                                                std::size_t lo, std::size_t hi, double center) {
    const auto n = static_cast<Eigen::Index>(hi - lo);
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = k[lo + static_cast<std::size_t>(i)] - center;
        X.row(i) << 1.0, t, t * t;
        v[i] = y[lo + static_cast<std::size_t>(i)];
    }
    const Eigen::Vector3d c = X.colPivHouseholderQr().solve(v);
    return {c, (X * c - v).squaredNorm()};
}

}  // namespace

void ScanConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("scan config: " + what); };
    if (!(k_lo >= kMinScanK)) {
        fail("k_lo must be at least 0.25 (got " + fmt(k_lo) + ")");
    }
    if (!(k_hi >= k_lo)) {
        fail("empty k range [" + fmt(k_lo) + ", " + fmt(k_hi) + "]");
    }
    if (!(dk > 0.0)) {
        fail("dk must be positive");
    }
    if (points == 0) {
        fail("points must be at least 1");
    }
    if (ell_min < 0 || L_offset < 1) {
        fail("ell_min must be >= 0 and L_offset >= 1");
    }
    if (c_offset < 1 || c_scale < 0.0) {
        fail("oversampling rule must give c >= 1");
    }
    if (!(envelope > 0.0 && envelope < 1.0) || !(low_k_envelope > 0.0 && low_k_envelope < 1.0)) {
        fail("envelope thresholds must lie in (0, 1)");
    }
    if (n_keep == 0 || refine_keep < n_keep) {
        fail("need 1 <= n_keep <= refine_keep");
    }
    if (!(multiplicity_tau > 0.0 && multiplicity_tau < 1.0)) {
        fail("multiplicity_tau must lie in (0, 1)");
    }
    if (!(dip_window > 0.0) || !(dip_ratio > 0.0 && dip_ratio < 1.0)) {
        fail("dip_window must be positive and dip_ratio must lie in (0, 1)");
    }
    if (polish_L >= 0 && (!(polish_envelope > 0.0 && polish_envelope < 1.0) || !(polish_window > 0.0))) {
        fail("polish_envelope must lie in (0, 1) and polish_window must be positive");
    }
    if (!(refine_tol > 0.0)) {
        fail("refine_tol must be positive");
    }
}

std::size_t ScanConfig::grid_size() const {
    return static_cast<std::size_t>(std::floor((k_hi - k_lo) / dk + 1e-9)) + 1;
}

SolveParams base_params(double k, const ScanConfig& cfg) {
    SolveParams p;
    p.L = cfg.L_offset + static_cast<int>(std::floor(k));
    p.ell_min = std::min(cfg.ell_min, p.L);
    p.c = cfg.c_offset + static_cast<int>(std::floor(cfg.c_scale / k));
    if (p.L > kMaxMultipole) {
        throw std::invalid_argument("multipole cap exceeded at k = " + fmt(k));
    }
    p.rho_max = envelope_radius(p.L, k, cfg.envelope_at(k));
    p.rho_min = envelope_radius(p.ell_min, k, cfg.envelope_at(k));
    return p;
}

SingularPairs svd_smallest(const Eigen::MatrixXd& A, std::size_t n) {
    const auto N = A.cols();
    if (A.rows() < N) {
        throw std::invalid_argument("svd_smallest: system has fewer rows (" + std::to_string(A.rows()) +
                                    ") than columns (" + std::to_string(N) + ")");
    }
    if (n == 0 || static_cast<Eigen::Index>(n) > N) {
        throw std::invalid_argument("svd_smallest: bad singular pair count");
    }
    // Reduce to the N x N triangular factor first; the SVD then never sees the tall matrix.
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    const Eigen::MatrixXd R = qr.matrixQR().topRows(N).triangularView<Eigen::Upper>();
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) {
        throw NumericalError("svd_smallest: SVD did not converge");
    }
    const auto& s = svd.singularValues();
    if (!s.allFinite()) {
        throw NumericalError("svd_smallest: non-finite singular values");
    }
    SingularPairs out;
    out.vectors.resize(N, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = N - 1 - static_cast<Eigen::Index>(i);
        out.sigma.push_back(s[col]);
        out.vectors.col(static_cast<Eigen::Index>(i)) = svd.matrixV().col(col);
    }
    return out;
}

SystemMatrix assemble_system(const std::vector<std::vector<HPoint>>& copies, double k, int L,
                             std::size_t target_rows, std::uint64_t seed) {
    struct Pair {
        std::uint64_t key;
        RowSource src;
    };
    std::size_t total = 0;
    for (const auto& c : copies) {
        total += c.size() * (c.size() - (c.empty() ? 0 : 1)) / 2;
    }
    if (total == 0) {
        throw NumericalError("assemble_system: no point has an image in the radial window");
    }
    const std::size_t want = std::min(target_rows, total);
    // Pairs are ranked by a fixed hash of (point, copy, copy); the lowest
    // `want` keys are kept. A prefilter avoids materializing every pair.
    const double frac = static_cast<double>(want) / static_cast<double>(total);
    const double keep = std::min(1.0, 1.3 * frac + 64.0 / static_cast<double>(total));
    const auto cut = keep >= 1.0 ? ~std::uint64_t{0} : static_cast<std::uint64_t>(keep * 18446744073709551616.0);

    std::vector<Pair> pairs;
    for (auto threshold = cut;; threshold = ~std::uint64_t{0}) {
        pairs.clear();
        pairs.reserve(static_cast<std::size_t>(keep * static_cast<double>(total)) + 16);
        for (std::size_t j = 0; j < copies.size(); ++j) {
            for (std::size_t a = 0; a < copies[j].size(); ++a) {
                for (std::size_t b = a + 1; b < copies[j].size(); ++b) {
                    const auto key = pair_key(seed, j, a, b);
                    if (key <= threshold) {
                        pairs.push_back({key, {static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(a),
                                               static_cast<std::uint32_t>(b)}});
                    }
                }
            }
        }
        if (pairs.size() >= want) {
            break;
        }
    }
    auto by_key = [](const Pair& x, const Pair& y) { return x.key < y.key; };
    if (pairs.size() > want) {
        std::nth_element(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(want), pairs.end(), by_key);
        pairs.resize(want);
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
        return std::tie(x.src.point, x.src.a, x.src.b) < std::tie(y.src.point, y.src.a, y.src.b);
    });

    const int N = coefficient_count(L);
    SystemMatrix sys;
    sys.full_pairs = total;
    sys.A.resize(static_cast<Eigen::Index>(pairs.size()), N);
    sys.rows.reserve(pairs.size());

    // Q values for every copy that appears in a selected pair.
    std::vector<std::vector<Eigen::VectorXd>> q(copies.size());
    for (const auto& p : pairs) {
        auto& qj = q[p.src.point];
        if (qj.empty()) {
            qj.resize(copies[p.src.point].size());
            ++sys.points_used;
        }
        for (auto idx : {p.src.a, p.src.b}) {
            if (qj[idx].size() == 0) {
                qj[idx] = evaluate_Q(k, L, copies[p.src.point][idx]);
            }
        }
    }
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto& src = pairs[r].src;
        sys.A.row(static_cast<Eigen::Index>(r)) = (q[src.point][src.a] - q[src.point][src.b]).transpose();
        sys.rows.push_back(src);
    }
    return sys;
}

Problem::Problem(const GeneratorSet& gens, const ScanConfig& cfg)
    : gens_(gens), cfg_(cfg), sampler_(gens, cfg.threads) {
    cfg_.validate();
    // Primary sample plus a reserve pool, drawn once for the whole scan.
    points_ = sampler_.sample(3 * cfg_.points, cfg_.seed);
}

void Problem::ensure_radius(double rho_max) {
    const double need = rho_max + sampler_.ball_radius();
    if (covered_ >= need) {
        return;
    }
    // headroom so that small increases of rho_max do not re-enumerate
    const double radius = need + 0.5;
    elements_ = enumerate_group(gens_, radius, sampler_.enumeration_options());
    covered_ = radius;
}

std::size_t Problem::image_count(std::size_t point, double rho_max) const {
    const HPoint& p = points_[point];
    std::size_t n = 0;
    for (std::size_t e = 1; e < elements_.size(); ++e) {
        if (elements_[e].radius > rho_max + p.radius()) {
            break;
        }
        if (apply(elements_[e].g, p).radius() <= rho_max) {
            ++n;
        }
    }
    return n;
}

SolveParams Problem::params(double k) {
    SolveParams p = base_params(k, cfg_);
    for (;;) {
        ensure_radius(p.rho_max);
        bool enough = true;
        for (std::size_t j = 0; j < cfg_.points && enough; ++j) {
            enough = image_count(j, p.rho_max) >= cfg_.min_images;
        }
        if (enough) {
            return p;
        }
        if (++p.L > kMaxMultipole) {
            throw NumericalError("too few images per point for any L <= " + std::to_string(kMaxMultipole) +
                                 " at k = " + fmt(k));
        }
        p.rho_max = envelope_radius(p.L, k, cfg_.envelope_at(k));
    }
}

SolveParams Problem::segment_params(double k) {
    const double s = std::floor(k);
    const double mid = s < 1.0 ? 0.5 * (kMinScanK + 1.0) : s + 0.5;
    return params(mid);
}

SolveParams Problem::polish_params(double k, const SolveParams& base) {
    if (cfg_.polish_L < 0) {
        return base;
    }
    SolveParams p = base;
    p.L = std::min(base.L + cfg_.polish_L, kMaxMultipole);
    p.rho_max = envelope_radius(p.L, k, cfg_.polish_envelope);
    p.rho_min = envelope_radius(p.ell_min, k, cfg_.polish_envelope);
    ensure_radius(p.rho_max);
    return p;
}

std::vector<HPoint> Problem::copies(std::size_t point, const SolveParams& p) const {
    const HPoint& x = points_.at(point);
    if (covered_ < p.rho_max + x.radius()) {
        throw std::logic_error("Problem::copies: element list does not reach rho_max; call ensure_radius");
    }
    std::vector<HPoint> out{x};
    for (std::size_t e = 1; e < elements_.size(); ++e) {
        if (elements_[e].radius > p.rho_max + x.radius()) {
            break;
        }
        const HPoint y = apply(elements_[e].g, x);
        const double r = y.radius();
        if (r >= p.rho_min && r <= p.rho_max) {
            out.push_back(y);
        }
    }
    return out;
}

SystemMatrix Problem::assemble(double k, const SolveParams& p) const {
    std::vector<std::vector<HPoint>> all;
    std::size_t total = 0;
    for (std::size_t j = 0; j < points_.size(); ++j) {
        if (j >= cfg_.points && total >= p.target_rows()) {
            break;
        }
        all.push_back(copies(j, p));
        total += all.back().size() * (all.back().size() - 1) / 2;
    }
    return assemble_system(all, k, p.L, p.target_rows(), cfg_.seed);
}

SingularPairs Problem::solve(double k, const SolveParams& p, std::size_t n_keep) const {
    const SystemMatrix sys = assemble(k, p);
    if (sys.A.rows() < sys.A.cols()) {
        throw NumericalError("only " + std::to_string(sys.A.rows()) + " equations for " +
                             std::to_string(sys.A.cols()) + " unknowns at k = " + fmt(k));
    }
    return svd_smallest(sys.A, n_keep);
}

ScanResult scan(Problem& problem) {
    const auto& cfg = problem.config();
    const std::size_t n = cfg.grid_size();
    const auto k_at = [&](long i) { return cfg.k_lo + cfg.dk * static_cast<double>(i); };

    struct Segment {
        long first;  // grid range [first, last]
        long last;
        SolveParams params;
        long lo;  // evaluated range including overlap points
        long hi;
    };
    std::vector<Segment> segs;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0 || std::floor(cfg.grid_k(i)) != std::floor(cfg.grid_k(i - 1))) {
            segs.push_back({static_cast<long>(i), static_cast<long>(i), problem.segment_params(cfg.grid_k(i)), 0, 0});
        }
        segs.back().last = static_cast<long>(i);
    }

    struct Task {
        long grid;
        std::size_t seg;
    };
    std::vector<Task> tasks;
    std::vector<ScanPoint> done;
    const Problem& shared = problem;
    // Evaluates tasks[from..] in parallel.
    const auto run = [&](std::size_t from) {
        done.resize(tasks.size());
        parallel_for(tasks.size() - from, cfg.threads, [&](std::size_t j) {
            const std::size_t t = from + j;
            auto& pt = done[t];
            pt.k = k_at(tasks[t].grid);
            pt.params = segs[tasks[t].seg].params;
            try {
                const SystemMatrix sys = shared.assemble(pt.k, pt.params);
                pt.rows = static_cast<std::size_t>(sys.A.rows());
                if (sys.A.rows() < sys.A.cols()) {
                    throw NumericalError("only " + std::to_string(sys.A.rows()) + " equations for " +
                                         std::to_string(sys.A.cols()) + " unknowns");
                }
                pt.sigma = svd_smallest(sys.A, cfg.n_keep).sigma;
            } catch (const std::exception& e) {
                throw NumericalError("scan at k = " + fmt(pt.k) + ": " + e.what());
            }
        });
    };
    // Points below the scan floor are never evaluated.
    const auto allowed = [&](long i) { return k_at(i) >= kMinScanK - 1e-12; };
    for (std::size_t s = 0; s < segs.size(); ++s) {
        auto& g = segs[s];
        for (long i = g.first; i <= g.last; ++i) {
            tasks.push_back({i, s});
        }
        g.lo = g.first;
        g.hi = g.last;
        for (long d = 1; d <= static_cast<long>(kSegmentOverlap); ++d) {
            if (allowed(g.first - d)) {
                tasks.push_back({g.first - d, s});
                g.lo = g.first - d;
            }
            tasks.push_back({g.last + d, s});
            g.hi = g.last + d;
        }
    }
    run(0);

    // A segment end that is still rising may be the flank of a minimum just
    // inside the segment; extend the curve until that flank tops out.
    for (;;) {
        std::vector<std::vector<std::pair<double, double>>> curves(segs.size());  // (k, chi2_1)
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            curves[tasks[t].seg].emplace_back(done[t].k, done[t].chi2(0));
        }
        const std::size_t before = tasks.size();
        for (std::size_t s = 0; s < segs.size(); ++s) {
            auto& c = curves[s];
            std::sort(c.begin(), c.end());
            auto& g = segs[s];
            const auto flank_low = [&](bool left) {
                // lowest value reached walking inward along the monotone flank
                const std::size_t m = c.size();
                std::size_t i = left ? 0 : m - 1;
                for (;;) {
                    const std::size_t j = left ? i + 1 : i - 1;
                    if ((left && j >= m) || (!left && i == 0) || c[j].second > c[i].second) {
                        return c[i].second;
                    }
                    i = j;
                }
            };
            if (c.size() < 2) {
                continue;
            }
            const std::size_t m = c.size();
            if (c[0].second >= c[1].second && c[0].second < kFlankRise * flank_low(true) &&
                g.first - g.lo < static_cast<long>(kMaxSegmentExtension)) {
                for (long d = 1; d <= static_cast<long>(kSegmentOverlap) && allowed(g.lo - 1); ++d) {
                    tasks.push_back({--g.lo, s});
                }
            }
            if (c[m - 1].second >= c[m - 2].second && c[m - 1].second < kFlankRise * flank_low(false) &&
                g.hi - g.last < static_cast<long>(kMaxSegmentExtension)) {
                for (long d = 1; d <= static_cast<long>(kSegmentOverlap); ++d) {
                    tasks.push_back({++g.hi, s});
                }
            }
        }
        if (tasks.size() == before) {
            break;
        }
        run(before);
    }

    ScanResult out;
    out.points.resize(n);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& g = segs[tasks[t].seg];
        if (tasks[t].grid >= g.first && tasks[t].grid <= g.last) {
            out.points[static_cast<std::size_t>(tasks[t].grid)] = std::move(done[t]);
        } else {
            out.overlap.push_back(std::move(done[t]));
        }
    }
    std::stable_sort(out.overlap.begin(), out.overlap.end(),
                     [](const ScanPoint& x, const ScanPoint& y) { return x.k < y.k; });
    return out;
}

namespace {

// Prominent interior minima of one smooth curve.
std::vector<Candidate> curve_minima(const std::vector<const ScanPoint*>& curve, const MinimaOptions& opts) {
    std::vector<Candidate> out;
    std::vector<double> c(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        c[i] = curve[i]->chi2(0);
    }
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        if (!(c[i] < c[i - 1] && c[i] <= c[i + 1])) {
            continue;
        }
        std::size_t l = i;
        while (l > 0 && c[l - 1] >= c[l]) {
            --l;
        }
        std::size_t r = i;
        while (r + 1 < c.size() && c[r + 1] >= c[r]) {
            ++r;
        }
        const double prominence = std::min(c[l], c[r]) / std::max(c[i], 1e-300);
        if (prominence < opts.min_prominence) {
            continue;
        }
        Candidate cand;
        cand.k = curve[i]->k;
        cand.k_lo = curve[i - 1]->k;
        cand.k_hi = curve[i + 1]->k;
        cand.prominence = prominence;
        cand.params = curve[i]->params;
        out.push_back(cand);
    }
    return out;
}

}  // namespace

std::vector<Candidate> detect_minima(const ScanResult& scan, const MinimaOptions& opts) {
    const auto& pts = scan.points;
    if (pts.size() < 3) {
        return {};
    }
    const double dk = pts[1].k - pts[0].k;
    struct Found {
        Candidate c;
        bool owned;  // lies inside the segment whose curve produced it
    };
    std::vector<Found> found;
    for (std::size_t a = 0; a < pts.size();) {
        std::size_t b = a;
        while (b < pts.size() && pts[b].params == pts[a].params) {
            ++b;
        }
        std::vector<const ScanPoint*> curve;
        for (const auto& o : scan.overlap) {
            if (o.params == pts[a].params) {
                curve.push_back(&o);
            }
        }
        for (std::size_t i = a; i < b; ++i) {
            curve.push_back(&pts[i]);
        }
        std::stable_sort(curve.begin(), curve.end(),
                         [](const ScanPoint* x, const ScanPoint* y) { return x->k < y->k; });
        const double own_lo = pts[a].k - 0.5 * dk;
        const double own_hi = pts[b - 1].k + 0.5 * dk;
        for (auto c : curve_minima(curve, opts)) {
            if (c.k < pts.front().k - 0.5 * dk || c.k > pts.back().k + 0.5 * dk) {
                continue;  // found on overlap points outside the scan
            }
            c.index = static_cast<std::size_t>(std::lround((c.k - pts[0].k) / dk));
            found.push_back({c, c.k > own_lo && c.k < own_hi});
        }
        a = b;
    }
    std::stable_sort(found.begin(), found.end(), [](const Found& x, const Found& y) { return x.c.k < y.c.k; });
    std::vector<Candidate> out;
    std::vector<bool> owned;
    for (const auto& f : found) {
        if (!out.empty() && std::abs(f.c.k - out.back().k) <= 1.5 * dk) {
            // one minimum seen by two segments: keep the owning segment's view
            if (!owned.back() && f.owned) {
                out.back() = f.c;
                owned.back() = true;
            }
            continue;
        }
        out.push_back(f.c);
        owned.push_back(f.owned);
    }
    for (std::size_t j = 1; j < out.size(); ++j) {
        if (out[j].index - out[j - 1].index <= opts.blend_steps) {
            out[j].blended = out[j - 1].blended = true;
            if (!out[j - 1].partner) {
                out[j - 1].partner = j;
                out[j].partner = j - 1;
            }
        }
    }
    return out;
}

ModeCoefficients Eigenmode::mode(std::size_t i) const {
    if (i >= multiplicity) {
        throw std::out_of_range("Eigenmode::mode: index beyond multiplicity");
    }
    return {k, L, coefficients.col(static_cast<Eigen::Index>(i))};
}

std::optional<std::pair<double, double>> fit_two_quadratics(const std::vector<double>& k,
                                                            const std::vector<double>& chi2) {
    const std::size_t n = k.size();
    if (n != chi2.size() || n < 6) {
        throw std::invalid_argument("fit_two_quadratics: need at least 6 matching samples");
    }
    std::optional<std::pair<double, double>> best;
    double best_rss = std::numeric_limits<double>::infinity();
    for (std::size_t s = 3; s + 3 <= n; ++s) {
        const double cl = 0.5 * (k[0] + k[s - 1]);
        const double cr = 0.5 * (k[s] + k[n - 1]);
        const auto [pl, rl] = fit_parabola(k, chi2, 0, s, cl);
        const auto [pr, rr] = fit_parabola(k, chi2, s, n, cr);
        if (pl[2] <= 0.0 || pr[2] <= 0.0) {
            continue;
        }
        const double vl = cl - pl[1] / (2.0 * pl[2]);
        const double vr = cr - pr[1] / (2.0 * pr[2]);
        const double h = k[1] - k[0];
        if (vl < k[0] - h || vl > k[s] || vr < k[s - 1] || vr > k[n - 1] + h) {
            continue;
        }
        if (rl + rr < best_rss) {
            best_rss = rl + rr;
            best = std::pair{vl, vr};
        }
    }
    return best;
}

namespace {

Eigenmode mode_at(const Problem& problem, double k, const SolveParams& params) {
    const auto& cfg = problem.config();
    const auto keep = std::min<std::size_t>(cfg.refine_keep, static_cast<std::size_t>(params.N()));
    const SingularPairs sp = problem.solve(k, params, keep);
    const auto below = problem.solve(k - cfg.dip_window, params, keep).sigma;
    const auto above = problem.solve(k + cfg.dip_window, params, keep).sigma;
    Eigenmode m;
    m.k = k;
    m.L = params.L;
    m.sigma = sp.sigma;
    m.chi2 = sp.sigma[0] * sp.sigma[0];
    m.multiplicity = count_multiplicity(sp.sigma, below, above, cfg);
    m.coefficients = sp.vectors.leftCols(static_cast<Eigen::Index>(m.multiplicity));
    m.config_hash = config_hash(cfg);
    return m;
}

}  // namespace

std::size_t count_multiplicity(const std::vector<double>& at, const std::vector<double>& below,
                               const std::vector<double>& above, const ScanConfig& cfg) {
    if (at.empty() || below.size() != at.size() || above.size() != at.size()) {
        throw std::invalid_argument("count_multiplicity: singular value lists must be non-empty and equal length");
    }
    const double ref = at.back();
    std::size_t m = 1;
    for (std::size_t i = 1; i < at.size(); ++i) {
        const bool gap = at[i] < cfg.multiplicity_tau * ref;
        const double side = std::min(below[i], above[i]);
        const bool dip = at[i] * at[i] < cfg.dip_ratio * side * side;
        if (!gap && !dip) {
            break;
        }
        ++m;
    }
    return m;
}

namespace {

double best_chi2(const Problem& problem, double k, const SolveParams& p) {
    const double s = problem.solve(k, p, 1).sigma[0];
    return s * s;
}

RefineOutcome refine_unit(const Problem& problem, const Candidate& c, const Candidate* partner,
                          const SolveParams& polish) {
    const auto& cfg = problem.config();
    const SolveParams& params = c.params;
    auto chi2 = [&](double k) { return best_chi2(problem, k, params); };
    RefineOutcome out;

    std::vector<std::pair<double, double>> brackets{{c.k_lo, c.k_hi}};
    if (partner != nullptr) {
        const double lo = std::min(c.k_lo, partner->k_lo);
        const double hi = std::max(c.k_hi, partner->k_hi);
        constexpr std::size_t samples = 17;
        std::vector<double> ks(samples);
        std::vector<double> ys(samples);
        for (std::size_t i = 0; i < samples; ++i) {
            ks[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
            ys[i] = chi2(ks[i]);
        }
        if (const auto v = fit_two_quadratics(ks, ys)) {
            const double half = 0.5 * (v->second - v->first);
            brackets = {{std::max(lo, v->first - half), v->first + half},
                        {v->second - half, std::min(hi, v->second + half)}};
        } else {
            brackets.emplace_back(partner->k_lo, partner->k_hi);
        }
    }

    for (const auto& [a, b] : brackets) {
        double k_best = golden_section(chi2, a, b, cfg.refine_tol).first;
        if (std::min(k_best - a, b - k_best) < cfg.refine_tol) {
            if (out.reason.empty()) {
                out.reason = "minimum in [" + fmt(a) + ", " + fmt(b) + "] moved to the bracket edge under refinement";
            }
            continue;
        }
        if (!(polish == params)) {
            const double w = cfg.polish_window;
            auto fine = [&](double k) { return best_chi2(problem, k, polish); };
            const double k_fine = golden_section(fine, k_best - w, k_best + w, cfg.refine_tol).first;
            // A polished minimum on the window edge means the finer system sees no dip there.
            if (std::min(k_fine - (k_best - w), k_best + w - k_fine) < cfg.refine_tol) {
                if (out.reason.empty()) {
                    out.reason = "minimum near k = " + fmt(k_best) + " vanished at polish accuracy";
                }
                continue;
            }
            k_best = k_fine;
        }
        out.modes.push_back(mode_at(problem, k_best, polish));
    }
    out.rejected = out.modes.empty();
    return out;
}

}  // namespace

RefineOutcome refine_minimum(Problem& problem, const Candidate& c, const Candidate* partner) {
    const SolveParams polish = problem.polish_params(c.k, c.params);
    return refine_unit(problem, c, partner, polish);
}

std::vector<RefineOutcome> refine_all(Problem& problem, const std::vector<Candidate>& candidates) {
    struct Unit {
        const Candidate* c;
        const Candidate* partner;
        SolveParams polish;
    };
    std::vector<Unit> units;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        const auto& c = candidates[j];
        if (c.partner && *c.partner < j) {
            continue;  // handled with its partner
        }
        const Candidate* partner = c.partner ? &candidates.at(*c.partner) : nullptr;
        units.push_back({&c, partner, problem.polish_params(c.k, c.params)});
    }
    std::vector<RefineOutcome> out(units.size());
    const Problem& shared = problem;
    parallel_for(units.size(), problem.config().threads, [&](std::size_t i) {
        out[i] = refine_unit(shared, *units[i].c, units[i].partner, units[i].polish);
    });
    return out;
}

std::uint64_t config_hash(const ScanConfig& cfg) {
    std::uint64_t h = 0x6879706572ULL;
    auto add = [&](std::uint64_t v) { h = mix64(h ^ v); };
    for (double x : {cfg.k_lo, cfg.k_hi, cfg.dk, cfg.c_scale, cfg.envelope, cfg.low_k_envelope, cfg.low_k_limit, cfg.multiplicity_tau, cfg.refine_tol,
                     cfg.dip_window, cfg.dip_ratio, cfg.polish_envelope, cfg.polish_window}) {
        add(std::bit_cast<std::uint64_t>(x));
    }
    for (std::uint64_t x : {static_cast<std::uint64_t>(cfg.points), static_cast<std::uint64_t>(cfg.L_offset),
                            static_cast<std::uint64_t>(cfg.ell_min), static_cast<std::uint64_t>(cfg.c_offset),
                            static_cast<std::uint64_t>(cfg.min_images), static_cast<std::uint64_t>(cfg.n_keep),
                            static_cast<std::uint64_t>(cfg.refine_keep), cfg.seed,
                            static_cast<std::uint64_t>(cfg.polish_L)}) {
        add(x);
    }
    return h;
}

}  // namespace hyperdrum
