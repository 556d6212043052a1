// hyperdrum: scan, refine and check Laplacian eigenmodes of compact
// hyperbolic 3-manifolds.
//
// Exit codes: 0 success, 1 computational failure or failed check, 2 usage error.

#include "hyperdrum/errors.hpp"
#include "hyperdrum/io.hpp"
#include "hyperdrum/manifold.hpp"
#include "hyperdrum/solver.hpp"
#include "hyperdrum/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>

namespace fs = std::filesystem;
using namespace hyperdrum;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A check ran and did not pass.
struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

class Timer {
public:
    void stage(const std::string& name) {
        const auto now = Clock::now();
        if (!current_.empty()) {
            stages_[current_] = std::chrono::duration<double>(now - mark_).count();
        }
        current_ = name;
        mark_ = now;
    }
    nlohmann::ordered_json finish() {
        stage("");
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& [k, v] : stages_) {
            j[k] = v;
        }
        return j;
    }
    double total() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

private:
    Clock::time_point start_ = Clock::now();
    Clock::time_point mark_ = start_;
    std::string current_;
    std::map<std::string, double> stages_;
};

ManifoldSpec load_manifold(const std::string& path) {
    try {
        return parse_manifold(path);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

std::vector<Eigenmode> load_modes(const std::vector<std::string>& paths) {
    std::vector<Eigenmode> modes;
    for (const auto& p : paths) {
        try {
            modes.push_back(read_eigenmode(fs::path(p)));
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }
    std::stable_sort(modes.begin(), modes.end(), [](const Eigenmode& a, const Eigenmode& b) { return a.k < b.k; });
    return modes;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot write " + path.string());
    }
    return out;
}

fs::path manifest_path(const fs::path& out) {
    auto p = out;
    p.replace_extension(".manifest.json");
    return p;
}

void write_manifest(const fs::path& path, const std::string& command, const ScanConfig& cfg,
                    const nlohmann::ordered_json& inputs, Timer& timer) {
    nlohmann::ordered_json j;
    j["schema"] = "hyperdrum-manifest " + std::to_string(kFileSchemaVersion);
    j["command"] = command;
    j["version"] = HYPERDRUM_VERSION;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["config"] = config_to_string(cfg);
    j["config_hash"] = config_hash(cfg);
    j["inputs"] = inputs;
    j["wall_time_s"] = timer.total();
    j["stages_s"] = timer.finish();
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

void warn_blind_spot(const ScanConfig& cfg) {
    std::cerr << "warning: scan starts at k = " << cfg.k_lo << "; modes below k = 0.25 (q2 < 1.0625) are never searched\n";
}

// ---------------------------------------------------------------- scan

struct ScanArgs {
    std::string manifold;
    std::string out;
    ScanConfig cfg;
};

void cmd_scan(const ScanArgs& a) {
    Timer timer;
    timer.stage("load");
    const ManifoldSpec spec = load_manifold(a.manifold);
    try {
        a.cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    warn_blind_spot(a.cfg);
    timer.stage("sample");
    Problem problem(spec.generators, a.cfg);
    timer.stage("scan");
    const ScanResult res = scan(problem);
    timer.stage("write");
    {
        auto out = open_output(a.out);
        write_scan_csv(out, spec.name, a.cfg, res.points);
    }
    {
        auto out = open_output(overlap_path(a.out));
        write_scan_csv(out, spec.name, a.cfg, res.overlap);
    }
    const auto cands = detect_minima(res);
    std::cerr << "scanned " << res.points.size() << " k values; " << cands.size() << " candidate minima\n";
    write_manifest(manifest_path(a.out), "scan", a.cfg, {{"manifold", a.manifold}}, timer);
}

// ---------------------------------------------------------------- refine

struct RefineArgs {
    std::string manifold;
    std::string scan;
    std::string out_dir;
    double min_prominence = MinimaOptions{}.min_prominence;
    unsigned threads = 0;
};

// Rebuilds the scan result and re-derives each row's full parameter set.
ScanResult reload_scan(Problem& problem, const ScanFile& primary, const ScanFile& overlap) {
    ScanResult res;
    std::vector<SolveParams> seen;
    for (auto p : primary.points) {
        const SolveParams full = problem.segment_params(p.k);
        if (full.L != p.params.L || full.rho_min != p.params.rho_min || full.rho_max != p.params.rho_max) {
            throw UsageError("scan row k = " + format_real(p.k) +
                             " does not match the manifold and config recorded in the scan file");
        }
        p.params = full;
        if (std::find(seen.begin(), seen.end(), full) == seen.end()) {
            seen.push_back(full);
        }
        res.points.push_back(std::move(p));
    }
    for (auto p : overlap.points) {
        const auto it = std::find_if(seen.begin(), seen.end(), [&](const SolveParams& s) {
            return s.L == p.params.L && s.rho_min == p.params.rho_min && s.rho_max == p.params.rho_max;
        });
        if (it == seen.end()) {
            throw UsageError("overlap row k = " + format_real(p.k) + " matches no scan segment");
        }
        p.params = *it;
        res.overlap.push_back(std::move(p));
    }
    return res;
}

void cmd_refine(const RefineArgs& a) {
    Timer timer;
    timer.stage("load");
    const ManifoldSpec spec = load_manifold(a.manifold);
    ScanFile primary;
    ScanFile overlap;
    try {
        primary = read_scan_csv(fs::path(a.scan));
        const auto op = overlap_path(a.scan);
        if (fs::exists(op)) {
            overlap = read_scan_csv(op);
        }
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    if (!primary.manifold.empty() && primary.manifold != spec.name) {
        throw UsageError("scan file is for " + primary.manifold + ", not " + spec.name);
    }
    ScanConfig cfg = primary.config;
    cfg.threads = a.threads;
    warn_blind_spot(cfg);
    timer.stage("sample");
    Problem problem(spec.generators, cfg);
    const ScanResult res = reload_scan(problem, primary, overlap);
    timer.stage("detect");
    MinimaOptions opts;
    opts.min_prominence = a.min_prominence;
    const auto cands = detect_minima(res, opts);
    timer.stage("refine");
    std::vector<Eigenmode> modes;
    for (const auto& r : refine_all(problem, cands)) {
        if (!r.reason.empty()) {
            std::cerr << "rejected: " << r.reason << '\n';
        }
        for (auto m : r.modes) {
            m.manifold = spec.name;
            modes.push_back(std::move(m));
        }
    }
    std::stable_sort(modes.begin(), modes.end(), [](const Eigenmode& x, const Eigenmode& y) { return x.k < y.k; });
    timer.stage("write");
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < modes.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "mode_%03zu.txt", i);
        auto out = open_output(dir / name);
        write_eigenmode(out, modes[i]);
        files.push_back(name);
    }
    {
        auto out = open_output(dir / "summary.txt");
        write_summary_table(out, spec.name, modes);
    }
    if (modes.empty()) {
        std::cerr << "warning: no minima confirmed in the scan\n";
    }
    std::cerr << modes.size() << " eigenvalues written to " << dir.string() << '\n';
    write_manifest(dir / "manifest.json", "refine", cfg,
                   {{"manifold", a.manifold}, {"scan", a.scan}, {"modes", files}}, timer);
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
    std::string manifold;
    std::vector<std::string> modes;
    std::string spectrum;
    std::string check;
    std::string out;
    std::uint64_t seed = 1;
    std::size_t n_mc = 100000;
    double rho = 1.0;
    std::size_t pairs = 2;
    std::size_t samples = 256;
    double tolerance = std::numeric_limits<double>::quiet_NaN();
    unsigned threads = 0;
};

double tolerance_for(const ValidateArgs& a, double fallback) { return std::isnan(a.tolerance) ? fallback : a.tolerance; }

// One generator per inverse pair, largest matched circle first.
std::vector<std::size_t> circle_generators(const GeneratorSet& gens, double rho) {
    std::vector<std::pair<double, std::size_t>> found;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        if (gens.inverse_index(i) < i) {
            continue;
        }
        if (const auto c = matched_circle(gens[i], rho)) {
            found.emplace_back(c->alpha, i);
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<std::size_t> out;
    for (const auto& f : found) {
        out.push_back(f.second);
    }
    return out;
}

Report check_weyl(const ValidateArgs& a, const ManifoldSpec& spec, const std::vector<Eigenmode>& modes) {
    std::vector<double> k;
    std::vector<std::size_t> mult;
    std::optional<double> volume = spec.volume;
    if (!a.spectrum.empty()) {
        Spectrum sp;
        try {
            sp = parse_spectrum(a.spectrum);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        k = sp.k();
        mult = sp.multiplicity;
        if (sp.volume) {
            volume = sp.volume;
        }
    } else {
        for (const auto& m : modes) {
            k.push_back(m.k);
            mult.push_back(m.multiplicity);
        }
    }
    if (!volume) {
        throw UsageError("weyl check needs a volume (manifold or spectrum metadata)");
    }
    Staircase s;
    try {
        s = weyl_staircase(k, mult);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const double expected = weyl_coefficient(*volume);
    const double tol = tolerance_for(a, 0.15);
    Report r;
    r.check = "weyl";
    r.add("volume", *volume);
    r.add("modes", format_real(static_cast<double>(s.count.back())));
    r.add("fit_window", format_real(s.fit_lo) + " " + format_real(s.fit_hi));
    r.add("a", s.a);
    r.add("b", s.b);
    r.add("expected_a", expected);
    r.add("relative_error", s.a / expected - 1.0);
    r.add("tolerance", tol);
    r.pass = std::abs(s.a / expected - 1.0) < tol;
    return r;
}

Report check_goe(const ValidateArgs& a, const std::vector<Eigenmode>& modes) {
    Report r;
    r.check = "goe";
    const double tol = tolerance_for(a, 0.05);
    r.add("tolerance", tol);
    r.pass = true;
    for (const auto& m : modes) {
        if (m.coefficients.rows() < 100) {
            throw UsageError("goe check needs modes with at least 100 coefficients; q2 = " + format_real(m.q2()) +
                             " has " + std::to_string(m.coefficients.rows()));
        }
        const GoeReport g = goe_test(m.coefficients.col(0));
        r.add("mode", format_real(m.q2()) + " coefficients " + std::to_string(g.x.size()) + " ks " + format_real(g.ks));
        r.pass = r.pass && g.ks < tol;
    }
    return r;
}

Report check_circles(const ValidateArgs& a, const ManifoldSpec& spec, const std::vector<Eigenmode>& modes) {
    const auto gens = circle_generators(spec.generators, a.rho);
    if (gens.size() < a.pairs) {
        throw UsageError("only " + std::to_string(gens.size()) + " matched circle pairs exist at rho = " +
                         format_real(a.rho));
    }
    Report r;
    r.check = "circles";
    const double tol = tolerance_for(a, 0.05);
    r.add("rho", a.rho);
    r.add("samples", format_real(static_cast<double>(a.samples)));
    r.add("tolerance", tol);
    r.pass = true;
    for (const auto& m : modes) {
        for (std::size_t v = 0; v < m.multiplicity; ++v) {
            for (std::size_t p = 0; p < a.pairs; ++p) {
                const auto& g = spec.generators[gens[p]];
                const CirclesReport c = circles_test(m.mode(v), g, a.rho, a.samples);
                r.add("pair", format_real(m.q2()) + " vector " + std::to_string(v + 1) + " generator " +
                                  spec.generators.label(gens[p]) + " alpha " + format_real(c.alpha) + " ratio " +
                                  format_real(c.ratio()));
                r.pass = r.pass && c.ratio() < tol;
            }
        }
    }
    return r;
}

Report check_ortho(const ValidateArgs& a, const ManifoldSpec& spec, const std::vector<Eigenmode>& modes) {
    std::vector<ModeCoefficients> vecs;
    std::vector<std::string> names;
    for (const auto& m : modes) {
        for (std::size_t v = 0; v < m.multiplicity; ++v) {
            vecs.push_back(m.mode(v));
            names.push_back(format_real(m.q2()) + "/" + std::to_string(v + 1));
        }
    }
    if (vecs.size() < 2) {
        throw UsageError("ortho check needs at least two mode vectors");
    }
    const DomainSampler sampler(spec.generators, a.threads);
    const Eigen::MatrixXd g = overlap_matrix(vecs, sampler, a.n_mc, a.seed, a.threads);
    Report r;
    r.check = "ortho";
    const double tol = tolerance_for(a, 0.05);
    r.add("n_mc", format_real(static_cast<double>(a.n_mc)));
    r.add("tolerance", tol);
    r.pass = true;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < g.cols(); ++j) {
            r.add("overlap", names[static_cast<std::size_t>(i)] + " " + names[static_cast<std::size_t>(j)] + " " +
                                 format_real(g(i, j)));
            worst = std::max(worst, std::abs(g(i, j)));
        }
    }
    r.add("max_abs_overlap", worst);
    r.pass = worst < tol;
    return r;
}

Report check_bounds(const ValidateArgs& a, const ManifoldSpec& spec, const std::vector<Eigenmode>& modes) {
    if (modes.empty()) {
        throw UsageError("bounds check needs at least one mode");
    }
    double D = 0.0;
    std::string source = "metadata";
    if (spec.diameter) {
        D = *spec.diameter;
    } else {
        D = estimate_diameter(spec.generators, 10000, a.seed, a.threads);
        source = "estimate";
    }
    const BoundsReport b = eigenvalue_bounds(D);
    const double q2 = modes.front().q2();
    Report r;
    r.check = "bounds";
    r.add("diameter", D);
    r.add("diameter_source", source);
    r.add("D_tilde", b.D_tilde);
    r.add("lower", b.lower);
    r.add("upper", b.upper);
    r.add("q2_1", q2);
    r.add("wavelength_ratio", wavelength_ratio(modes.front().k, D));
    r.pass = b.lower <= q2 && q2 <= b.upper;
    return r;
}

void cmd_validate(const ValidateArgs& a) {
    const ManifoldSpec spec = load_manifold(a.manifold);
    const auto modes = load_modes(a.modes);
    for (const auto& m : modes) {
        if (!m.manifold.empty() && m.manifold != spec.name) {
            std::cerr << "warning: mode q2 = " << m.q2() << " was computed for " << m.manifold << '\n';
        }
    }
    if (a.check != "weyl" && modes.empty()) {
        throw UsageError(a.check + " check needs --modes");
    }
    Report r;
    if (a.check == "weyl") {
        r = check_weyl(a, spec, modes);
    } else if (a.check == "goe") {
        r = check_goe(a, modes);
    } else if (a.check == "circles") {
        r = check_circles(a, spec, modes);
    } else if (a.check == "ortho") {
        r = check_ortho(a, spec, modes);
    } else {
        r = check_bounds(a, spec, modes);
    }
    r.fields.insert(r.fields.begin(), {"manifold", spec.name});
    if (a.out.empty()) {
        write_report(std::cout, r);
    } else {
        auto out = open_output(a.out);
        write_report(out, r);
    }
    if (!r.pass) {
        throw CheckFailed(a.check + " check failed");
    }
}

// ---------------------------------------------------------------- slice, sphere

struct PlotArgs {
    std::string manifold;
    std::string mode;
    std::string out;
    std::string plane = "z";
    std::size_t resolution = 101;
    std::size_t vector = 1;
    double rho = 1.0;
};

ModeCoefficients pick_vector(const PlotArgs& a) {
    const auto modes = load_modes({a.mode});
    const Eigenmode& m = modes.front();
    if (a.vector < 1 || a.vector > m.multiplicity) {
        throw UsageError("--vector must lie in [1, " + std::to_string(m.multiplicity) + "]");
    }
    return m.mode(a.vector - 1);
}

void cmd_slice(const PlotArgs& a) {
    const ManifoldSpec spec = load_manifold(a.manifold);
    const ModeCoefficients m = pick_vector(a);
    if (a.resolution < 2) {
        throw UsageError("--resolution must be at least 2");
    }
    const int fixed = a.plane == "x" ? 0 : a.plane == "y" ? 1 : 2;
    const DomainSampler sampler(spec.generators);
    auto out = open_output(a.out);
    out << "# hyperdrum-slice " << kFileSchemaVersion << '\n';
    out << "# manifold " << spec.name << '\n';
    out << "# q2 " << format_real(m.q2()) << " plane " << a.plane << "=0 poincare coordinates; nan outside the domain\n";
    out << "u,v,psi\n";
    const double h = 2.0 / static_cast<double>(a.resolution);
    for (std::size_t i = 0; i < a.resolution; ++i) {
        for (std::size_t j = 0; j < a.resolution; ++j) {
            const double u = -1.0 + (static_cast<double>(i) + 0.5) * h;
            const double v = -1.0 + (static_cast<double>(j) + 0.5) * h;
            double value = std::numeric_limits<double>::quiet_NaN();
            if (u * u + v * v < 1.0) {
                Vec3 x{};
                int c = 0;
                for (int axis = 0; axis < 3; ++axis) {
                    if (axis != fixed) {
                        x[static_cast<std::size_t>(axis)] = c++ == 0 ? u : v;
                    }
                }
                const HPoint p = from_poincare(x);
                if (sampler.contains(p)) {
                    value = evaluate_mode(m, p);
                }
            }
            out << format_real(u) << ',' << format_real(v) << ',' << format_real(value) << '\n';
        }
    }
}

void cmd_sphere(const PlotArgs& a) {
    const ManifoldSpec spec = load_manifold(a.manifold);
    const ModeCoefficients m = pick_vector(a);
    if (!(a.rho > 0.0)) {
        throw UsageError("--rho must be positive");
    }
    if (a.resolution < 2) {
        throw UsageError("--resolution must be at least 2");
    }
    // Lambert cylindrical equal-area: x = phi, y = cos(theta).
    const std::size_t ny = a.resolution;
    const std::size_t nx = 2 * a.resolution;
    {
        auto out = open_output(a.out);
        out << "# hyperdrum-sphere " << kFileSchemaVersion << '\n';
        out << "# manifold " << spec.name << '\n';
        out << "# q2 " << format_real(m.q2()) << " rho " << format_real(a.rho)
            << " equal-area projection x = phi, y = cos(theta)\n";
        out << "x,y,theta,phi,psi\n";
        for (std::size_t j = 0; j < ny; ++j) {
            const double y = 1.0 - (static_cast<double>(j) + 0.5) * 2.0 / static_cast<double>(ny);
            const double theta = std::acos(y);
            for (std::size_t i = 0; i < nx; ++i) {
                const double phi = (static_cast<double>(i) + 0.5) * 2.0 * std::numbers::pi / static_cast<double>(nx);
                const double value = evaluate_mode(m, from_spherical(a.rho, theta, phi));
                out << format_real(phi) << ',' << format_real(y) << ',' << format_real(theta) << ','
                    << format_real(phi) << ',' << format_real(value) << '\n';
            }
        }
    }
    fs::path circles = a.out;
    circles.replace_extension(".circles.csv");
    auto out = open_output(circles);
    out << "# hyperdrum-circles " << kFileSchemaVersion << '\n';
    out << "# manifold " << spec.name << " rho " << format_real(a.rho) << '\n';
    out << "generator,partner,alpha,theta,phi,partner_theta,partner_phi\n";
    std::size_t n = 0;
    for (std::size_t g = 0; g < spec.generators.size(); ++g) {
        if (const auto c = matched_circle(spec.generators[g], a.rho)) {
            out << spec.generators.label(g) << ',' << spec.generators.label(spec.generators.inverse_index(g)) << ','
                << format_real(c->alpha) << ',' << format_real(c->center.theta) << ',' << format_real(c->center.phi)
                << ',' << format_real(c->partner_center.theta) << ',' << format_real(c->partner_center.phi) << '\n';
            ++n;
        }
    }
    std::cerr << n << " matched circles at rho = " << a.rho << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laplacian eigenmodes of compact hyperbolic 3-manifolds"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(HYPERDRUM_VERSION));

    ScanArgs scan_args;
    auto* scan_cmd = app.add_subcommand("scan", "chi^2(k) scan written as CSV");
    {
        auto& c = scan_args.cfg;
        scan_cmd->add_option("--manifold", scan_args.manifold, "manifold file")->required();
        scan_cmd->add_option("--out", scan_args.out, "scan CSV path")->required();
        scan_cmd->add_option("--k-lo", c.k_lo, "first k")->capture_default_str();
        scan_cmd->add_option("--k-hi", c.k_hi, "last k")->capture_default_str();
        scan_cmd->add_option("--dk", c.dk, "grid step")->capture_default_str();
        scan_cmd->add_option("--points", c.points, "sample points d")->capture_default_str();
        scan_cmd->add_option("--n-keep", c.n_keep, "singular values kept per k")->capture_default_str();
        scan_cmd->add_option("--L-offset", c.L_offset, "L = L_offset + floor(k)")->capture_default_str();
        scan_cmd->add_option("--envelope", c.envelope, "radial envelope threshold")->capture_default_str();
        scan_cmd->add_option("--seed", c.seed, "random seed")->envname("HYPERDRUM_SEED")->capture_default_str();
        scan_cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)")->capture_default_str();
    }

    RefineArgs refine_args;
    auto* refine_cmd = app.add_subcommand("refine", "refine the minima of a scan into eigenmode records");
    refine_cmd->add_option("--manifold", refine_args.manifold, "manifold file")->required();
    refine_cmd->add_option("--scan", refine_args.scan, "scan CSV from 'scan'")->required();
    refine_cmd->add_option("--out-dir", refine_args.out_dir, "output directory")->required();
    refine_cmd->add_option("--min-prominence", refine_args.min_prominence, "minimum dip ratio")->capture_default_str();
    refine_cmd->add_option("--threads", refine_args.threads, "worker threads (0 = all cores)")->capture_default_str();

    ValidateArgs val;
    auto* val_cmd = app.add_subcommand("validate", "run one check on eigenmode records");
    val_cmd->add_option("--manifold", val.manifold, "manifold file")->required();
    val_cmd->add_option("--check", val.check, "weyl, goe, circles, ortho or bounds")
        ->required()
        ->check(CLI::IsMember({"weyl", "goe", "circles", "ortho", "bounds"}));
    val_cmd->add_option("--modes", val.modes, "eigenmode record files");
    val_cmd->add_option("--spectrum", val.spectrum, "spectrum file (weyl check)");
    val_cmd->add_option("--out", val.out, "report path (default stdout)");
    val_cmd->add_option("--seed", val.seed, "random seed")->envname("HYPERDRUM_SEED")->capture_default_str();
    val_cmd->add_option("--n-mc", val.n_mc, "Monte Carlo points (ortho)")->capture_default_str();
    val_cmd->add_option("--rho", val.rho, "sphere radius (circles)")->capture_default_str();
    val_cmd->add_option("--pairs", val.pairs, "circle pairs, largest first (circles)")->capture_default_str();
    val_cmd->add_option("--samples", val.samples, "points per circle (circles)")->capture_default_str();
    val_cmd->add_option("--tolerance", val.tolerance, "override the check's pass threshold");
    val_cmd->add_option("--threads", val.threads, "worker threads (0 = all cores)")->capture_default_str();

    PlotArgs slice_args;
    auto* slice_cmd = app.add_subcommand("slice", "mode amplitude on a coordinate plane of the Poincare ball");
    slice_cmd->add_option("--manifold", slice_args.manifold, "manifold file")->required();
    slice_cmd->add_option("--mode", slice_args.mode, "eigenmode record")->required();
    slice_cmd->add_option("--out", slice_args.out, "grid CSV path")->required();
    slice_cmd->add_option("--plane", slice_args.plane, "coordinate set to zero")
        ->check(CLI::IsMember({"x", "y", "z"}))
        ->capture_default_str();
    slice_cmd->add_option("--resolution", slice_args.resolution, "cells per side")->capture_default_str();
    slice_cmd->add_option("--vector", slice_args.vector, "vector within a degenerate mode")->capture_default_str();

    PlotArgs sphere_args;
    sphere_args.resolution = 64;
    auto* sphere_cmd = app.add_subcommand("sphere", "mode amplitude on a geodesic sphere with matched circles");
    sphere_cmd->add_option("--manifold", sphere_args.manifold, "manifold file")->required();
    sphere_cmd->add_option("--mode", sphere_args.mode, "eigenmode record")->required();
    sphere_cmd->add_option("--out", sphere_args.out, "projection CSV path")->required();
    sphere_cmd->add_option("--rho", sphere_args.rho, "sphere radius")->capture_default_str();
    sphere_cmd->add_option("--resolution", sphere_args.resolution, "rows in cos(theta)")->capture_default_str();
    sphere_cmd->add_option("--vector", sphere_args.vector, "vector within a degenerate mode")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*scan_cmd) {
            cmd_scan(scan_args);
        } else if (*refine_cmd) {
            cmd_refine(refine_args);
        } else if (*val_cmd) {
            cmd_validate(val);
        } else if (*slice_cmd) {
            cmd_slice(slice_args);
        } else if (*sphere_cmd) {
            cmd_sphere(sphere_args);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const CheckFailed& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
