#include "hyperdrum/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace hyperdrum {

namespace {

struct Field {
    const char* name;
    std::function<std::string(const ScanConfig&)> get;
    std::function<void(ScanConfig&, const std::string&)> set;
};

double to_real(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
        throw std::invalid_argument(s);
    }
    return v;
}

unsigned long long to_uint(const std::string& s) {
    if (s.empty() || s[0] == '-') {
        throw std::invalid_argument(s);
    }
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) {
        throw std::invalid_argument(s);
    }
    return v;
}

int to_int(const std::string& s) {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) {
        throw std::invalid_argument(s);
    }
    return v;
}

#define HD_REAL(f) \
    Field { #f, [](const ScanConfig& c) { return format_real(c.f); }, [](ScanConfig& c, const std::string& v) { c.f = to_real(v); } }
#define HD_INT(f) \
    Field { #f, [](const ScanConfig& c) { return std::to_string(c.f); }, [](ScanConfig& c, const std::string& v) { c.f = to_int(v); } }
#define HD_UINT(f)                                                                    \
    Field {                                                                           \
        #f, [](const ScanConfig& c) { return std::to_string(c.f); },                  \
            [](ScanConfig& c, const std::string& v) { c.f = static_cast<decltype(c.f)>(to_uint(v)); } \
    }

const std::vector<Field>& config_fields() {
    static const std::vector<Field> fields{
        HD_REAL(k_lo),         HD_REAL(k_hi),          HD_REAL(dk),          HD_UINT(points),
        HD_INT(L_offset),      HD_INT(ell_min),        HD_INT(c_offset),     HD_REAL(c_scale),
        HD_REAL(envelope),     HD_REAL(low_k_envelope), HD_REAL(low_k_limit), HD_UINT(min_images),    HD_UINT(n_keep),      HD_UINT(refine_keep),
        HD_REAL(multiplicity_tau), HD_REAL(dip_window), HD_REAL(dip_ratio),  HD_INT(polish_L),
        HD_REAL(polish_envelope), HD_REAL(polish_window), HD_REAL(refine_tol), HD_UINT(seed),
    };
    return fields;
}

#undef HD_REAL
#undef HD_INT
#undef HD_UINT

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        out.push_back(cur);
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') {
        s.pop_back();
    }
    return s;
}

void expect_header(const std::string& line, const std::string& kind, const std::string& where) {
    std::istringstream in(line);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != kind) {
        throw std::runtime_error(where + ": missing '" + kind + "' header");
    }
    if (version != kFileSchemaVersion) {
        throw std::runtime_error(where + ": unsupported " + kind + " schema version " + std::to_string(version));
    }
}

std::ifstream open_input(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(std::string("cannot open ") + what + " " + path.string());
    }
    return in;
}

}  // namespace

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string config_to_string(const ScanConfig& cfg) {
    std::string out;
    for (const auto& f : config_fields()) {
        if (!out.empty()) {
            out += ' ';
        }
        out += std::string(f.name) + "=" + f.get(cfg);
    }
    return out;
}

ScanConfig config_from_string(const std::string& text) {
    ScanConfig cfg;
    std::istringstream in(text);
    for (std::string tok; in >> tok;) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config entry '" + tok + "' is not key=value");
        }
        const std::string key = tok.substr(0, eq);
        const std::string value = tok.substr(eq + 1);
        bool known = false;
        for (const auto& f : config_fields()) {
            if (key == f.name) {
                try {
                    f.set(cfg, value);
                } catch (const std::logic_error&) {
                    throw std::runtime_error("config entry " + key + ": bad value '" + value + "'");
                }
                known = true;
                break;
            }
        }
        if (!known) {
            throw std::runtime_error("unknown config key '" + key + "'");
        }
    }
    return cfg;
}

void write_scan_csv(std::ostream& out, const std::string& manifold, const ScanConfig& cfg,
                    const std::vector<ScanPoint>& points) {
    out << "# hyperdrum-scan " << kFileSchemaVersion << '\n';
    out << "# manifold " << manifold << '\n';
    out << "# config " << config_to_string(cfg) << '\n';
    out << 'k';
    for (std::size_t i = 0; i < cfg.n_keep; ++i) {
        out << ",chi2_" << i + 1;
    }
    out << ",L,M,N,rho_min,rho_max\n";
    for (const auto& p : points) {
        if (p.sigma.size() != cfg.n_keep) {
            throw std::invalid_argument("write_scan_csv: scan point has the wrong number of singular values");
        }
        out << format_real(p.k);
        for (std::size_t i = 0; i < p.sigma.size(); ++i) {
            out << ',' << format_real(p.chi2(i));
        }
        out << ',' << p.params.L << ',' << p.rows << ',' << p.params.N() << ',' << format_real(p.params.rho_min)
            << ',' << format_real(p.params.rho_max) << '\n';
    }
}

ScanFile read_scan_csv(std::istream& in, const std::string& source) {
    ScanFile f;
    std::string line;
    int number = 0;
    auto where = [&] { return source + ":" + std::to_string(number); };
    auto next = [&]() -> bool {
        if (!std::getline(in, line)) {
            return false;
        }
        ++number;
        line = strip_cr(line);
        return true;
    };
    if (!next() || line.rfind("# ", 0) != 0) {
        throw std::runtime_error(source + ": missing '# hyperdrum-scan' header");
    }
    expect_header(line.substr(2), "hyperdrum-scan", where());
    bool have_config = false;
    std::size_t columns = 0;
    while (next()) {
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            if (line.rfind("# manifold ", 0) == 0) {
                f.manifold = line.substr(11);
            } else if (line.rfind("# config ", 0) == 0) {
                f.config = config_from_string(line.substr(9));
                have_config = true;
            }
            continue;
        }
        if (columns == 0) {
            const auto head = split(line, ',');
            if (head.empty() || head[0] != "k") {
                throw std::runtime_error(where() + ": expected the CSV column header");
            }
            columns = head.size();
            if (!have_config || columns != f.config.n_keep + 6) {
                throw std::runtime_error(where() + ": column header does not match the config echo");
            }
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != columns) {
            throw std::runtime_error(where() + ": expected " + std::to_string(columns) + " columns, got " +
                                     std::to_string(cells.size()));
        }
        try {
            ScanPoint p;
            p.k = to_real(cells[0]);
            for (std::size_t i = 0; i < f.config.n_keep; ++i) {
                p.sigma.push_back(std::sqrt(to_real(cells[1 + i])));
            }
            const std::size_t b = 1 + f.config.n_keep;
            p.params.L = to_int(cells[b]);
            p.rows = static_cast<std::size_t>(to_uint(cells[b + 1]));
            p.params.rho_min = to_real(cells[b + 3]);
            p.params.rho_max = to_real(cells[b + 4]);
            p.params.ell_min = std::min(f.config.ell_min, p.params.L);
            if (to_int(cells[b + 2]) != p.params.N()) {
                throw std::runtime_error("N does not match L");
            }
            f.points.push_back(std::move(p));
        } catch (const std::exception& e) {
            throw std::runtime_error(where() + ": malformed scan row (" + e.what() + ")");
        }
    }
    if (columns == 0) {
        throw std::runtime_error(source + ": no CSV column header");
    }
    return f;
}

ScanFile read_scan_csv(const std::filesystem::path& path) {
    auto in = open_input(path, "scan file");
    return read_scan_csv(in, path.string());
}

std::filesystem::path overlap_path(const std::filesystem::path& scan_csv) {
    auto p = scan_csv;
    p.replace_extension(".overlap.csv");
    return p;
}

void write_eigenmode(std::ostream& out, const Eigenmode& m) {
    out << "hyperdrum-eigenmode " << kFileSchemaVersion << '\n';
    out << "manifold " << m.manifold << '\n';
    out << "k " << format_real(m.k) << '\n';
    out << "q2 " << format_real(m.q2()) << '\n';
    out << "multiplicity " << m.multiplicity << '\n';
    out << "L " << m.L << '\n';
    out << "chi2 " << format_real(m.chi2) << '\n';
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, m.config_hash);
    out << "config_hash " << hash << '\n';
    out << "sigma";
    for (double s : m.sigma) {
        out << ' ' << format_real(s);
    }
    out << '\n';
    for (Eigen::Index v = 0; v < m.coefficients.cols(); ++v) {
        out << "vector " << v + 1 << '\n';
        for (int l = 0; l <= m.L; ++l) {
            for (int mm = -l; mm <= l; ++mm) {
                out << l << ' ' << mm << ' ' << format_real(m.coefficients(harmonic_index(l, mm), v)) << '\n';
            }
        }
    }
}

Eigenmode read_eigenmode(std::istream& in, const std::string& source) {
    Eigenmode m;
    std::string line;
    int number = 0;
    auto where = [&] { return source + ":" + std::to_string(number); };
    if (!std::getline(in, line)) {
        throw std::runtime_error(source + ": empty eigenmode file");
    }
    ++number;
    expect_header(strip_cr(line), "hyperdrum-eigenmode", where());
    bool have_k = false;
    bool have_L = false;
    double q2 = 0.0;
    std::vector<std::vector<double>> vectors;
    try {
        while (std::getline(in, line)) {
            ++number;
            line = strip_cr(line);
            if (line.empty() || line[0] == '#') {
                continue;
            }
            std::istringstream ls(line);
            std::string key;
            ls >> key;
            if (key == "manifold") {
                std::getline(ls >> std::ws, m.manifold);
            } else if (key == "k") {
                ls >> m.k;
                have_k = true;
            } else if (key == "q2") {
                ls >> q2;
            } else if (key == "multiplicity") {
                ls >> m.multiplicity;
            } else if (key == "L") {
                ls >> m.L;
                have_L = true;
            } else if (key == "chi2") {
                ls >> m.chi2;
            } else if (key == "config_hash") {
                std::string h;
                ls >> h;
                m.config_hash = std::stoull(h, nullptr, 16);
            } else if (key == "sigma") {
                for (double s; ls >> s;) {
                    m.sigma.push_back(s);
                }
                continue;
            } else if (key == "vector") {
                if (!have_L) {
                    throw std::runtime_error("vector block before L");
                }
                vectors.emplace_back(static_cast<std::size_t>(coefficient_count(m.L)), 0.0);
                continue;
            } else if (!vectors.empty()) {
                const int l = to_int(key);
                int mm = 0;
                double a = 0.0;
                if (!(ls >> mm >> a) || l < 0 || l > m.L || mm < -l || mm > l) {
                    throw std::runtime_error("bad coefficient line '" + line + "'");
                }
                vectors.back()[static_cast<std::size_t>(harmonic_index(l, mm))] = a;
                continue;
            } else {
                throw std::runtime_error("unknown key '" + key + "'");
            }
            if (ls.fail()) {
                throw std::runtime_error("bad value for " + key);
            }
        }
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(where() + ": " + e.what());
    } catch (const std::logic_error& e) {
        throw std::runtime_error(where() + ": malformed line '" + line + "'");
    }
    if (!have_k || !have_L || vectors.empty()) {
        throw std::runtime_error(source + ": eigenmode record needs k, L and at least one vector");
    }
    if (vectors.size() != m.multiplicity) {
        throw std::runtime_error(source + ": multiplicity " + std::to_string(m.multiplicity) + " but " +
                                 std::to_string(vectors.size()) + " vectors");
    }
    if (std::abs(q2 - m.q2()) > 1e-9 * q2) {
        throw std::runtime_error(source + ": q2 is not k^2 + 1");
    }
    m.coefficients.resize(coefficient_count(m.L), static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t v = 0; v < vectors.size(); ++v) {
        m.coefficients.col(static_cast<Eigen::Index>(v)) =
            Eigen::Map<const Eigen::VectorXd>(vectors[v].data(), static_cast<Eigen::Index>(vectors[v].size()));
    }
    return m;
}

Eigenmode read_eigenmode(const std::filesystem::path& path) {
    auto in = open_input(path, "eigenmode file");
    return read_eigenmode(in, path.string());
}

void write_summary_table(std::ostream& out, const std::string& manifold, const std::vector<Eigenmode>& modes) {
    out << "hyperdrum-summary " << kFileSchemaVersion << '\n';
    out << "manifold " << manifold << '\n';
    out << "modes " << modes.size() << '\n';
    for (std::size_t start = 0; start < modes.size(); start += 6) {
        const std::size_t end = std::min(modes.size(), start + 6);
        out << "q2  ";
        for (std::size_t i = start; i < end; ++i) {
            out << ' ' << std::setw(8) << std::fixed << std::setprecision(1) << modes[i].q2();
        }
        out << "\nmult";
        for (std::size_t i = start; i < end; ++i) {
            out << ' ' << std::setw(8) << modes[i].multiplicity;
        }
        out << "\n\n";
    }
    out.unsetf(std::ios::floatfield);
    out << "# index q2 k multiplicity\n";
    for (std::size_t i = 0; i < modes.size(); ++i) {
        out << "mode " << i << ' ' << format_real(modes[i].q2()) << ' ' << format_real(modes[i].k) << ' '
            << modes[i].multiplicity << '\n';
    }
}

void write_report(std::ostream& out, const Report& r) {
    out << "hyperdrum-report " << kFileSchemaVersion << '\n';
    out << "check " << r.check << '\n';
    for (const auto& [k, v] : r.fields) {
        out << k << ' ' << v << '\n';
    }
    out << "pass " << (r.pass ? "true" : "false") << '\n';
}

}  // namespace hyperdrum
