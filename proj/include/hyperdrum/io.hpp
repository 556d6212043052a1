#pragma once

// Text formats written and read by the command-line tool. Every file starts
// with a "<kind> <version>" line (prefixed by "# " in CSV files); reals are
// printed with 17 significant digits.

#include "hyperdrum/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hyperdrum {

inline constexpr int kFileSchemaVersion = 1;

/// %.17g
std::string format_real(double x);

/// "k_lo=1 k_hi=10 ..." covering every ScanConfig field except the thread
/// count, which never changes results, and back. Unknown keys are rejected;
/// missing keys keep their defaults.
std::string config_to_string(const ScanConfig& cfg);
ScanConfig config_from_string(const std::string& text);

struct ScanFile {
    std::string manifold;
    ScanConfig config;
    std::vector<ScanPoint> points;  // sigma reconstructed as sqrt(chi2)
};

/// Header comment lines, then `k,chi2_1,...,chi2_n,L,M,N,rho_min,rho_max`.
void write_scan_csv(std::ostream& out, const std::string& manifold, const ScanConfig& cfg,
                    const std::vector<ScanPoint>& points);
ScanFile read_scan_csv(std::istream& in, const std::string& source = "<stream>");
ScanFile read_scan_csv(const std::filesystem::path& path);

/// Companion file holding the segment-overlap evaluations: scan.csv -> scan.overlap.csv.
std::filesystem::path overlap_path(const std::filesystem::path& scan_csv);

/// hyperdrum-eigenmode record: key lines, then "vector <i>" blocks of
/// "l m a" lines.
void write_eigenmode(std::ostream& out, const Eigenmode& mode);
Eigenmode read_eigenmode(std::istream& in, const std::string& source = "<stream>");
Eigenmode read_eigenmode(const std::filesystem::path& path);

/// Eigenvalues in rows of six, q2 row above a multiplicity row.
void write_summary_table(std::ostream& out, const std::string& manifold, const std::vector<Eigenmode>& modes);

/// Key/value report: "hyperdrum-report 1", then "key value" lines.
struct Report {
    std::string check;
    std::vector<std::pair<std::string, std::string>> fields;
    bool pass = false;

    void add(const std::string& key, const std::string& value) { fields.emplace_back(key, value); }
    void add(const std::string& key, double value) { fields.emplace_back(key, format_real(value)); }
};
void write_report(std::ostream& out, const Report& r);

}  // namespace hyperdrum
