#pragma once

// Eigenfunctions of the Laplacian on the covering space H^3.
//
// Q_{k l m}(rho, theta, phi) = X^l_k(rho) Y_lm(theta, phi) with eigenvalue
// q^2 = k^2 + 1. X^l_k are the hyperspherical Bessel functions, normalized so
// that X^0_k(rho) = sin(k rho) / sinh(rho); Y_lm are real orthonormal
// spherical harmonics. Coefficient vectors are flattened with
// i = l^2 + l + m (zero-based).

#include "hyperdrum/geometry.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace hyperdrum {

inline constexpr int kMaxMultipole = 64;

inline constexpr int harmonic_index(int l, int m) { return l * l + l + m; }
inline constexpr int coefficient_count(int L) { return (L + 1) * (L + 1); }

/// X^l_k(rho) for l = 0..L, written into out (size L+1).
///
/// Upward recursion in l where every l <= L is in the oscillatory regime
/// (l < k sinh rho); otherwise Miller's downward recursion from well above
/// the turning point, rescaled to the closed forms for l = 0, 1.
void hyper_bessel_table(int L, double k, double rho, std::span<double> out);

std::vector<double> hyper_bessel_table(int L, double k, double rho);

/// Single value X^l_k(rho). Throws std::invalid_argument for l outside
/// [0, kMaxMultipole], k <= 0 or rho < 0.
double hyper_bessel(int l, double k, double rho);

/// Smallest rho with X^l_k(rho) sinh(rho) = threshold, threshold in (0,1).
/// Throws NumericalError if no crossing exists below rho = 50.
double envelope_radius(int l, double k, double threshold);

/// Real orthonormal spherical harmonics for l = 0..L, (L+1)^2 values.
void real_harmonics(int L, double theta, double phi, std::span<double> out);

std::vector<double> real_harmonics(int L, double theta, double phi);

/// Radial and angular tables for one evaluation point.
struct BasisPoint {
    Spherical coords;
    std::vector<double> radial;     // L+1 values
    std::vector<double> harmonics;  // (L+1)^2 values

    BasisPoint(double k, int L, const HPoint& p);
    int L() const { return static_cast<int>(radial.size()) - 1; }
};

/// Q_{k l m}(p) for all (l, m) with l <= L. At the origin only the l = 0
/// entry is nonzero, X^0_k(0) = k.
void evaluate_Q(double k, int L, const HPoint& p, std::span<double> out);

Eigen::VectorXd evaluate_Q(double k, int L, const HPoint& p);

/// Truncated expansion coefficients of a mode at wavenumber k.
struct ModeCoefficients {
    double k = 0.0;
    int L = 0;
    Eigen::VectorXd a;

    double q2() const { return k * k + 1.0; }
};

/// Psi(p) = sum_i a_i Q_i(p).
double evaluate_mode(const ModeCoefficients& c, const HPoint& p);

}  // namespace hyperdrum
