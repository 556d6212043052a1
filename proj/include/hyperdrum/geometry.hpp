#pragma once

// Hyperbolic 3-space in the Minkowski (hyperboloid) model.
//
// Points live on x0^2 - x1^2 - x2^2 - x3^2 = 1, x0 >= 1. Isometries are
// orientation-preserving, orthochronous elements of SO(3,1) acting by
// matrix-vector multiplication. Distances are in units of the curvature
// radius.
//
// Spherical chart: x0 = cosh(rho), (x1, x2, x3) = sinh(rho) *
// (sin(theta) cos(phi), sin(theta) sin(phi), cos(theta)).

#include <Eigen/Dense>

#include "hyperdrum/errors.hpp"

#include <array>
#include <cmath>
#include <string>

namespace hyperdrum {

struct Spherical {
    double rho = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

using Vec3 = std::array<double, 3>;

/// Minkowski bilinear form with signature (+,-,-,-).
inline double minkowski_dot(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    return a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
}

class HPoint {
public:
    /// The basepoint (1, 0, 0, 0).
    HPoint() : x_(1.0, 0.0, 0.0, 0.0) {}

    /// Builds a point from ambient coordinates and projects it back onto the
    /// upper sheet of the hyperboloid. Throws if the vector is not timelike
    /// and future-pointing.
    static HPoint from_ambient(const Eigen::Vector4d& x);

    static HPoint origin() { return HPoint(); }

    const Eigen::Vector4d& ambient() const { return x_; }
    double operator[](int i) const { return x_[i]; }

    /// Geodesic distance from the origin, arccosh(x0).
    double radius() const;

    /// Max deviation of the hyperboloid constraint, |<x,x> - 1|.
    double constraint_error() const { return std::abs(minkowski_dot(x_, x_) - 1.0); }

private:
    explicit HPoint(const Eigen::Vector4d& x) : x_(x) {}
    Eigen::Vector4d x_;
};

HPoint from_spherical(double rho, double theta, double phi);

/// Inverse chart. theta and phi are returned as 0 at the origin.
Spherical to_spherical(const HPoint& p);

/// Klein (projective) ball coordinates x_i / x0.
Vec3 to_klein(const HPoint& p);

/// Poincare ball coordinates x_i / (1 + x0).
Vec3 to_poincare(const HPoint& p);

/// Inverse of to_poincare; requires |v| < 1.
HPoint from_poincare(const Vec3& v);

/// Geodesic distance. Uses a difference formula for nearby points where
/// arccosh of the inner product loses precision.
double distance(const HPoint& p, const HPoint& q);

/// Point at fraction t in [0,1] along the geodesic from p to q.
HPoint geodesic_point(const HPoint& p, const HPoint& q, double t);

class Isometry {
public:
    Isometry() : g_(Eigen::Matrix4d::Identity()) {}

    /// Validates g^T eta g = eta to `tol`, g00 >= 1 and det g = +1, then
    /// re-orthonormalizes the columns in the Minkowski metric.
    static Isometry from_matrix(const Eigen::Matrix4d& g, double tol = 1e-10);

    /// Same checks as from_matrix; returns a message naming the violated
    /// invariant, or an empty string.
    static std::string check(const Eigen::Matrix4d& g, double tol);

    static Isometry identity() { return Isometry(); }

    /// Rotation about the origin.
    static Isometry rotation(const Eigen::Matrix3d& r);

    /// Translation by `length` along the x_axis direction (1, 2 or 3).
    static Isometry boost(int axis, double length);

    const Eigen::Matrix4d& matrix() const { return g_; }
    double operator()(int i, int j) const { return g_(i, j); }

    /// Translation length of the origin, arccosh(g00).
    double displacement() const;

    /// max |g^T eta g - eta|.
    double invariant_error() const;

private:
    explicit Isometry(const Eigen::Matrix4d& g) : g_(g) {}
    friend Isometry compose(const Isometry&, const Isometry&);
    friend Isometry inverse(const Isometry&);

    Eigen::Matrix4d g_;
};

HPoint apply(const Isometry& g, const HPoint& p);

/// Matrix product g*h (apply h first), followed by Minkowski Gram-Schmidt.
Isometry compose(const Isometry& g, const Isometry& h);

/// eta g^T eta, exact for SO(3,1).
Isometry inverse(const Isometry& g);

/// Modified Gram-Schmidt on the columns of g with respect to
/// eta = diag(1,-1,-1,-1). Column 0 is normalized timelike, columns 1..3
/// spacelike.
Eigen::Matrix4d minkowski_orthonormalize(const Eigen::Matrix4d& g);

}  // namespace hyperdrum
