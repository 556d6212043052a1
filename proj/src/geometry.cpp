#include "hyperdrum/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hyperdrum {

namespace {

const Eigen::Matrix4d& eta() {
    static const Eigen::Matrix4d m = Eigen::Vector4d(1.0, -1.0, -1.0, -1.0).asDiagonal();
    return m;
}

}  // namespace

HPoint HPoint::from_ambient(const Eigen::Vector4d& x) {
    const double norm2 = minkowski_dot(x, x);
    if (!(norm2 > 0.0) || !(x[0] > 0.0)) {
        throw GeometryError("ambient vector is not future timelike");
    }
    Eigen::Vector4d y = x / std::sqrt(norm2);
    // Spatial part is trusted; x0 is recomputed so the constraint is exact.
    y[0] = std::sqrt(1.0 + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]);
    return HPoint(y);
}

double HPoint::radius() const {
    const double s = std::sqrt(x_[1] * x_[1] + x_[2] * x_[2] + x_[3] * x_[3]);
    return std::asinh(s);
}

HPoint from_spherical(double rho, double theta, double phi) {
    const double s = std::sinh(rho);
    Eigen::Vector4d x(std::cosh(rho), s * std::sin(theta) * std::cos(phi),
                      s * std::sin(theta) * std::sin(phi), s * std::cos(theta));
    return HPoint::from_ambient(x);
}

Spherical to_spherical(const HPoint& p) {
    const auto& x = p.ambient();
    const double s = std::sqrt(x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    Spherical out;
    out.rho = std::asinh(s);
    if (s == 0.0) {
        return out;
    }
    out.theta = std::acos(std::clamp(x[3] / s, -1.0, 1.0));
    double phi = std::atan2(x[2], x[1]);
    if (phi < 0.0) {
        phi += 2.0 * std::numbers::pi;
    }
    out.phi = phi;
    return out;
}

Vec3 to_klein(const HPoint& p) {
    const auto& x = p.ambient();
    return {x[1] / x[0], x[2] / x[0], x[3] / x[0]};
}

Vec3 to_poincare(const HPoint& p) {
    const auto& x = p.ambient();
    const double d = 1.0 + x[0];
    return {x[1] / d, x[2] / d, x[3] / d};
}

HPoint from_poincare(const Vec3& v) {
    const double r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if (!(r2 < 1.0)) {
        throw GeometryError("Poincare coordinates outside the unit ball");
    }
    const double f = 1.0 / (1.0 - r2);
    return HPoint::from_ambient(
        Eigen::Vector4d((1.0 + r2) * f, 2.0 * v[0] * f, 2.0 * v[1] * f, 2.0 * v[2] * f));
}

double distance(const HPoint& p, const HPoint& q) {
    const double c = minkowski_dot(p.ambient(), q.ambient());
    // rounding in c grows with the coordinate magnitudes
    if (c < 1.0 - 1e-9 * std::max(1.0, p[0] * q[0])) {
        throw GeometryError("Minkowski inner product below 1: point off the hyperboloid");
    }
    if (c < 2.0) {
        // cosh d - 1 = -<p-q, p-q>/2, which avoids the arccosh cancellation.
        const Eigen::Vector4d dx = p.ambient() - q.ambient();
        const double chord2 = std::max(0.0, -minkowski_dot(dx, dx));
        return 2.0 * std::asinh(0.5 * std::sqrt(chord2));
    }
    return std::acosh(c);
}

HPoint geodesic_point(const HPoint& p, const HPoint& q, double t) {
    const double d = distance(p, q);
    if (d == 0.0) {
        return p;
    }
    const double s = std::sinh(d);
    const Eigen::Vector4d x =
        (std::sinh((1.0 - t) * d) / s) * p.ambient() + (std::sinh(t * d) / s) * q.ambient();
    return HPoint::from_ambient(x);
}

Eigen::Matrix4d minkowski_orthonormalize(const Eigen::Matrix4d& g) {
    Eigen::Matrix4d out = g;
    const std::array<double, 4> sign = {1.0, -1.0, -1.0, -1.0};
    for (int j = 0; j < 4; ++j) {
        Eigen::Vector4d c = out.col(j);
        for (int i = 0; i < j; ++i) {
            const Eigen::Vector4d e = out.col(i);
            // eta-projection onto an eta-unit vector of norm sign[i]
            c -= (minkowski_dot(c, e) * sign[i]) * e;
        }
        const double n2 = minkowski_dot(c, c) * sign[j];
        if (!(n2 > 0.0)) {
            throw GeometryError("degenerate column during Minkowski Gram-Schmidt");
        }
        out.col(j) = c / std::sqrt(n2);
    }
    return out;
}

std::string Isometry::check(const Eigen::Matrix4d& g, double tol) {
    if (!g.allFinite()) {
        return "non-finite entry";
    }
    const double err = (g.transpose() * eta() * g - eta()).cwiseAbs().maxCoeff();
    if (err > tol) {
        std::ostringstream os;
        os << "not in O(3,1): |g^T eta g - eta| = " << err;
        return os.str();
    }
    if (g(0, 0) < 1.0 - tol) {
        return "not orthochronous: g00 < 1";
    }
    if (g.determinant() < 0.0) {
        return "orientation reversing: det g = -1";
    }
    return {};
}

Isometry Isometry::from_matrix(const Eigen::Matrix4d& g, double tol) {
    const std::string why = check(g, tol);
    if (!why.empty()) {
        throw GeometryError(why);
    }
    return Isometry(minkowski_orthonormalize(g));
}

Isometry Isometry::rotation(const Eigen::Matrix3d& r) {
    Eigen::Matrix4d g = Eigen::Matrix4d::Identity();
    g.block<3, 3>(1, 1) = r;
    return from_matrix(g, 1e-10);
}

Isometry Isometry::boost(int axis, double length) {
    if (axis < 1 || axis > 3) {
        throw GeometryError("boost axis must be 1, 2 or 3");
    }
    Eigen::Matrix4d g = Eigen::Matrix4d::Identity();
    g(0, 0) = g(axis, axis) = std::cosh(length);
    g(0, axis) = g(axis, 0) = std::sinh(length);
    return Isometry(g);
}

double Isometry::displacement() const {
    return std::acosh(std::max(1.0, g_(0, 0)));
}

double Isometry::invariant_error() const {
    return (g_.transpose() * eta() * g_ - eta()).cwiseAbs().maxCoeff();
}

HPoint apply(const Isometry& g, const HPoint& p) {
    return HPoint::from_ambient(g.matrix() * p.ambient());
}

Isometry compose(const Isometry& g, const Isometry& h) {
    return Isometry(minkowski_orthonormalize(g.matrix() * h.matrix()));
}

Isometry inverse(const Isometry& g) {
    return Isometry(eta() * g.matrix().transpose() * eta());
}

}  // namespace hyperdrum
