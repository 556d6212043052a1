#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance run.

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace hyperdrum::testing {

// Oracle 1: integrate u'' + (k^2 - l(l+1)/sinh^2 rho) u = 0 with u = sinh(rho) X,
// started from the two-term Frobenius series at tiny rho. The leading
// coefficient sqrt(prod_{n<=l}(n^2+k^2)) / (2l+1)!! is the small-rho limit of
// the closed-form derivative expression, independent of the recursion.
struct OdeSample {
    double x;      // X^l_k(rho)
    double scale;  // local amplitude used as the error denominator
};

inline std::vector<OdeSample> ode_oracle(int l, double k, const std::vector<double>& rhos) {
    using State = std::array<double, 2>;
    namespace odeint = boost::numeric::odeint;
    const double ll = static_cast<double>(l) * (l + 1);
    double log_c = 0.0;
    for (int n = 0; n <= l; ++n) {
        log_c += 0.5 * std::log(static_cast<double>(n) * n + k * k);
    }
    for (int n = 1; n <= 2 * l + 1; n += 2) {
        log_c -= std::log(static_cast<double>(n));
    }
    const double a2 = -(k * k + ll / 3.0) / (4.0 * l + 6.0);
    const double r0 = 1e-4;
    // Integrate u / u(r0) to stay in range; the true scale is restored below.
    const double u0 = 1.0 + a2 * r0 * r0;
    const double log_u0 = log_c + (l + 1) * std::log(r0) + std::log(u0);
    State y = {1.0, ((l + 1) / r0 + a2 * (l + 3) * r0) / u0};
    auto rhs = [&](const State& s, State& ds, double rho) {
        const double sh = std::sinh(rho);
        ds[0] = s[1];
        ds[1] = -(k * k - ll / (sh * sh)) * s[0];
    };
    std::vector<OdeSample> out;
    auto stepper = odeint::make_controlled(0.0, 1e-14, odeint::runge_kutta_fehlberg78<State>());
    double t = r0;
    for (double target : rhos) {
        odeint::integrate_adaptive(stepper, rhs, y, t, target, 1e-6);
        t = target;
        const double sh = std::sinh(target);
        const double f = std::exp(log_u0);
        const double x = f * y[0] / sh;
        double scale = std::abs(x);
        const double kappa2 = k * k - ll / (sh * sh);
        if (kappa2 > 0.0) {
            const double kk = std::max(kappa2, 0.25 * k * k);
            scale = std::max(scale, f * std::sqrt(y[0] * y[0] + y[1] * y[1] / kk) / sh);
        }
        out.push_back({x, scale});
    }
    return out;
}

}  // namespace hyperdrum::testing
