#pragma once

// Initial-data families. Profiles are designed in arclength form
//   psi(s) = R * shape(theta),  theta = pi*(s + S/2)/S,  S = pi*R,
// with phi held constant, which pins the pole slopes psi_s = +-1 exactly
// for every member of the family.

#include <cmath>
#include <stdexcept>
#include <string>

#include "ricci/geometry.hpp"
#include "ricci/profile_grid.hpp"

namespace ricci {

enum class FamilyKind { Dumbbell, PerturbedSphere, CustomTable };

struct InitialFamily {
    FamilyKind kind = FamilyKind::Dumbbell;
    double lambda = 0.0;      // 0 = tight dumbbell ... 1 = round sphere
    double waist = 0.15;      // target neck radius at lambda = 0
    double cap = 1.0;         // target bump radius
    double amplitude = 0.0;   // perturbed-sphere amplitude
    double radius = 1.0;      // perturbed-sphere base radius
    int sharpness = 1;        // dumbbell waist exponent m (>= 1)
    std::string table_path;   // custom table source
};

namespace detail {

// dumbbell shape g(u) = 1 - (1-w) u^{2m}, u = sin(theta); the bump of
// u*g(u) sits at u* = ((2m+1)(1-w))^{-1/2m} when that is < 1.
inline double dumbbell_bump_rel(double w, int m) {
    double a = (2.0 * m + 1.0) * (1.0 - w);
    if (a <= 1.0) return 1.0;  // no interior bump; max at the equator
    double ustar = std::pow(1.0 / a, 1.0 / (2.0 * m));
    return ustar * (2.0 * m) / (2.0 * m + 1.0);
}

// solve for w so that waist/bump matches the requested ratio
inline double dumbbell_w_for_ratio(double ratio, int m) {
    if (ratio >= 1.0) return 1.0;
    double lo = 1e-6, hi = 1.0 - 1e-12;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double r = mid / dumbbell_bump_rel(mid, m);
        (r < ratio ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline ProfileGrid make_initial(const InitialFamily& fam, int resolution, int n) {
    if (resolution < 100)
        throw std::invalid_argument("make_initial: resolution must be >= 100");
    if (n < 2) throw std::invalid_argument("make_initial: need n >= 2");
    if (fam.kind == FamilyKind::CustomTable) {
        ProfileGrid g = load_profile(fam.table_path);
        if (g.n != n) throw std::invalid_argument("custom table has different n");
        return g;
    }

    ProfileGrid g;
    g.n = n;
    g.t = 0.0;
    const std::size_t m = static_cast<std::size_t>(resolution) + 1;
    g.x.resize(m);
    g.phi.resize(m);
    g.psi.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        g.x[i] = -1.0 + 2.0 * static_cast<double>(i) / resolution;
    g.x.front() = -1.0;
    g.x.back() = 1.0;

    double R = 1.0;
    double w = 1.0;
    int msharp = std::max(1, fam.sharpness);
    if (fam.kind == FamilyKind::Dumbbell) {
        if (!(fam.waist > 0.0) || !(fam.cap > 0.0) || fam.waist > fam.cap)
            throw std::invalid_argument("dumbbell: need 0 < waist <= cap");
        if (fam.lambda < 0.0 || fam.lambda > 1.0)
            throw std::invalid_argument("dumbbell: lambda must lie in [0,1]");
        double w0 = detail::dumbbell_w_for_ratio(fam.waist / fam.cap, msharp);
        w = w0 + fam.lambda * (1.0 - w0);
        R = fam.cap / detail::dumbbell_bump_rel(w, msharp);
    } else {
        R = fam.radius;
        if (!(R > 0.0)) throw std::invalid_argument("perturbed sphere: radius <= 0");
    }

    const double S = M_PI * R;  // pole-to-pole distance; phi = S/2 constant
    for (std::size_t i = 0; i < m; ++i) {
        g.phi[i] = 0.5 * S;
        double theta = 0.5 * M_PI * (g.x[i] + 1.0);
        double u = std::sin(theta);
        double shape;
        if (fam.kind == FamilyKind::Dumbbell) {
            shape = 1.0 - (1.0 - w) * std::pow(u, 2 * msharp);
        } else {
            shape = 1.0 + fam.amplitude * u * u;
        }
        g.psi[i] = R * u * shape;
    }
    g.psi.front() = 0.0;
    g.psi.back() = 0.0;

    std::string why;
    if (!g.valid(&why))
        throw std::invalid_argument("make_initial: family parameters produce an "
                                    "invalid profile: " + why);
    return g;
}

}  // namespace ricci
