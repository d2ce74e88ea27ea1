#pragma once

// Geometry of a ProfileGrid: arclength frame, the two distinguished sectional
// curvatures K = -psi_ss/psi and L = (1-psi_s^2)/psi^2, scalar curvature,
// extrema bookkeeping, and the curvature positivity checks imposed on
// admissible initial data.
//
// All s-derivatives are taken as (1/phi) d/dx with centered second-order
// stencils. Across the poles psi extends oddly and phi evenly (psi is an odd
// function of the distance to a smooth pole), which keeps the stencils
// second-order at the first interior node.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ricci/profile_grid.hpp"

namespace ricci {

struct ArclengthFrame {
    std::vector<double> s;  // arclength from x = 0, per node
    double s_total = 0.0;   // pole-to-pole distance
};

struct CurvatureField {
    // per-node values; pole entries are even-extrapolated limits
    std::vector<double> K;                // -psi_ss / psi
    std::vector<double> L;                // (1 - psi_s^2) / psi^2
    std::vector<double> R;                // 2nK + n(n-1)L
    std::vector<double> ricci_radial;     // nK
    std::vector<double> ricci_spherical;  // K + (n-1)L
};

struct Extremum {
    double s = 0.0;
    double psi = 0.0;
};

struct ExtremaReport {
    std::vector<Extremum> necks;        // interior local minima of psi
    std::vector<Extremum> bumps;        // interior local maxima of psi
    std::optional<double> s_hat;        // bump closest to the right pole
    std::vector<double> flat_points;    // interior s with |psi_s| < flat_tol
};

struct AssumptionsReport {
    bool l_positive = false;             // (1) L > 0 at all interior nodes
    bool ricci_positive_on_caps = false; // (2) Rc > 0 outside outermost bumps
    bool scalar_positive = false;        // (3) R > 0 everywhere
    bool has_neck = false;
    double cap_left_end_s = 0.0;         // polar cap boundaries actually used
    double cap_right_start_s = 0.0;
};

// ---------------------------------------------------------------------------

inline ArclengthFrame arclength(const ProfileGrid& g) {
    g.require_valid();
    ArclengthFrame f;
    f.s = cumtrapz(g.x, g.phi);
    // shift so that s(0) = 0; x = 0 need not be a node, interpolate linearly
    double s0 = 0.0;
    for (std::size_t i = 1; i < g.nodes(); ++i) {
        if (g.x[i - 1] <= 0.0 && g.x[i] >= 0.0) {
            double w = (0.0 - g.x[i - 1]) / (g.x[i] - g.x[i - 1]);
            s0 = (1.0 - w) * f.s[i - 1] + w * f.s[i];
            break;
        }
    }
    for (double& v : f.s) v -= s0;
    f.s_total = f.s.back() - f.s.front();
    return f;
}

// centered first s-derivative with pole ghosts (odd psi / even phi extension)
inline std::vector<double> d_ds_psi(const ProfileGrid& g) {
    const std::size_t m = g.nodes();
    const double dx = g.dx();
    std::vector<double> out(m);
    auto at = [&](long i) -> double {
        if (i < 0) return g.left_open ? g.psi[0] : -g.psi[-i];
        if (i >= static_cast<long>(m)) return -g.psi[2 * (m - 1) - i];
        return g.psi[i];
    };
    for (std::size_t i = 0; i < m; ++i)
        out[i] = (at(static_cast<long>(i) + 1) - at(static_cast<long>(i) - 1)) /
                 (2.0 * dx * g.phi[i]);
    if (g.left_open && m >= 3) {
        // one-sided second-order at the cut
        out[0] = (-3.0 * g.psi[0] + 4.0 * g.psi[1] - g.psi[2]) / (2.0 * dx * g.phi[0]);
    }
    return out;
}

// compact conservative form of psi_ss = (1/phi) d/dx ( (1/phi) d psi/dx )
inline std::vector<double> d2_ds2_psi(const ProfileGrid& g) {
    const std::size_t m = g.nodes();
    const double dx = g.dx();
    std::vector<double> out(m, 0.0);
    auto psi_at = [&](long i) -> double {
        if (i < 0) return g.left_open ? g.psi[0] : -g.psi[-i];
        if (i >= static_cast<long>(m)) return -g.psi[2 * (m - 1) - i];
        return g.psi[i];
    };
    auto phi_at = [&](long i) -> double {
        if (i < 0) return g.phi[g.left_open ? 0 : -i];
        if (i >= static_cast<long>(m)) return g.phi[2 * (m - 1) - i];
        return g.phi[i];
    };
    for (std::size_t i = 0; i < m; ++i) {
        long li = static_cast<long>(i);
        double phip = 0.5 * (phi_at(li) + phi_at(li + 1));
        double phim = 0.5 * (phi_at(li) + phi_at(li - 1));
        double fluxp = (psi_at(li + 1) - psi_at(li)) / phip;
        double fluxm = (psi_at(li) - psi_at(li - 1)) / phim;
        out[i] = (fluxp - fluxm) / (dx * dx * g.phi[i]);
    }
    if (g.left_open && m >= 4) {
        out[0] = 2.0 * out[1] - out[2];  // linear extrapolation at the cut
    }
    return out;
}

// discrete one-sided psi_s at the poles; smoothness demands -1 at x=+1
// and +1 at x=-1.
inline double pole_slope_right(const ProfileGrid& g, const ArclengthFrame& f) {
    const std::size_t m = g.nodes();
    return (g.psi[m - 1] - g.psi[m - 2]) / (f.s[m - 1] - f.s[m - 2]);
}
inline double pole_slope_left(const ProfileGrid& g, const ArclengthFrame& f) {
    return (g.psi[1] - g.psi[0]) / (f.s[1] - f.s[0]);
}

namespace detail {
// even-in-distance quadratic extrapolation of a curvature quantity to a pole
inline double pole_extrapolate(double v1, double d1, double v2, double d2) {
    double den = d2 * d2 - d1 * d1;
    if (std::fabs(den) < 1e-300) return v1;
    return (v1 * d2 * d2 - v2 * d1 * d1) / den;
}
}  // namespace detail

inline CurvatureField curvatures(const ProfileGrid& g) {
    g.require_valid();
    const std::size_t m = g.nodes();
    ArclengthFrame f = arclength(g);
    std::vector<double> ps = d_ds_psi(g), pss = d2_ds2_psi(g);
    CurvatureField c;
    c.K.assign(m, 0.0);
    c.L.assign(m, 0.0);
    const double psi_floor_eps = 1e-300;
    std::size_t first = g.left_open ? 0 : 1;
    for (std::size_t i = first; i + 1 < m; ++i) {
        if (g.psi[i] < psi_floor_eps)
            throw std::runtime_error("curvatures: singular profile (psi ~ 0 inside)");
        c.K[i] = -pss[i] / g.psi[i];
        c.L[i] = (1.0 - ps[i] * ps[i]) / (g.psi[i] * g.psi[i]);
    }
    // pole limits: K and L coincide at a smooth pole; extrapolate evenly in
    // the distance to the pole.
    if (!g.left_open) {
        double d1 = f.s[1] - f.s[0], d2 = f.s[2] - f.s[0];
        c.K[0] = detail::pole_extrapolate(c.K[1], d1, c.K[2], d2);
        c.L[0] = detail::pole_extrapolate(c.L[1], d1, c.L[2], d2);
    } else {
        c.K[0] = 2.0 * c.K[1] - c.K[2];
        c.L[0] = 2.0 * c.L[1] - c.L[2];
    }
    {
        double d1 = f.s[m - 1] - f.s[m - 2], d2 = f.s[m - 1] - f.s[m - 3];
        c.K[m - 1] = detail::pole_extrapolate(c.K[m - 2], d1, c.K[m - 3], d2);
        c.L[m - 1] = detail::pole_extrapolate(c.L[m - 2], d1, c.L[m - 3], d2);
    }
    c.R.resize(m);
    c.ricci_radial.resize(m);
    c.ricci_spherical.resize(m);
    const double n = g.n;
    for (std::size_t i = 0; i < m; ++i) {
        c.R[i] = 2.0 * n * c.K[i] + n * (n - 1.0) * c.L[i];
        c.ricci_radial[i] = n * c.K[i];
        c.ricci_spherical[i] = c.K[i] + (n - 1.0) * c.L[i];
    }
    return c;
}

// ---------------------------------------------------------------------------
// extrema detection: plateaus of equal psi collapse to their psi-weighted
// centroid; classification needs strictly higher/lower neighbors on both
// sides of the plateau.

inline ExtremaReport detect_extrema(const ProfileGrid& g, const ArclengthFrame& f,
                                    double flat_tol = 1e-3) {
    g.require_valid();
    const std::size_t m = g.nodes();
    ExtremaReport rep;
    const double scale = *std::max_element(g.psi.begin(), g.psi.end());
    const double eq_tol = 1e-13 * std::max(scale, 1e-30);

    std::size_t lo = g.left_open ? 0 : 1;   // first interior index
    std::size_t hi = m - 2;                 // last interior index
    std::size_t i = lo;
    while (i <= hi) {
        std::size_t j = i;
        while (j < hi && std::fabs(g.psi[j + 1] - g.psi[i]) <= eq_tol) ++j;
        // plateau [i..j]; neighbors i-1 and j+1 always exist (poles/cut ends)
        double prev = (i == 0) ? g.psi[0] : g.psi[i - 1];
        double next = g.psi[j + 1];
        bool has_prev = i > 0;
        if (has_prev) {
            double sw = 0.0, w = 0.0;
            for (std::size_t q = i; q <= j; ++q) {
                sw += f.s[q] * g.psi[q];
                w += g.psi[q];
            }
            double s_loc = (w > 0.0) ? sw / w : f.s[(i + j) / 2];
            if (prev < g.psi[i] - eq_tol && next < g.psi[i] - eq_tol)
                rep.bumps.push_back({s_loc, g.psi[i]});
            else if (prev > g.psi[i] + eq_tol && next > g.psi[i] + eq_tol)
                rep.necks.push_back({s_loc, g.psi[i]});
        }
        i = j + 1;
    }
    if (!rep.bumps.empty()) rep.s_hat = rep.bumps.back().s;

    std::vector<double> ps = d_ds_psi(g);
    for (std::size_t q = lo; q <= hi; ++q)
        if (std::fabs(ps[q]) < flat_tol) rep.flat_points.push_back(f.s[q]);
    return rep;
}

// ---------------------------------------------------------------------------

inline AssumptionsReport check_assumptions(const ProfileGrid& g) {
    ArclengthFrame f = arclength(g);
    CurvatureField c = curvatures(g);
    ExtremaReport ex = detect_extrema(g, f);
    const std::size_t m = g.nodes();
    AssumptionsReport rep;
    rep.has_neck = !ex.necks.empty();

    rep.l_positive = true;
    rep.scalar_positive = true;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (c.L[i] <= 0.0) rep.l_positive = false;
        if (c.R[i] <= 0.0) rep.scalar_positive = false;
    }

    // polar caps: everything outside the outermost bumps (the caps are the
    // whole sphere when there is no interior bump)
    double cap_left = ex.bumps.empty() ? f.s.back() : ex.bumps.front().s;
    double cap_right = ex.bumps.empty() ? f.s.front() : ex.bumps.back().s;
    rep.cap_left_end_s = cap_left;
    rep.cap_right_start_s = cap_right;
    rep.ricci_positive_on_caps = true;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        bool in_cap = (f.s[i] <= cap_left) || (f.s[i] >= cap_right);
        if (!in_cap) continue;
        if (c.ricci_radial[i] <= 0.0 || c.ricci_spherical[i] <= 0.0)
            rep.ricci_positive_on_caps = false;
    }
    return rep;
}

}  // namespace ricci
