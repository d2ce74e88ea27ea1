#pragma once

// Steady-soliton profile machinery. The profile function B solves the ODE
// F_r[B] = 0 with B(0) = 1, B(inf) = 0, where
//   F_r[z] = r^{-2} { r^2 z z_rr - (1/2)(r z_r)^2 + (n-1-z) r z_r
//                     + 2(n-1)(1-z) z }.
// The solver launches from the interior series (coordinate singularity at
// r = 0), integrates outward with an embedded RK45, measures c2 = lim r^2 z,
// and rescales the radial table so c2 = 1. Uniqueness up to scaling makes
// one integration sufficient.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ricci/numerics.hpp"

namespace ricci {

inline double F_apply(double z, double z_r, double z_rr, double r, int n) {
    if (!(r > 0.0)) throw std::invalid_argument("F_apply: need r > 0");
    double rz = r * z_r;
    return (r * r * z * z_rr - 0.5 * rz * rz + (n - 1.0 - z) * rz +
            2.0 * (n - 1.0) * (1.0 - z) * z) /
           (r * r);
}

// interior expansion  B = 1 + b2 r^2 + n/(n+3) b2^2 r^4
//                        + n(n-1)/((n+3)(n+5)) b2^3 r^6 + ...
inline double series_inner(int n, double b2, double r, double* deriv = nullptr) {
    double c2 = b2;
    double c4 = n / (n + 3.0) * b2 * b2;
    double c6 = n * (n - 1.0) / ((n + 3.0) * (n + 5.0)) * b2 * b2 * b2;
    double r2 = r * r;
    double t1 = c2 * r2, t2 = c4 * r2 * r2, t3 = c6 * r2 * r2 * r2;
    if (std::fabs(t1) > 0 && (std::fabs(t2) >= std::fabs(t1) ||
                              (std::fabs(t2) > 0 && std::fabs(t3) >= std::fabs(t2))))
        throw std::domain_error("series_inner: r outside series validity");
    if (deriv) *deriv = 2.0 * c2 * r + 4.0 * c4 * r * r2 + 6.0 * c6 * r * r2 * r2;
    return 1.0 + t1 + t2 + t3;
}

// far-field expansion  B = c2 r^-2 + (4-n)/(n-1) c2^2 r^-4
//                         + (n-4)(n-7)/(n-1)^2 c2^3 r^-6 + ...
inline double series_outer(int n, double c2, double r, double* deriv = nullptr) {
    double a4 = (4.0 - n) / (n - 1.0) * c2 * c2;
    double a6 = (n - 4.0) * (n - 7.0) / ((n - 1.0) * (n - 1.0)) * c2 * c2 * c2;
    double u = 1.0 / (r * r);
    double t1 = c2 * u, t2 = a4 * u * u, t3 = a6 * u * u * u;
    if (std::fabs(t2) >= std::fabs(t1) || (std::fabs(t2) > 0 && std::fabs(t3) > std::fabs(t2)))
        throw std::domain_error("series_outer: r outside series validity");
    if (deriv)
        *deriv = -2.0 * c2 / (r * r * r) - 4.0 * a4 / std::pow(r, 5) -
                 6.0 * a6 / std::pow(r, 7);
    return t1 + t2 + t3;
}

struct BryantProfile {
    int n = 2;
    std::vector<double> r_table;  // increasing, normalized radii
    std::vector<double> B_table;  // values in (0,1]
    double b2_used = -1.0;        // launch coefficient before normalization
    double c2_measured = 0.0;     // far-field coefficient before normalization
    double b2_norm = 0.0;         // interior coefficient after normalization
    double switch_in = 0.0;       // series takes over below this radius
    double switch_out = 0.0;      // far-field series takes over above
    std::shared_ptr<PchipInterpolant> interp;  // built over the table

    void build_interpolant() {
        interp = std::make_shared<PchipInterpolant>(r_table, B_table);
    }
};

inline double bryant_eval(const BryantProfile& p, double r) {
    if (r < 0.0) throw std::invalid_argument("bryant_eval: need r >= 0");
    if (r < p.switch_in) return series_inner(p.n, p.b2_norm, r);
    if (r > p.switch_out) return series_outer(p.n, 1.0, r);
    return (*p.interp)(r);
}

// ---------------------------------------------------------------------------

namespace detail {

// quadratic extrapolation to u = 0 through (u_i, c_i), i = 0..2
inline double extrapolate_quadratic_to_zero(const double u[3], const double c[3]) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        double w = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) w *= (0.0 - u[j]) / (u[i] - u[j]);
        acc += w * c[i];
    }
    return acc;
}

}  // namespace detail

inline BryantProfile solve_bryant(int n, double tol = 1e-12, double b2 = -1.0,
                                  double r_launch = 0.05, double r_max = 100.0) {
    if (n < 2) throw std::invalid_argument("solve_bryant: need n >= 2");
    if (!(b2 < 0.0)) throw std::invalid_argument("solve_bryant: need b2 < 0");

    auto rhs = [n](double r, const std::vector<double>& y, std::vector<double>& dy) {
        double z = y[0], zr = y[1];
        double rz = r * zr;
        double num = 0.5 * rz * rz - (n - 1.0 - z) * rz - 2.0 * (n - 1.0) * (1.0 - z) * z;
        dy[0] = zr;
        dy[1] = num / (r * r * z);
    };

    std::vector<double> y(2);
    double zr0;
    y[0] = series_inner(n, b2, r_launch, &zr0);
    y[1] = zr0;

    // output grid: dense uniform core plus logarithmic far field
    std::vector<double> grid;
    for (double r = r_launch; r < 20.0 - 1e-12; r += 0.005) grid.push_back(r);
    grid.push_back(20.0);
    {
        int nlog = 240;
        double lr0 = std::log(20.0), lr1 = std::log(r_max);
        for (int i = 1; i <= nlog; ++i)
            grid.push_back(std::exp(lr0 + (lr1 - lr0) * i / nlog));
    }

    OdeOptions opt;
    opt.rel_tol = std::min(tol, 1e-10);
    opt.abs_tol = opt.rel_tol * 1e-2;
    opt.h_init = 1e-4;
    opt.h_max = 0.25;

    std::vector<double> rt, zt;
    rt.reserve(grid.size());
    zt.reserve(grid.size());
    rt.push_back(r_launch);
    zt.push_back(y[0]);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        integrate_rk45(rhs, y, grid[i], grid[i + 1], opt,
                       [](double, const std::vector<double>&) {});
        if (!(y[0] > 0.0) || !(y[0] < 1.0))
            throw std::runtime_error(
                "solve_bryant: z left (0,1) during integration (launch or step "
                "failure)");
        rt.push_back(grid[i + 1]);
        zt.push_back(y[0]);
    }

    // far-field coefficient from r^2 z at (roughly) octave-spaced radii;
    // the abscissae are taken from the actual grid nodes
    auto sample_at = [&](double rq, double& u_out, double& c_out) {
        auto it = std::lower_bound(rt.begin(), rt.end(), rq);
        std::size_t i = static_cast<std::size_t>(it - rt.begin());
        if (i >= rt.size()) i = rt.size() - 1;
        u_out = 1.0 / (rt[i] * rt[i]);
        c_out = zt[i] * rt[i] * rt[i];
    };
    double u[3], c[3], u2[3], c2b[3];
    sample_at(25.0, u[0], c[0]);
    sample_at(50.0, u[1], c[1]);
    sample_at(r_max, u[2], c[2]);
    double c2 = detail::extrapolate_quadratic_to_zero(u, c);
    sample_at(12.5, u2[0], c2b[0]);
    u2[1] = u[0];
    c2b[1] = c[0];
    u2[2] = u[1];
    c2b[2] = c[1];
    double c2_check = detail::extrapolate_quadratic_to_zero(u2, c2b);
    if (!(c2 > 0.0) || std::fabs(c2 - c2_check) / c2 > 1e-7)
        throw std::runtime_error("solve_bryant: r^2 z did not stabilize (r_max too small)");

    BryantProfile prof;
    prof.n = n;
    prof.b2_used = b2;
    prof.c2_measured = c2;
    double scale = std::sqrt(c2);  // r -> r/scale gives c2 = 1
    prof.b2_norm = b2 * c2;
    prof.r_table.resize(rt.size());
    prof.B_table = zt;
    for (std::size_t i = 0; i < rt.size(); ++i) prof.r_table[i] = rt[i] / scale;
    prof.switch_in = prof.r_table.front();
    prof.switch_out = 0.9 * prof.r_table.back();
    prof.build_interpolant();
    return prof;
}

// ---------------------------------------------------------------------------
// text persistence so downstream runs can load without re-solving

inline void save_bryant(const BryantProfile& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[128];
    out << "# bryant-profile v1\n";
    out << "n=" << p.n << "\n";
    std::snprintf(buf, sizeof(buf), "b2_used=%.17g\n", p.b2_used);
    out << buf;
    std::snprintf(buf, sizeof(buf), "c2_measured=%.17g\n", p.c2_measured);
    out << buf;
    std::snprintf(buf, sizeof(buf), "b2_norm=%.17g\n", p.b2_norm);
    out << buf;
    std::snprintf(buf, sizeof(buf), "switch_in=%.17g\n", p.switch_in);
    out << buf;
    std::snprintf(buf, sizeof(buf), "switch_out=%.17g\n", p.switch_out);
    out << buf;
    out << "rows=" << p.r_table.size() << "\n";
    for (std::size_t i = 0; i < p.r_table.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p.r_table[i], p.B_table[i]);
        out << buf;
    }
}

inline BryantProfile load_bryant(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# bryant-profile v1", 0) != 0)
        throw std::runtime_error("bryant table: bad header");
    BryantProfile p;
    long rows = -1;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) break;
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "n") p.n = std::stoi(val);
        else if (key == "b2_used") p.b2_used = std::stod(val);
        else if (key == "c2_measured") p.c2_measured = std::stod(val);
        else if (key == "b2_norm") p.b2_norm = std::stod(val);
        else if (key == "switch_in") p.switch_in = std::stod(val);
        else if (key == "switch_out") p.switch_out = std::stod(val);
        else if (key == "rows") rows = std::stol(val);
        else throw std::runtime_error("bryant table: unknown key " + key);
    }
    do {
        if (line.empty() || line.find('=') != std::string::npos) continue;
        std::istringstream row(line);
        double r, B;
        if (!(row >> r >> B)) throw std::runtime_error("bryant table: bad row");
        p.r_table.push_back(r);
        p.B_table.push_back(B);
    } while (std::getline(in, line));
    if (rows > 0 && static_cast<long>(p.r_table.size()) != rows)
        throw std::runtime_error("bryant table: row count mismatch");
    p.build_interpolant();
    return p;
}

}  // namespace ricci
