#pragma once

// Small numerical building blocks shared by the flow solver and the
// asymptotic analysis: monotone cubic interpolation, adaptive quadrature,
// an embedded Runge-Kutta integrator, linear fits, and smooth cutoffs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ricci {

inline bool is_finite(double x) { return std::isfinite(x); }

// ---------------------------------------------------------------------------
// cumulative trapezoid: out[i] = integral of y dx from x[0] to x[i]
inline std::vector<double> cumtrapz(const std::vector<double>& x,
                                    const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("cumtrapz: need matching arrays, size >= 2");
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return out;
}

inline double trapz(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return acc;
}

// ---------------------------------------------------------------------------
// adaptive Simpson quadrature
namespace detail {
inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb, double whole,
                          double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-12, int max_depth = 40) {
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// ---------------------------------------------------------------------------
// monotone piecewise-cubic interpolant (Fritsch-Carlson slopes).
// Used wherever profile data must be resampled without overshoot.
class PchipInterpolant {
public:
    PchipInterpolant() = default;
    PchipInterpolant(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n)
            throw std::invalid_argument("pchip: need >= 2 matching nodes");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw std::invalid_argument("pchip: abscissae must increase");
        d_.assign(n, 0.0);
        std::vector<double> h(n - 1), del(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            del[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        if (n == 2) {
            d_[0] = d_[1] = del[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (del[i - 1] * del[i] <= 0.0) {
                d_[i] = 0.0;
            } else {
                double w1 = 2.0 * h[i] + h[i - 1];
                double w2 = h[i] + 2.0 * h[i - 1];
                d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
            }
        }
        d_[0] = end_slope(h[0], h[1], del[0], del[1]);
        d_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    }

    double xmin() const { return x_.front(); }
    double xmax() const { return x_.back(); }

    double operator()(double x) const {
        const std::size_t i = find(x);
        double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
    }

    double derivative(double x) const {
        const std::size_t i = find(x);
        double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        double t2 = t * t;
        double dh00 = (6 * t2 - 6 * t) / h, dh10 = 3 * t2 - 4 * t + 1;
        double dh01 = (-6 * t2 + 6 * t) / h, dh11 = 3 * t2 - 2 * t;
        return dh00 * y_[i] + dh10 * d_[i] + dh01 * y_[i + 1] + dh11 * d_[i + 1];
    }

private:
    static double end_slope(double h0, double h1, double del0, double del1) {
        double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if (d * del0 <= 0.0) return 0.0;
        if (del0 * del1 < 0.0 && std::fabs(d) > 3.0 * std::fabs(del0))
            return 3.0 * del0;
        return d;
    }
    std::size_t find(double x) const {
        if (x < x_.front() || x > x_.back())
            throw std::domain_error("pchip: query outside data range");
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - x_.begin());
        if (i > 0) --i;
        if (i + 1 >= x_.size()) i = x_.size() - 2;
        return i;
    }
    std::vector<double> x_, y_, d_;
};

// ---------------------------------------------------------------------------
// embedded Cash-Karp RK45 with step-size control, for small autonomous-in-r
// ODE systems (the soliton profile equation).
struct OdeOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double h_init = 1e-4;
    double h_min = 1e-14;
    double h_max = 1.0;
    std::size_t max_steps = 20'000'000;
};

// Integrates y' = f(r, y) from r0 to r1, invoking observe(r, y) after each
// accepted step (and at r0). Dense output is not needed by the callers.
template <typename Rhs, typename Observer>
void integrate_rk45(Rhs&& f, std::vector<double>& y, double r0, double r1,
                    const OdeOptions& opt, Observer&& observe) {
    static const double a2 = 1.0 / 5, a3 = 3.0 / 10, a4 = 3.0 / 5, a5 = 1.0,
                        a6 = 7.0 / 8;
    static const double b21 = 1.0 / 5;
    static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
    static const double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
    static const double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27,
                        b54 = 35.0 / 27;
    static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512,
                        b63 = 575.0 / 13824, b64 = 44275.0 / 110592,
                        b65 = 253.0 / 4096;
    static const double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594,
                        c6 = 512.0 / 1771;
    static const double d1 = c1 - 2825.0 / 27648, d3 = c3 - 18575.0 / 48384,
                        d4 = c4 - 13525.0 / 55296, d5 = -277.0 / 14336,
                        d6 = c6 - 1.0 / 4;

    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), yt(n), yn(n);
    double r = r0;
    double h = std::min(opt.h_init, r1 - r0);
    observe(r, y);
    std::size_t steps = 0;
    while (r < r1) {
        if (++steps > opt.max_steps)
            throw std::runtime_error("integrate_rk45: step limit exceeded");
        if (r + h > r1) h = r1 - r;
        f(r, y, k1);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * b21 * k1[i];
        f(r + a2 * h, yt, k2);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (b31 * k1[i] + b32 * k2[i]);
        f(r + a3 * h, yt, k3);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (b41 * k1[i] + b42 * k2[i] + b43 * k3[i]);
        f(r + a4 * h, yt, k4);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (b51 * k1[i] + b52 * k2[i] + b53 * k3[i] + b54 * k4[i]);
        f(r + a5 * h, yt, k5);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (b61 * k1[i] + b62 * k2[i] + b63 * k3[i] +
                                b64 * k4[i] + b65 * k5[i]);
        f(r + a6 * h, yt, k6);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            yn[i] = y[i] + h * (c1 * k1[i] + c3 * k3[i] + c4 * k4[i] + c6 * k6[i]);
            double e = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                            d6 * k6[i]);
            double sc = opt.abs_tol + opt.rel_tol * std::max(std::fabs(y[i]),
                                                             std::fabs(yn[i]));
            err = std::max(err, std::fabs(e) / sc);
        }
        if (err <= 1.0) {
            r += h;
            y = yn;
            observe(r, y);
        }
        double fac = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        fac = std::clamp(fac, 0.2, 5.0);
        h = std::min(h * fac, opt.h_max);
        if (h < opt.h_min)
            throw std::runtime_error("integrate_rk45: step size underflow");
    }
}

// ---------------------------------------------------------------------------
// least-squares line y = a*x + b
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need >= 2 matching points");
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double det = n * sxx - sx * sx;
    if (std::fabs(det) < 1e-300) throw std::runtime_error("fit_line: degenerate");
    LineFit out;
    out.slope = (n * sxy - sx * sy) / det;
    out.intercept = (sy * sxx - sx * sxy) / det;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (out.slope * x[i] + out.intercept);
        ss += r * r;
    }
    out.rms_residual = std::sqrt(ss / n);
    return out;
}

// golden-section minimizer for smooth 1-d objectives
inline double minimize_golden(const std::function<double(double)>& f, double lo,
                              double hi, double tol = 1e-10, int max_iter = 200) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > tol * (1.0 + std::fabs(a)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// C-infinity cutoff: 0 for u <= 0, 1 for u >= 1, smooth in between.
inline double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    double fa = std::exp(-1.0 / u);
    double fb = std::exp(-1.0 / (1.0 - u));
    return fa / (fa + fb);
}

// blend weight rising from 0 to 1 across [center*(1-w/2), center*(1+w/2)]
inline double blend_up(double v, double center, double rel_width) {
    double half = 0.5 * rel_width * center;
    return smooth_step((v - (center - half)) / (2.0 * half));
}

// solve the symmetric positive system G b = rhs in place (small dims)
inline std::vector<double> solve_spd(std::vector<std::vector<double>> G,
                                     std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(G[i][k]) > std::fabs(G[piv][k])) piv = i;
        std::swap(G[piv], G[k]);
        std::swap(rhs[piv], rhs[k]);
        if (std::fabs(G[k][k]) < 1e-300)
            throw std::runtime_error("solve_spd: singular normal equations");
        for (std::size_t i = k + 1; i < n; ++i) {
            double m = G[i][k] / G[k][k];
            for (std::size_t j = k; j < n; ++j) G[i][j] -= m * G[k][j];
            rhs[i] -= m * rhs[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = rhs[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= G[i][j] * x[j];
        x[i] = acc / G[i][i];
    }
    return x;
}

}  // namespace ricci
