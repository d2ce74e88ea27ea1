#pragma once

// Region rescalings and the fits that extract matching data from profiles:
//   parabolic   sigma = s/sqrt(T-t),  U = psi / sqrt(2(n-1)(T-t))
//   intermediate rho  = s/(T-t)^{1/k}, W = U
//   tip         gamma = Gamma psi, Gamma = (T-t)^{-(1-1/k)}, Z = psi_s^2
// plus the matching constants a = k(n-1)/(2c), b_k = -c^{-k}/2 that glue the
// regional expansions into one model.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ricci/bryant.hpp"
#include "ricci/flow.hpp"
#include "ricci/geometry.hpp"
#include "ricci/hermite.hpp"
#include "ricci/numerics.hpp"
#include "ricci/profile_grid.hpp"

namespace ricci {

struct FitReport {
    double fitted_value = 0.0;
    double window_lo = 0.0, window_hi = 0.0;
    double residual = 0.0;
    double sensitivity = 0.0;  // change under T_est perturbation
    bool low_confidence = false;
};

struct MatchingConstants {
    int n = 2;
    int k = 3;
    double c = 1.0;
    double a = 0.0;               // k(n-1)/(2c)
    double b_k = 0.0;             // -c^{-k}/2
    double gamma_exponent = 0.0;  // 1 - 1/k
};

inline MatchingConstants matching_constants(int n, int k, double c) {
    if (n < 2) throw std::invalid_argument("matching_constants: need n >= 2");
    if (k <= 2)
        throw std::invalid_argument(
            "matching_constants: k must be >= 3 (k <= 2 modes are excluded by "
            "the matching argument)");
    if (!(c > 0.0)) throw std::invalid_argument("matching_constants: need c > 0");
    MatchingConstants mc;
    mc.n = n;
    mc.k = k;
    mc.c = c;
    mc.a = k * (n - 1.0) / (2.0 * c);
    mc.b_k = -0.5 * std::pow(c, -k);
    mc.gamma_exponent = 1.0 - 1.0 / k;
    return mc;
}

// W-tilde(rho) = sqrt(1 - (rho/c)^k); solves (rho/k) W' - W/2 + 1/(2W) = 0
inline double intermediate_profile(double rho, double c, int k) {
    double arg = 1.0 - std::pow(rho / c, k);
    if (!(arg > 0.0))
        throw std::domain_error("intermediate_profile: rho outside the domain");
    return std::sqrt(arg);
}

// death profile psi = sqrt(2(n-1)[(T-t) - (s/c)^k])
inline double outer_profile(double s, double t, const MatchingConstants& mc,
                            double T) {
    double arg = (T - t) - std::pow(s / mc.c, mc.k);
    if (!(arg > 0.0))
        throw std::domain_error("outer_profile: point outside the outer region");
    return std::sqrt(2.0 * (mc.n - 1.0) * arg);
}

// ---------------------------------------------------------------------------
// parabolic frame

struct ParabolicFrame {
    double T_used = 0.0;
    double tau = 0.0;
    std::vector<double> sigma;  // uniform, contains 0
    std::vector<double> U;
    std::vector<double> V;
    bool early_warning = false;  // tau < 1: asymptotics not yet meaningful
};

// resample psi(s) around neck_s onto a uniform sigma grid; nodes where the
// profile has left the parabolic regime (U below u_floor, near a tip) are
// trimmed from the ends.
inline ParabolicFrame to_parabolic(const ProfileGrid& grid,
                                   const ArclengthFrame& frame, double T_est,
                                   double neck_s, double sigma_max = 10.0,
                                   double dsigma = 0.05, double u_floor = 0.45) {
    if (!(grid.t < T_est)) throw std::invalid_argument("to_parabolic: need t < T");
    double h = T_est - grid.t;
    ParabolicFrame out;
    out.T_used = T_est;
    out.tau = -std::log(h);
    out.early_warning = out.tau < 1.0;
    double rt = std::sqrt(h);
    double denom = std::sqrt(2.0 * (grid.n - 1.0) * h);

    PchipInterpolant psi_of_s(frame.s, grid.psi);
    long jlo = static_cast<long>(std::ceil((frame.s.front() - neck_s) / (rt * dsigma)));
    long jhi = static_cast<long>(std::floor((frame.s.back() - neck_s) / (rt * dsigma)));
    long jmax = static_cast<long>(std::floor(sigma_max / dsigma));
    jlo = std::max(jlo, -jmax);
    jhi = std::min(jhi, jmax);
    if (jlo > 0 || jhi < 0 || jhi - jlo < 8)
        throw std::invalid_argument("to_parabolic: neck not covered by the profile");

    std::vector<double> sig, U;
    for (long j = jlo; j <= jhi; ++j) {
        double s = neck_s + j * dsigma * rt;
        if (s < frame.s.front() || s > frame.s.back()) continue;
        sig.push_back(j * dsigma);
        U.push_back(psi_of_s(s) / denom);
    }
    // trim tip-adjacent ends where U has fallen out of the parabolic regime
    std::size_t i0 = 0, i1 = sig.size();
    std::size_t izero = 0;
    for (std::size_t i = 0; i < sig.size(); ++i)
        if (std::fabs(sig[i]) < 0.5 * dsigma) izero = i;
    std::size_t lo = izero, hi = izero;
    while (lo > 0 && U[lo - 1] >= u_floor) --lo;
    while (hi + 1 < U.size() && U[hi + 1] >= u_floor) ++hi;
    i0 = lo;
    i1 = hi + 1;
    out.sigma.assign(sig.begin() + i0, sig.begin() + i1);
    out.U.assign(U.begin() + i0, U.begin() + i1);
    out.V.resize(out.U.size());
    for (std::size_t i = 0; i < out.U.size(); ++i) out.V[i] = out.U[i] - 1.0;
    return out;
}

// residual of the rescaled evolution
//   U_tau = U_ss - (sigma/2 + nI) U_s + (n-1) U_s^2/U + (U - 1/U)/2
// from two tau-adjacent frames, evaluated at the midpoint
struct EvolutionResidual {
    std::vector<double> sigma;
    std::vector<double> residual;
    double tau_mid = 0.0;
};

inline EvolutionResidual u_evolution_residual(const ParabolicFrame& f1,
                                              const ParabolicFrame& f2, int n) {
    double dtau = f2.tau - f1.tau;
    if (!(dtau > 0.0) || dtau > 0.5)
        throw std::invalid_argument(
            "u_evolution_residual: frames must be tau-adjacent (0 < dtau <= 0.5)");
    double lo = std::max(f1.sigma.front(), f2.sigma.front());
    double hi = std::min(f1.sigma.back(), f2.sigma.back());
    double ds = f1.sigma[1] - f1.sigma[0];
    PchipInterpolant U1(f1.sigma, f1.U), U2(f2.sigma, f2.U);
    EvolutionResidual out;
    out.tau_mid = 0.5 * (f1.tau + f2.tau);
    std::vector<double> sig, Um, Ut;
    for (double s = lo; s <= hi + 1e-12; s += ds) {
        sig.push_back(s);
        double a = U1(std::min(s, f1.sigma.back()));
        double b = U2(std::min(s, f2.sigma.back()));
        Um.push_back(0.5 * (a + b));
        Ut.push_back((b - a) / dtau);
    }
    if (sig.size() < 9)
        throw std::invalid_argument("u_evolution_residual: overlap too small");
    std::vector<double> I = nonlocal_I(sig, Um);
    out.sigma = sig;
    out.residual.resize(sig.size());
    const std::size_t m = sig.size();
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t a = (i == 0) ? 1 : (i == m - 1 ? m - 2 : i);
        double Us = (Um[a + 1] - Um[a - 1]) / (2.0 * ds);
        double Uss = (Um[a + 1] - 2.0 * Um[a] + Um[a - 1]) / (ds * ds);
        double rhs = Uss - (0.5 * sig[i] + n * I[i]) * Us +
                     (n - 1.0) * Us * Us / Um[i] + 0.5 * (Um[i] - 1.0 / Um[i]);
        out.residual[i] = Ut[i] - rhs;
    }
    return out;
}

// ---------------------------------------------------------------------------
// intermediate frame

struct IntermediateFrame {
    double T_used = 0.0;
    double tau = 0.0;
    int k_used = 3;
    std::vector<double> rho;
    std::vector<double> W;
};

inline IntermediateFrame to_intermediate(const ProfileGrid& grid,
                                         const ArclengthFrame& frame, double T_est,
                                         double neck_s, int k) {
    if (!(grid.t < T_est)) throw std::invalid_argument("to_intermediate: need t < T");
    double h = T_est - grid.t;
    IntermediateFrame out;
    out.T_used = T_est;
    out.tau = -std::log(h);
    out.k_used = k;
    double scale = std::pow(h, 1.0 / k);
    double denom = std::sqrt(2.0 * (grid.n - 1.0) * h);
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
        out.rho.push_back((frame.s[i] - neck_s) / scale);
        out.W.push_back(grid.psi[i] / denom);
    }
    return out;
}

// least-squares fit of W^2 = 1 - (rho/c)^k over rho in [0.4, 0.85] c_guess,
// iterated once so the window tracks the fitted c
inline FitReport fit_c(const IntermediateFrame& frame, double c_guess) {
    const int k = frame.k_used;
    double cg = c_guess;
    FitReport rep;
    for (int pass = 0; pass < 2; ++pass) {
        double lo = 0.4 * cg, hi = 0.85 * cg;
        std::vector<double> rho, W2;
        for (std::size_t i = 0; i < frame.rho.size(); ++i) {
            if (frame.rho[i] >= lo && frame.rho[i] <= hi) {
                rho.push_back(frame.rho[i]);
                W2.push_back(frame.W[i] * frame.W[i]);
            }
        }
        if (rho.size() < 8)
            throw std::invalid_argument("fit_c: too few samples in the fit window");
        for (std::size_t i = 1; i < W2.size(); ++i)
            if (W2[i] > W2[i - 1] + 1e-9)
                throw std::runtime_error("fit_c: W not monotone in the window, fit rejected");
        auto sse = [&](double c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rho.size(); ++i) {
                double r = W2[i] - (1.0 - std::pow(rho[i] / c, k));
                acc += r * r;
            }
            return acc;
        };
        double c = minimize_golden(sse, 0.5 * cg, 2.0 * cg, 1e-12);
        rep.fitted_value = c;
        rep.window_lo = lo;
        rep.window_hi = hi;
        rep.residual = std::sqrt(sse(c) / rho.size());
        cg = c;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// tip frame

struct TipFrame {
    double T_used = 0.0;
    double Gamma = 0.0;
    int k_used = 3;
    std::vector<double> gamma;  // increasing away from the pole, gamma[0] ~ 0
    std::vector<double> Z;      // psi_s^2 reparameterized by gamma
    bool subcap_only = false;   // cap was not monotone; largest subcap used
};

inline TipFrame to_tip(const ProfileGrid& grid, const ArclengthFrame& frame,
                       double T_est, int k) {
    if (!(grid.t < T_est)) throw std::invalid_argument("to_tip: need t < T");
    const std::size_t m = grid.nodes();
    std::vector<double> ps = d_ds_psi(grid);
    // walk left from the right pole while psi is strictly decreasing toward it
    std::size_t start = m - 2;
    while (start > 1 && grid.psi[start - 1] > grid.psi[start] && ps[start - 1] < 0.0)
        --start;
    TipFrame out;
    out.T_used = T_est;
    out.k_used = k;
    out.Gamma = std::pow(T_est - grid.t, -(1.0 - 1.0 / k));
    out.subcap_only = start > 1;
    // pole itself: psi = 0, one-sided slope -> Z = 1
    double pole_slope = (grid.psi[m - 1] - grid.psi[m - 2]) /
                        (frame.s[m - 1] - frame.s[m - 2]);
    out.gamma.push_back(0.0);
    out.Z.push_back(pole_slope * pole_slope);
    for (std::size_t i = m - 2; i >= start && i > 0; --i) {
        double g = out.Gamma * grid.psi[i];
        if (g <= out.gamma.back()) break;  // enforce strict monotonicity
        out.gamma.push_back(g);
        out.Z.push_back(ps[i] * ps[i]);
    }
    if (out.gamma.size() < 4)
        throw std::runtime_error("to_tip: monotone cap too small to invert");
    return out;
}

// sup and rms deviation |Z(gamma) - B(gamma/a)| over gamma in [0, gamma_max]
struct TipComparison {
    double sup_dev = 0.0;
    double rms_dev = 0.0;
    double gamma_max_used = 0.0;
    bool insufficient_coverage = false;
    std::optional<double> best_fit_a;
};

inline TipComparison compare_tip(const TipFrame& tf, const BryantProfile& prof,
                                 double a, double gamma_max = 2.0,
                                 bool fit_a = false) {
    TipComparison out;
    double gmax = std::min(gamma_max, tf.gamma.back());
    out.gamma_max_used = gmax;
    out.insufficient_coverage = tf.gamma.back() < 1.0;
    PchipInterpolant Z_of_gamma(tf.gamma, tf.Z);
    auto dev = [&](double aa) {
        double sup = 0.0, ss = 0.0;
        int cnt = 0;
        for (double g = 0.0; g <= gmax + 1e-12; g += gmax / 200.0) {
            double d = std::fabs(Z_of_gamma(std::min(g, tf.gamma.back())) -
                                 bryant_eval(prof, g / aa));
            sup = std::max(sup, d);
            ss += d * d;
            ++cnt;
        }
        return std::make_pair(sup, std::sqrt(ss / cnt));
    };
    auto [sup, rms] = dev(a);
    out.sup_dev = sup;
    out.rms_dev = rms;
    if (fit_a) {
        double abest = minimize_golden(
            [&](double aa) { return dev(aa).first; }, 0.5 * a, 2.0 * a, 1e-8);
        out.best_fit_a = abest;
    }
    return out;
}

// ---------------------------------------------------------------------------
// mode fit: which eigenmode dominates V, and with what constant b_k

struct ModeFit {
    int k = 0;
    double b_k = 0.0;          // extrapolated constant coefficient
    double slope = 0.0;        // fitted decay rate of log|b_k(tau)|
    double slope_expected = 0.0;
    double residual = 0.0;
    bool b0_present = false;   // advise adjusting T_est
    double sensitivity = 0.0;  // filled by callers that rerun with T +- delta
};

inline ModeFit fit_dominant_mode(const std::vector<SpectralProjection>& projs,
                                 int k_min = 3) {
    if (projs.size() < 4)
        throw std::invalid_argument("fit_dominant_mode: need >= 4 projections");
    double span = projs.back().tau - projs.front().tau;
    if (span < 1.0)
        throw std::invalid_argument("fit_dominant_mode: need tau span >= 1");
    const int kmax = static_cast<int>(projs.front().b.size()) - 1;
    const double floor_amp = 1e-13;

    ModeFit best;
    double best_score = -1.0;
    for (int k = k_min; k <= kmax; ++k) {
        std::vector<double> x, y;
        for (const auto& p : projs) {
            double bk = p.b[k];
            if (std::fabs(bk) < floor_amp) continue;
            x.push_back((1.0 - 0.5 * k) * p.tau);  // lambda_k tau
            y.push_back(std::log(std::fabs(bk)));
        }
        if (x.size() < 4) continue;
        LineFit lf = fit_line(x, y);
        double late_amp = std::fabs(projs.back().b[k]);
        bool slope_ok = std::fabs(lf.slope - 1.0) < 0.25;
        if (!slope_ok) continue;
        if (late_amp > best_score) {
            best_score = late_amp;
            best.k = k;
            best.slope = lf.slope * (1.0 - 0.5 * k);
            best.slope_expected = 1.0 - 0.5 * k;
            best.residual = lf.rms_residual;
            double sign = projs.back().b[k] > 0 ? 1.0 : -1.0;
            best.b_k = sign * std::exp(lf.intercept);
        }
    }
    if (best.k == 0)
        throw std::runtime_error(
            "fit_dominant_mode: no mode above the noise floor (profile converges "
            "to the cylinder too fast)");
    // a surviving k=0 component signals a mis-estimated T
    double b0_late = std::fabs(projs.back().b[0]);
    best.b0_present = b0_late > 100.0 * floor_amp && b0_late > 0.05 * best_score;
    return best;
}

// ---------------------------------------------------------------------------
// blow-up exponent fit: K_pole ~ prefactor * (T-t)^{-q}

struct BlowupFit {
    double q = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;
    double sensitivity = 0.0;  // |q(T +- delta) - q(T)| max
    bool low_confidence = false;
};

inline BlowupFit blowup_fit(const std::vector<double>& t,
                            const std::vector<double>& K_pole, double T_est,
                            double delta = 0.0) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (K_pole[i] > 0.0 && t[i] < T_est) {
            x.push_back(-std::log(T_est - t[i]));
            y.push_back(std::log(K_pole[i]));
        }
    }
    if (x.size() < 6)
        throw std::invalid_argument("blowup_fit: need >= 6 usable samples");
    double span = *std::max_element(y.begin(), y.end()) -
                  *std::min_element(y.begin(), y.end());
    if (span < 2.0 * std::log(10.0))
        throw std::invalid_argument("blowup_fit: K_pole must span >= 2 decades");
    LineFit lf = fit_line(x, y);
    BlowupFit out;
    out.q = lf.slope;
    out.prefactor = std::exp(lf.intercept);
    out.residual = lf.rms_residual;
    if (delta > 0.0) {
        for (double Tp : {T_est - delta, T_est + delta}) {
            std::vector<double> xp, yp;
            for (std::size_t i = 0; i < t.size(); ++i)
                if (K_pole[i] > 0.0 && t[i] < Tp) {
                    xp.push_back(-std::log(Tp - t[i]));
                    yp.push_back(std::log(K_pole[i]));
                }
            if (xp.size() >= 6) {
                LineFit lp = fit_line(xp, yp);
                out.sensitivity = std::max(out.sensitivity, std::fabs(lp.slope - out.q));
            }
        }
        out.low_confidence = out.sensitivity > 0.01 * std::fabs(out.q);
    }
    return out;
}

}  // namespace ricci
