#pragma once

// Explicit time integration of the arclength-gauge evolution system
//   psi_t = psi_ss - (n-1)(1 - psi_s^2)/psi,
//   phi_t = n (psi_ss/psi) phi,
// on the fixed x-grid, with adaptive step size, curvature-driven snapshot
// cadence, stopping at incipient singularities, and classification of the
// outcome. Blow-up studies need tiny dt near the singularity regardless, so
// no implicit machinery is used.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ricci/geometry.hpp"
#include "ricci/initial_data.hpp"
#include "ricci/profile_grid.hpp"

namespace ricci {

struct SolverConfig {
    double cfl_safety = 0.2;        // fraction of the explicit stability bound
    double K_stop = 1e6;            // halt once max(|K|,|L|) exceeds this
    double psi_floor = 1e-8;        // halt once psi drops below this inside
    double t_horizon = 1e9;         // halt at this time if nothing happens
    double snapshot_factor = 2.0;   // snapshot per this factor of curvature growth
    double snapshot_dt_max = 0.01;  // and at least this often in t
    std::size_t max_steps = 400'000'000;

    void validate() const {
        if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
            throw std::invalid_argument("cfl_safety must lie in (0,1]");
        if (!(K_stop > 0.0)) throw std::invalid_argument("K_stop must be > 0");
        if (!(psi_floor > 0.0)) throw std::invalid_argument("psi_floor must be > 0");
        if (!(snapshot_factor > 1.0))
            throw std::invalid_argument("snapshot_factor must be > 1");
    }
};

struct SnapshotDiagnostics {
    double psi_min_interior = 0.0;       // min over interior nodes
    double s_psi_min = 0.0;
    std::optional<double> psi_neck;      // smallest neck value, if any
    std::optional<double> s_neck;
    double psi_max = 0.0;
    double K_pole_right = 0.0;
    double K_max = 0.0;                  // max over nodes of |K|
    double L_max = 0.0;
    double min_gap = 0.0;                // min over interior of 1 - psi_s^2
    ExtremaReport extrema;
};

struct Snapshot {
    ProfileGrid grid;
    ArclengthFrame frame;
    SnapshotDiagnostics diag;
};

enum class SingularityKind {
    InteriorNeckpinch,
    PolarDegenerateCandidate,
    TotalShrink,
    NoneBeforeHorizon
};

inline const char* to_string(SingularityKind k) {
    switch (k) {
        case SingularityKind::InteriorNeckpinch: return "InteriorNeckpinch";
        case SingularityKind::PolarDegenerateCandidate:
            return "PolarDegenerateCandidate";
        case SingularityKind::TotalShrink: return "TotalShrink";
        default: return "NoneBeforeHorizon";
    }
}

enum class TEstMethod { None, NeckRadiusSquareFit, MaxRadiusSquareFit, PoleCurvatureFit };

inline const char* to_string(TEstMethod m) {
    switch (m) {
        case TEstMethod::NeckRadiusSquareFit: return "neck_radius_square_fit";
        case TEstMethod::MaxRadiusSquareFit: return "max_radius_square_fit";
        case TEstMethod::PoleCurvatureFit: return "pole_curvature_fit";
        default: return "none";
    }
}

struct SingularityReport {
    SingularityKind kind = SingularityKind::NoneBeforeHorizon;
    double T_est = 0.0;
    TEstMethod T_method = TEstMethod::None;
    double location_s = 0.0;
    bool low_confidence = false;
    std::map<std::string, double> evidence;
};

enum class StopReason { Horizon, PsiFloor, CurvatureStop, Aborted };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::Horizon: return "horizon";
        case StopReason::PsiFloor: return "psi_floor";
        case StopReason::CurvatureStop: return "curvature_stop";
        default: return "aborted";
    }
}

struct EvolveResult {
    std::vector<Snapshot> snapshots;
    SingularityReport report;
    StopReason stop = StopReason::Horizon;
    std::string abort_message;
    std::size_t steps = 0;
};

// ---------------------------------------------------------------------------
// right-hand side on raw arrays; returns curvature maxima for dt control

namespace detail {

struct RhsScratch {
    std::vector<double> dphi, dpsi;
};

// The poles are real nodes carrying psi = 0, so interior stencils need no
// ghost values; ghosts only enter the geometry-side derivatives at the poles.
inline void flow_rhs(int n, double dx, const std::vector<double>& phi,
                     const std::vector<double>& psi, std::vector<double>& dphi,
                     std::vector<double>& dpsi, double& maxK, double& maxL) {
    const std::size_t m = psi.size();
    const double nn = n;
    maxK = 0.0;
    maxL = 0.0;
    dphi.resize(m);
    dpsi.resize(m);
    double ratio1_left = 0, ratio2_left = 0, ratio1_right = 0, ratio2_right = 0;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        double psim = psi[i - 1];
        double psip = psi[i + 1];
        double phim = phi[i - 1];
        double phip = phi[i + 1];
        double ps = (psip - psim) / (2.0 * dx * phi[i]);
        double fluxp = (psip - psi[i]) / (0.5 * (phi[i] + phip));
        double fluxm = (psi[i] - psim) / (0.5 * (phi[i] + phim));
        double pss = (fluxp - fluxm) / (dx * dx * phi[i]);
        double ratio = pss / psi[i];
        double L = (1.0 - ps * ps) / (psi[i] * psi[i]);
        dpsi[i] = pss - (nn - 1.0) * (1.0 - ps * ps) / psi[i];
        dphi[i] = nn * ratio * phi[i];
        maxK = std::max(maxK, std::fabs(ratio));
        maxL = std::max(maxL, std::fabs(L));
        if (i == 1) ratio1_left = ratio;
        if (i == 2) ratio2_left = ratio;
        if (i + 2 == m) ratio1_right = ratio;
        if (i + 3 == m) ratio2_right = ratio;
    }
    // poles: psi stays pinned at zero; phi follows the even-extrapolated
    // limit of psi_ss/psi
    dpsi[0] = 0.0;
    dpsi[m - 1] = 0.0;
    double ratio_pole_left = (4.0 * ratio1_left - ratio2_left) / 3.0;
    double ratio_pole_right = (4.0 * ratio1_right - ratio2_right) / 3.0;
    dphi[0] = nn * ratio_pole_left * phi[0];
    dphi[m - 1] = nn * ratio_pole_right * phi[m - 1];
}

}  // namespace detail

// interior ghost-aware derivative stencils are shared with geometry.hpp; the
// rhs above keeps its own fused loop for speed.

struct StepOutcome {
    ProfileGrid next;
    bool singular = false;   // psi dropped below the caller's floor
    std::size_t node = 0;
    double value = 0.0;
};

// one classical four-stage explicit step; psi at the poles stays 0
inline StepOutcome step(const ProfileGrid& g, double dt,
                        double psi_floor = 1e-8) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    if (g.left_open) throw std::invalid_argument("step: cannot evolve half profiles");
    g.require_valid();
    const std::size_t m = g.nodes();
    const double dx = g.dx();
    std::vector<double> k1p(m), k1s(m), k2p(m), k2s(m), k3p(m), k3s(m), k4p(m),
        k4s(m), tp(m), ts(m);
    double mk, ml;
    detail::flow_rhs(g.n, dx, g.phi, g.psi, k1p, k1s, mk, ml);
    for (std::size_t i = 0; i < m; ++i) {
        tp[i] = g.phi[i] + 0.5 * dt * k1p[i];
        ts[i] = g.psi[i] + 0.5 * dt * k1s[i];
    }
    detail::flow_rhs(g.n, dx, tp, ts, k2p, k2s, mk, ml);
    for (std::size_t i = 0; i < m; ++i) {
        tp[i] = g.phi[i] + 0.5 * dt * k2p[i];
        ts[i] = g.psi[i] + 0.5 * dt * k2s[i];
    }
    detail::flow_rhs(g.n, dx, tp, ts, k3p, k3s, mk, ml);
    for (std::size_t i = 0; i < m; ++i) {
        tp[i] = g.phi[i] + dt * k3p[i];
        ts[i] = g.psi[i] + dt * k3s[i];
    }
    detail::flow_rhs(g.n, dx, tp, ts, k4p, k4s, mk, ml);
    StepOutcome out;
    out.next = g;
    out.next.t = g.t + dt;
    for (std::size_t i = 0; i < m; ++i) {
        out.next.phi[i] =
            g.phi[i] + dt / 6.0 * (k1p[i] + 2 * k2p[i] + 2 * k3p[i] + k4p[i]);
        out.next.psi[i] =
            g.psi[i] + dt / 6.0 * (k1s[i] + 2 * k2s[i] + 2 * k3s[i] + k4s[i]);
    }
    out.next.psi.front() = 0.0;
    out.next.psi.back() = 0.0;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (out.next.psi[i] < psi_floor) {
            out.singular = true;
            out.node = i;
            out.value = out.next.psi[i];
            break;
        }
    }
    return out;
}

inline double choose_dt(const ProfileGrid& g, const SolverConfig& cfg) {
    cfg.validate();
    const std::size_t m = g.nodes();
    const double dx = g.dx();
    std::vector<double> dp(m), ds(m);
    double mk, ml;
    detail::flow_rhs(g.n, dx, g.phi, g.psi, dp, ds, mk, ml);
    double phimin = *std::min_element(g.phi.begin(), g.phi.end());
    double ds_min = phimin * dx;
    double grid_limit = 0.5 * ds_min * ds_min;
    double curv_limit = 1.0 / std::max({mk, ml, 1.0});
    return cfg.cfl_safety * std::min(grid_limit, curv_limit);
}

// ---------------------------------------------------------------------------

inline Snapshot make_snapshot(const ProfileGrid& g, double flat_tol = 1e-3) {
    Snapshot snap;
    snap.grid = g;
    snap.frame = arclength(g);
    CurvatureField c = curvatures(g);
    const std::size_t m = g.nodes();
    SnapshotDiagnostics& d = snap.diag;
    d.psi_min_interior = std::numeric_limits<double>::max();
    d.psi_max = 0.0;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (g.psi[i] < d.psi_min_interior) {
            d.psi_min_interior = g.psi[i];
            d.s_psi_min = snap.frame.s[i];
        }
        d.psi_max = std::max(d.psi_max, g.psi[i]);
    }
    d.K_pole_right = c.K[m - 1];
    for (std::size_t i = 0; i < m; ++i) {
        d.K_max = std::max(d.K_max, std::fabs(c.K[i]));
        d.L_max = std::max(d.L_max, std::fabs(c.L[i]));
    }
    std::vector<double> ps = d_ds_psi(g);
    d.min_gap = std::numeric_limits<double>::max();
    for (std::size_t i = 1; i + 1 < m; ++i)
        d.min_gap = std::min(d.min_gap, 1.0 - ps[i] * ps[i]);
    d.extrema = detect_extrema(g, snap.frame, flat_tol);
    if (!d.extrema.necks.empty()) {
        auto it = std::min_element(
            d.extrema.necks.begin(), d.extrema.necks.end(),
            [](const Extremum& a, const Extremum& b) { return a.psi < b.psi; });
        d.psi_neck = it->psi;
        d.s_neck = it->s;
    }
    return snap;
}

namespace detail {

inline bool nyquist_alarm(const ProfileGrid& g) {
    // sign-alternation score of second differences over the interior
    const std::size_t m = g.nodes();
    if (m < 32) return false;
    double alt = 0.0, mag = 0.0;
    double sign = 1.0;
    for (std::size_t i = m / 8; i < m - m / 8 - 2; ++i) {
        double d2 = g.psi[i + 1] - 2.0 * g.psi[i] + g.psi[i - 1];
        alt += sign * d2;
        mag += std::fabs(d2);
        sign = -sign;
    }
    if (mag <= 0.0) return false;
    return std::fabs(alt) / mag > 0.7;
}

}  // namespace detail

inline SingularityReport classify(const std::vector<Snapshot>& snaps,
                                  StopReason stop = StopReason::CurvatureStop);
inline std::pair<double, TEstMethod> estimate_T(const std::vector<Snapshot>& snaps,
                                                SingularityKind kind,
                                                double* fit_residual = nullptr,
                                                double* fit_slope = nullptr);

inline EvolveResult evolve(const ProfileGrid& g0, const SolverConfig& cfg) {
    cfg.validate();
    g0.require_valid();
    EvolveResult res;
    ProfileGrid g = g0;
    Snapshot first = make_snapshot(g);
    double last_snap_K = std::max(first.diag.K_max, 1.0);
    double last_snap_t = g.t;
    res.snapshots.push_back(std::move(first));

    while (true) {
        if (g.t >= cfg.t_horizon) {
            res.stop = StopReason::Horizon;
            break;
        }
        if (res.steps >= cfg.max_steps) {
            res.stop = StopReason::Aborted;
            res.abort_message = "step budget exhausted";
            break;
        }
        double dt = choose_dt(g, cfg);
        dt = std::min(dt, cfg.t_horizon - g.t);
        if (!(dt > 1e-18)) {
            res.stop = StopReason::Aborted;
            res.abort_message = "time step underflow";
            break;
        }
        StepOutcome out = step(g, dt, cfg.psi_floor);
        ++res.steps;
        bool bad = false;
        for (std::size_t i = 0; i < out.next.nodes(); ++i)
            if (!is_finite(out.next.psi[i]) || !is_finite(out.next.phi[i])) {
                bad = true;
                break;
            }
        if (bad) {
            res.stop = StopReason::Aborted;
            res.abort_message = "non-finite state (dt/grid settings too aggressive)";
            break;
        }
        g = std::move(out.next);
        if (out.singular) {
            res.snapshots.push_back(make_snapshot(g));
            res.stop = StopReason::PsiFloor;
            break;
        }

        // cheap curvature probe piggybacks on the dt chooser next iteration;
        // snapshot cadence uses the stored diagnostics
        double mk, ml;
        {
            std::vector<double> dp, ds;
            detail::flow_rhs(g.n, g.dx(), g.phi, g.psi, dp, ds, mk, ml);
        }
        double kmax = std::max(mk, ml);
        if (kmax > cfg.K_stop) {
            res.snapshots.push_back(make_snapshot(g));
            res.stop = StopReason::CurvatureStop;
            break;
        }
        if (kmax >= cfg.snapshot_factor * last_snap_K ||
            g.t - last_snap_t >= cfg.snapshot_dt_max) {
            if (detail::nyquist_alarm(g)) {
                res.stop = StopReason::Aborted;
                res.abort_message = "Nyquist-mode oscillation detected";
                res.snapshots.push_back(make_snapshot(g));
                break;
            }
            res.snapshots.push_back(make_snapshot(g));
            last_snap_K = std::max(kmax, 1.0);
            last_snap_t = g.t;
        }
    }
    if (res.snapshots.back().grid.t < g.t) res.snapshots.push_back(make_snapshot(g));

    res.report = classify(res.snapshots, res.stop);
    if (res.report.kind != SingularityKind::NoneBeforeHorizon &&
        res.snapshots.size() >= 5) {
        double fres = 0.0, fslope = 0.0;
        auto [T, method] = estimate_T(res.snapshots, res.report.kind, &fres, &fslope);
        res.report.T_est = T;
        res.report.T_method = method;
        res.report.evidence["fit_residual"] = fres;
        res.report.evidence["fit_slope"] = fslope;
    }
    return res;
}

// ---------------------------------------------------------------------------

inline SingularityReport classify(const std::vector<Snapshot>& snaps,
                                  StopReason stop) {
    if (snaps.size() < 3)
        throw std::invalid_argument("classify: need at least 3 snapshots");
    SingularityReport rep;
    const Snapshot& a = snaps.front();
    const Snapshot& z = snaps.back();

    double shrink_ratio = z.diag.psi_max / std::max(a.diag.psi_max, 1e-300);
    rep.evidence["shrink_ratio"] = shrink_ratio;
    rep.evidence["final_psi_max"] = z.diag.psi_max;
    rep.evidence["final_K_max"] = z.diag.K_max;

    bool pinched = (stop == StopReason::PsiFloor || stop == StopReason::CurvatureStop);
    if (!pinched) {
        rep.kind = SingularityKind::NoneBeforeHorizon;
        return rep;
    }

    // bump-value history at s_hat and neck location
    double bump_ratio = 1.0;
    if (a.diag.extrema.s_hat && z.diag.extrema.s_hat) {
        double b0 = a.diag.extrema.bumps.back().psi;
        double b1 = z.diag.extrema.bumps.back().psi;
        bump_ratio = b1 / std::max(b0, 1e-300);
        rep.evidence["right_bump_ratio"] = bump_ratio;
        rep.evidence["s_hat_frac"] =
            (z.frame.s_total > 0)
                ? (*z.diag.extrema.s_hat - z.frame.s.front()) / z.frame.s_total
                : 0.0;
    }
    bool has_neck = z.diag.psi_neck.has_value();
    rep.evidence["has_neck_at_end"] = has_neck ? 1.0 : 0.0;

    if (!has_neck) {
        // no interior neck: uniform collapse
        rep.kind = SingularityKind::TotalShrink;
        rep.location_s = z.diag.s_psi_min;
        return rep;
    }

    double loc_frac = (*z.diag.s_neck - z.frame.s.front()) / z.frame.s_total;
    rep.evidence["neck_loc_frac"] = loc_frac;
    double shat_frac = rep.evidence.count("s_hat_frac") ? rep.evidence["s_hat_frac"] : 0.5;

    if (shrink_ratio < 0.05 && z.diag.psi_neck.value() / z.diag.psi_max > 0.5) {
        rep.kind = SingularityKind::TotalShrink;
        rep.location_s = z.diag.s_psi_min;
        return rep;
    }
    bool polar_signature = (bump_ratio < 0.3) || (shat_frac > 0.95) ||
                           (loc_frac > 0.95) || (loc_frac < 0.05);
    if (polar_signature) {
        rep.kind = SingularityKind::PolarDegenerateCandidate;
        rep.location_s = *z.diag.s_neck;
        return rep;
    }
    if (bump_ratio >= 0.3 && loc_frac > 0.02 && loc_frac < 0.98) {
        rep.kind = SingularityKind::InteriorNeckpinch;
        rep.location_s = *z.diag.s_neck;
        return rep;
    }
    rep.kind = SingularityKind::NoneBeforeHorizon;  // ambiguous evidence
    rep.low_confidence = true;
    return rep;
}

// ---------------------------------------------------------------------------

inline std::pair<double, TEstMethod> estimate_T(const std::vector<Snapshot>& snaps,
                                                SingularityKind kind,
                                                double* fit_residual,
                                                double* fit_slope) {
    if (snaps.size() < 5)
        throw std::invalid_argument("estimate_T: need >= 5 snapshots");

    // late-time window: the last 12 snapshots (or all but the first two)
    std::size_t count = std::min<std::size_t>(12, snaps.size() - 1);
    std::size_t begin = snaps.size() - count;
    begin = std::max<std::size_t>(begin, 1);

    std::vector<double> t, y;
    TEstMethod method = TEstMethod::None;
    if (kind == SingularityKind::InteriorNeckpinch) {
        method = TEstMethod::NeckRadiusSquareFit;
        for (std::size_t i = begin; i < snaps.size(); ++i) {
            if (!snaps[i].diag.psi_neck) continue;
            t.push_back(snaps[i].grid.t);
            double v = *snaps[i].diag.psi_neck;
            y.push_back(v * v);
        }
    } else if (kind == SingularityKind::TotalShrink) {
        method = TEstMethod::MaxRadiusSquareFit;
        for (std::size_t i = begin; i < snaps.size(); ++i) {
            t.push_back(snaps[i].grid.t);
            y.push_back(snaps[i].diag.psi_max * snaps[i].diag.psi_max);
        }
    } else {
        method = TEstMethod::PoleCurvatureFit;
        // K_pole ~ C (T-t)^(-q): fit K^(-1/q) linearly in t, scan q
        std::vector<double> tk, K;
        for (std::size_t i = begin; i < snaps.size(); ++i) {
            if (snaps[i].diag.K_pole_right > 0) {
                tk.push_back(snaps[i].grid.t);
                K.push_back(snaps[i].diag.K_pole_right);
            }
        }
        if (tk.size() < 5) throw std::runtime_error("estimate_T: too few pole samples");
        double best_q = 1.0, best_res = std::numeric_limits<double>::max(),
               best_T = 0.0, best_slope = 0.0;
        for (double q = 1.0; q <= 2.001; q += 0.005) {
            std::vector<double> z(K.size());
            for (std::size_t i = 0; i < K.size(); ++i) z[i] = std::pow(K[i], -1.0 / q);
            LineFit lf = fit_line(tk, z);
            double scale = std::fabs(z.front()) + 1e-300;
            double rel = lf.rms_residual / scale;
            if (rel < best_res && lf.slope < 0.0) {
                best_res = rel;
                best_q = q;
                best_T = -lf.intercept / lf.slope;
                best_slope = lf.slope;
            }
        }
        if (fit_residual) *fit_residual = best_res;
        if (fit_slope) *fit_slope = best_q;  // the fitted exponent is the story here
        (void)best_slope;
        return {best_T, method};
    }

    if (t.size() < 5) throw std::runtime_error("estimate_T: too few usable snapshots");
    LineFit lf = fit_line(t, y);
    if (!(lf.slope < 0.0)) throw std::runtime_error("estimate_T: non-shrinking fit");
    double T = -lf.intercept / lf.slope;
    if (fit_residual) {
        double scale = std::fabs(y.front()) + 1e-300;
        *fit_residual = lf.rms_residual / scale;
    }
    if (fit_slope) *fit_slope = lf.slope;
    return {T, method};
}

// ---------------------------------------------------------------------------
// bisection on the family parameter between a pinching and a non-pinching
// outcome; keeps the final bracketing runs for tip analysis

struct CriticalSearchResult {
    double lambda_star = 0.0;
    double lambda_lo = 0.0, lambda_hi = 0.0;
    EvolveResult run_lo, run_hi;  // final runs at lambda_lo / lambda_hi
};

inline CriticalSearchResult critical_search(InitialFamily fam, double lambda_lo,
                                            double lambda_hi, int iters,
                                            const SolverConfig& cfg, int resolution,
                                            int n) {
    auto run = [&](double lam) {
        InitialFamily f = fam;
        f.lambda = lam;
        return evolve(make_initial(f, resolution, n), cfg);
    };
    auto is_pinch = [](const EvolveResult& r) {
        return r.report.kind == SingularityKind::InteriorNeckpinch;
    };
    auto is_other = [](const EvolveResult& r) {
        return r.report.kind == SingularityKind::TotalShrink ||
               r.report.kind == SingularityKind::NoneBeforeHorizon;
    };

    CriticalSearchResult out;
    out.run_lo = run(lambda_lo);
    out.run_hi = run(lambda_hi);
    bool lo_pinch = is_pinch(out.run_lo) && is_other(out.run_hi);
    bool hi_pinch = is_pinch(out.run_hi) && is_other(out.run_lo);
    if (!lo_pinch && !hi_pinch)
        throw std::invalid_argument(
            std::string("critical_search: invalid bracket: lambda_lo -> ") +
            to_string(out.run_lo.report.kind) + ", lambda_hi -> " +
            to_string(out.run_hi.report.kind));

    double lo = lambda_lo, hi = lambda_hi;
    for (int it = 0; it < iters; ++it) {
        double mid = 0.5 * (lo + hi);
        EvolveResult rm = run(mid);
        bool mid_pinch = is_pinch(rm);
        if (mid_pinch == lo_pinch) {
            lo = mid;
            out.run_lo = std::move(rm);
        } else {
            hi = mid;
            out.run_hi = std::move(rm);
        }
    }
    out.lambda_lo = lo;
    out.lambda_hi = hi;
    out.lambda_star = 0.5 * (lo + hi);
    return out;
}

}  // namespace ricci
