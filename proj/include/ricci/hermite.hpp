#pragma once

// Linearized parabolic-region machinery: the Hermite polynomials h_k
// normalized to leading coefficient 1, the operator
//   A V = V_sigma_sigma - (sigma/2) V_sigma + V
// with eigenvalues 1 - k/2 in L^2(exp(-sigma^2/4) dsigma), weighted
// projections of sampled data, the nonlocal term I, and the nonlinearity N.
//
// Coefficient tables are exact integers built from the recurrence
//   h_{k+1} = sigma h_k - 2k h_{k-1},
// which is validated against the eigenrelation rather than trusted.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ricci/numerics.hpp"

namespace ricci {

struct Polynomial {
    std::vector<double> c;  // c[j] multiplies sigma^j

    double operator()(double sigma) const {
        double acc = 0.0;
        for (std::size_t j = c.size(); j-- > 0;) acc = acc * sigma + c[j];
        return acc;
    }
    Polynomial derivative() const {
        Polynomial d;
        if (c.size() <= 1) {
            d.c = {0.0};
            return d;
        }
        d.c.resize(c.size() - 1);
        for (std::size_t j = 1; j < c.size(); ++j)
            d.c[j - 1] = c[j] * static_cast<double>(j);
        return d;
    }
};

class HermiteBasis {
public:
    explicit HermiteBasis(int k_max = 10) : k_max_(k_max) {
        if (k_max < 0 || k_max > 20)
            throw std::invalid_argument("hermite: supported range is k <= 20");
        coeffs_.resize(k_max + 1);
        coeffs_[0] = {1};
        if (k_max >= 1) coeffs_[1] = {0, 1};
        for (int k = 1; k < k_max; ++k) {
            std::vector<std::int64_t> next(k + 2, 0);
            for (int j = 0; j <= k; ++j) next[j + 1] += coeff(k, j);
            for (int j = 0; j < k; ++j) next[j] -= 2LL * k * coeff(k - 1, j);
            coeffs_[k + 1] = std::move(next);
        }
    }

    int k_max() const { return k_max_; }
    double eigenvalue(int k) const { return 1.0 - 0.5 * k; }

    std::int64_t coeff(int k, int j) const {
        const auto& v = coeffs_.at(k);
        return (j >= 0 && j < static_cast<int>(v.size())) ? v[j] : 0;
    }

    Polynomial polynomial(int k) const {
        const auto& v = coeffs_.at(k);
        Polynomial p;
        p.c.assign(v.begin(), v.end());
        return p;
    }

    double value(int k, double sigma) const { return polynomial(k)(sigma); }

    // closed-form weighted norm <h_k, h_k> with weight exp(-sigma^2/4)
    static double norm_closed_form(int k) {
        double f = 1.0;
        for (int j = 2; j <= k; ++j) f *= j;
        return std::pow(2.0, k + 1) * std::sqrt(M_PI) * f;
    }

    // exact eigenrelation check in integer arithmetic:
    // 2*A h_k == (2-k) h_k  coefficientwise
    bool eigenrelation_exact(int k) const {
        for (int j = 0; j <= k; ++j) {
            std::int64_t lhs = 2LL * (j + 1) * (j + 2) * coeff(k, j + 2) +
                               (2LL - j) * coeff(k, j);
            std::int64_t rhs = (2LL - k) * coeff(k, j);
            if (lhs != rhs) return false;
        }
        return true;
    }

private:
    int k_max_;
    std::vector<std::vector<std::int64_t>> coeffs_;
};

inline Polynomial hermite(int k) {
    static const HermiteBasis table(20);
    return table.polynomial(k);
}

// ---------------------------------------------------------------------------
// operator A

inline Polynomial apply_A(const Polynomial& p) {
    // A p = p'' - (sigma/2) p' + p; coefficients stay exact in doubles
    // (they are integers or half-integers well below 2^53)
    std::size_t n = p.c.size();
    Polynomial out;
    out.c.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = p.c[j];  // +V
        if (j + 2 < n)
            acc += p.c[j + 2] * static_cast<double>((j + 1) * (j + 2));  // V''
        acc -= 0.5 * static_cast<double>(j) * p.c[j];  // -(sigma/2) V'
        out.c[j] = acc;
    }
    return out;
}

// sampled variant: centered differences on a uniform sigma grid
inline std::vector<double> apply_A(const std::vector<double>& sigma,
                                   const std::vector<double>& V) {
    if (sigma.size() != V.size() || sigma.size() < 5)
        throw std::invalid_argument("apply_A: need >= 5 matching samples");
    const std::size_t m = V.size();
    const double h = sigma[1] - sigma[0];
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t a = (i == 0) ? 1 : (i == m - 1 ? m - 2 : i);
        double d1 = (V[a + 1] - V[a - 1]) / (2.0 * h);
        double d2 = (V[a + 1] - 2.0 * V[a] + V[a - 1]) / (h * h);
        out[i] = d2 - 0.5 * sigma[i] * d1 + V[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// weighted projection of sampled data

struct SpectralProjection {
    double tau = 0.0;
    std::vector<double> b;        // coefficients b_k, k = 0..k_max
    std::vector<double> norms;    // quadrature <h_k,h_k> on the sample window
    int quad_nodes = 0;
    double sigma_min = 0.0, sigma_max = 0.0;
    double tail_mass = 0.0;       // worst relative weighted mass outside window
    bool truncated = false;       // tail_mass > 1e-12
    double residual = 0.0;        // rms of V - sum b_k h_k under the weight
};

// b solves the weighted least-squares system on the sample window. When the
// window covers the weight (|sigma| >~ 10) the Gram matrix is numerically
// diagonal and this reduces to b_k = <V,h_k>_w / <h_k,h_k>_w.
inline SpectralProjection project(const std::vector<double>& sigma,
                                  const std::vector<double>& V, int k_max = 8) {
    if (sigma.size() != V.size() || sigma.size() < 8)
        throw std::invalid_argument("project: need >= 8 matching samples");
    HermiteBasis basis(k_max);
    const std::size_t m = sigma.size();
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = std::exp(-0.25 * sigma[i] * sigma[i]);

    // trapezoid weights on the (possibly nonuniform) grid
    std::vector<double> qw(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        double h = sigma[i + 1] - sigma[i];
        qw[i] += 0.5 * h;
        qw[i + 1] += 0.5 * h;
    }

    std::vector<std::vector<double>> hv(k_max + 1, std::vector<double>(m));
    for (int k = 0; k <= k_max; ++k) {
        Polynomial p = basis.polynomial(k);
        for (std::size_t i = 0; i < m; ++i) hv[k][i] = p(sigma[i]);
    }
    std::vector<std::vector<double>> G(k_max + 1, std::vector<double>(k_max + 1, 0.0));
    std::vector<double> rhs(k_max + 1, 0.0);
    for (int a = 0; a <= k_max; ++a) {
        for (int b = a; b <= k_max; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += qw[i] * w[i] * hv[a][i] * hv[b][i];
            G[a][b] = G[b][a] = acc;
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += qw[i] * w[i] * hv[a][i] * V[i];
        rhs[a] = acc;
    }

    SpectralProjection out;
    out.b = solve_spd(G, rhs);
    out.norms.resize(k_max + 1);
    for (int k = 0; k <= k_max; ++k) out.norms[k] = G[k][k];
    out.quad_nodes = static_cast<int>(m);
    out.sigma_min = sigma.front();
    out.sigma_max = sigma.back();
    out.tail_mass = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        double tail = 1.0 - G[k][k] / HermiteBasis::norm_closed_form(k);
        out.tail_mass = std::max(out.tail_mass, tail);
    }
    out.truncated = out.tail_mass > 1e-12;
    double ss = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double fit = 0.0;
        for (int k = 0; k <= k_max; ++k) fit += out.b[k] * hv[k][i];
        double r = V[i] - fit;
        ss += qw[i] * w[i] * r * r;
        wsum += qw[i] * w[i];
    }
    out.residual = std::sqrt(ss / std::max(wsum, 1e-300));
    return out;
}

inline double reconstruct(const SpectralProjection& proj, double sigma) {
    double acc = 0.0;
    for (std::size_t k = 0; k < proj.b.size(); ++k)
        acc += proj.b[k] * hermite(static_cast<int>(k))(sigma);
    return acc;
}

// ---------------------------------------------------------------------------
// nonlocal term I(sigma) = int_0^sigma U_ss / U, trapezoid with centered
// second differences; the grid must contain sigma = 0 (I(0) = 0).

inline std::vector<double> nonlocal_I(const std::vector<double>& sigma,
                                      const std::vector<double>& U) {
    if (sigma.size() != U.size() || sigma.size() < 5)
        throw std::invalid_argument("nonlocal_I: need >= 5 matching samples");
    const std::size_t m = U.size();
    for (double u : U)
        if (!(u > 0.0))
            throw std::domain_error("nonlocal_I: integrand pole (U touches zero)");
    const double h = sigma[1] - sigma[0];
    std::vector<double> integrand(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t a = (i == 0) ? 1 : (i == m - 1 ? m - 2 : i);
        double d2 = (U[a + 1] - 2.0 * U[a] + U[a - 1]) / (h * h);
        integrand[i] = d2 / U[i];
    }
    std::vector<double> I = cumtrapz(sigma, integrand);
    // shift so that I vanishes at sigma = 0
    std::size_t i0 = 0;
    double best = std::fabs(sigma[0]);
    for (std::size_t i = 1; i < m; ++i)
        if (std::fabs(sigma[i]) < best) {
            best = std::fabs(sigma[i]);
            i0 = i;
        }
    double off = I[i0];
    for (double& v : I) v -= off;
    return I;
}

// nonlinearity N(V) = [2(n-1) V_s^2 - V^2] / [2(1+V)] - n I V_s
inline std::vector<double> nonlinear_N(int n, const std::vector<double>& sigma,
                                       const std::vector<double>& V,
                                       const std::vector<double>& I) {
    if (sigma.size() != V.size() || V.size() != I.size() || V.size() < 5)
        throw std::invalid_argument("nonlinear_N: need matching samples");
    const std::size_t m = V.size();
    const double h = sigma[1] - sigma[0];
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (1.0 + V[i] <= 0.0)
            throw std::domain_error("nonlinear_N: 1+V <= 0, outside the parabolic regime");
        std::size_t a = (i == 0) ? 1 : (i == m - 1 ? m - 2 : i);
        double Vs = (V[a + 1] - V[a - 1]) / (2.0 * h);
        out[i] = (2.0 * (n - 1.0) * Vs * Vs - V[i] * V[i]) / (2.0 * (1.0 + V[i])) -
                 n * I[i] * Vs;
    }
    return out;
}

}  // namespace ricci
