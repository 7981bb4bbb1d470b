#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include "chaoslab/errors.hpp"
#include "chaoslab/fft.hpp"

namespace chaoslab::poisson {

// Solves F - tau*F = psi, tau = N(0, sigma^2), on a uniform periodic grid.
//
// Split: A = int x psi, c = 2A / sigma^2, psi~ = psi - c psi0 with
// psi0 = 1{x>0} - Phi(x/sigma). psi~ has zero mean and zero first moment so
// its solution decays and can be found by Fourier division; c times the unit
// step solves the psi0 part. Writing F = psi + c Phi(x/sigma) + G2 leaves
//   G2^ = psi~^ E,   E = e^{-s} / (1 - e^{-s}),  s = sigma^2 xi^2 / 2,
// where psi0^ = -i (1 - e^{-s}) / xi is used in closed form, so the jump of the
// step never enters an FFT.

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 1{x>0} - Phi(x/sigma), with the jump midpoint 0 at x = 0.
inline double psi0(double x, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("psi0: sigma must be positive");
    if (x > 0.0) return 0.5 * std::erfc(x / (sigma * std::numbers::sqrt2));
    if (x < 0.0) return -0.5 * std::erfc(-x / (sigma * std::numbers::sqrt2));
    return 0.0;
}

/// psi = Phi(x/s) - Phi(x/sqrt(s^2 + sigma^2)); solved exactly by F = Phi(x/s).
inline std::function<double(double)> smooth_step_psi(double s, double sigma) {
    if (!(s > 0.0 && sigma > 0.0)) throw ConfigError("smooth_step_psi: s and sigma must be positive");
    const double r = std::sqrt(s * s + sigma * sigma);
    return [s, r](double x) {
        // difference of upper tails is better conditioned for x > 0
        if (x > 0.0) return 0.5 * (std::erfc(x / (r * std::numbers::sqrt2)) - std::erfc(x / (s * std::numbers::sqrt2)));
        return 0.5 * (std::erfc(-x / (s * std::numbers::sqrt2)) - std::erfc(-x / (r * std::numbers::sqrt2)));
    };
}

struct Problem {
    double sigma = 1.0;
    double L = 20.0;
    double h = 0.01;
    std::vector<double> x;
    std::vector<double> psi;

    std::size_t size() const { return x.size(); }
};

/// Grid x_k = -L + k h, k = 0..n-1 with n = 2L/h; defaults L = 20 sigma, h = sigma / 100.
inline Problem make_problem(double sigma, const std::function<double(double)>& psi, double L = 0.0, double h = 0.0) {
    if (!(sigma > 0.0)) throw ConfigError("poisson: sigma must be positive");
    if (L == 0.0) L = 20.0 * sigma;
    if (h == 0.0) h = sigma / 100.0;
    if (!(L > 0.0 && h > 0.0 && h < L)) throw ConfigError("poisson: need 0 < h < L");
    const auto n = static_cast<std::size_t>(std::llround(2.0 * L / h));
    Problem p{sigma, L, h, std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t k = 0; k < n; ++k) {
        // symmetric pairs x_k = -x_{n-k} hold exactly in this form
        p.x[k] = (static_cast<double>(k) - static_cast<double>(n) / 2.0) * h;
        p.psi[k] = psi(p.x[k]);
    }
    return p;
}

struct Solution {
    std::vector<double> x;
    std::vector<double> F;
    double sigma = 1.0;
    double A = 0.0;          // trapezoid first moment of psi
    double asymptote = 0.0;  // mean of F over the top 10% of the grid
    double predicted = 0.0;  // 2A / sigma^2
    double residual = 0.0;   // max |F - tau*F - psi|
};

/// Fourier multiplier xi^2 e^{-s} / (1 - e^{-s}); limit 2 / sigma^2 at xi = 0.
inline double regularized_multiplier(double xi, double sigma) {
    const double s = 0.5 * sigma * sigma * xi * xi;
    if (s == 0.0) return 2.0 / (sigma * sigma);
    return xi * xi * std::exp(-s) / -std::expm1(-s);
}

namespace detail {

inline std::vector<double> frequencies(std::size_t n, double h) {
    std::vector<double> xi(n);
    const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * h);
    for (std::size_t k = 0; k < n; ++k) {
        const auto signed_k = k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
        xi[k] = base * signed_k;
    }
    return xi;
}

inline void check_problem(const Problem& p) {
    if (p.x.size() != p.psi.size() || p.x.size() < 16) throw ConfigError("poisson: grid and psi sizes disagree");
    double peak = 0.0;
    double integral = 0.0;
    for (double v : p.psi) {
        peak = std::max(peak, std::abs(v));
        integral += v * p.h;
    }
    const std::size_t edge = p.x.size() / 10;
    double edge_peak = 0.0;
    for (std::size_t k = 0; k < edge; ++k) {
        edge_peak = std::max({edge_peak, std::abs(p.psi[k]), std::abs(p.psi[p.x.size() - 1 - k])});
    }
    if (edge_peak > 1e-6 * peak) {
        std::ostringstream msg;
        msg << "poisson: psi does not decay at the grid edges (max on outer 10% = " << edge_peak << ", max = " << peak << ")";
        throw ConfigError(msg.str());
    }
    if (std::abs(integral) > 1e-6 * std::max(1.0, peak)) {
        std::ostringstream msg;
        msg << "poisson: psi must integrate to 0, quadrature gives " << integral;
        throw ConfigError(msg.str());
    }
}

} // namespace detail

inline Solution solve(const Problem& p) {
    detail::check_problem(p);
    const std::size_t n = p.size();
    const double h = p.h;
    const double sigma = p.sigma;
    const double var = sigma * sigma;
    const auto xi = detail::frequencies(n, h);

    Solution sol{p.x, std::vector<double>(n), sigma};
    double second = 0.0;
    double peak = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sol.A += p.x[k] * p.psi[k] * h;
        second += p.x[k] * p.x[k] * p.psi[k] * h;
        peak = std::max(peak, std::abs(p.psi[k]));
    }
    const double c = 2.0 * sol.A / var;
    sol.predicted = c;

    // Spectral work is done in "grid" coordinates: with P = DFT(psi),
    // psi^(xi_k) = h e^{i xi_k L0} P_k where L0 = -x_0.
    const double L0 = -p.x[0];
    fft::ComplexBuffer in(n);
    fft::ComplexBuffer P(n);
    for (std::size_t k = 0; k < n; ++k) {
        in[k][0] = p.psi[k];
        in[k][1] = 0.0;
    }
    fft::forward(in, P);

    // D_k = G2^(xi_k) e^{-i xi_k L0} / h, so that G2_j = (1/n) sum_k D_k e^{2 pi i jk/n}.
    fft::ComplexBuffer D(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> d;
        if (k == 0) {
            // limit of psi~^ E at xi = 0: -(int x^2 psi~) / sigma^2, and psi0 is odd
            d = -second / var / h;
        } else {
            const double s = 0.5 * var * xi[k] * xi[k];
            const double e = std::exp(-s) / -std::expm1(-s);
            const std::complex<double> pk(P[k][0], P[k][1]);
            const std::complex<double> step = std::complex<double>(0.0, c * -std::expm1(-s) / xi[k]) *
                                              std::polar(1.0, -xi[k] * L0) / h;
            d = (pk + step) * e;
        }
        D[k][0] = d.real();
        D[k][1] = d.imag();
    }
    fft::ComplexBuffer g2(n);
    fft::backward(D, g2);
    std::vector<double> decaying(n); // psi + G2
    for (std::size_t k = 0; k < n; ++k) {
        decaying[k] = p.psi[k] + g2[k][0] / static_cast<double>(n);
        sol.F[k] = decaying[k] + c * normal_cdf(p.x[k] / sigma);
    }

    // Residual: tau acts spectrally on the decaying part; tau * Phi(x/sigma) = Phi(x/(sigma sqrt 2)).
    for (std::size_t k = 0; k < n; ++k) {
        in[k][0] = decaying[k];
        in[k][1] = 0.0;
    }
    fft::ComplexBuffer Q(n);
    fft::forward(in, Q);
    for (std::size_t k = 0; k < n; ++k) {
        const double damp = std::exp(-0.5 * var * xi[k] * xi[k]);
        Q[k][0] *= damp;
        Q[k][1] *= damp;
    }
    fft::ComplexBuffer conv(n);
    fft::backward(Q, conv);
    std::size_t worst_at = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double tau_f = conv[k][0] / static_cast<double>(n) + c * normal_cdf(p.x[k] / (sigma * std::numbers::sqrt2));
        const double r = std::abs(sol.F[k] - tau_f - p.psi[k]);
        if (r > sol.residual) {
            sol.residual = r;
            worst_at = k;
        }
    }
    const double tol = 1e-6 * std::max(1.0, peak);
    if (!(sol.residual <= tol)) {
        std::ostringstream msg;
        msg << "poisson: residual " << sol.residual << " exceeds " << tol << " (worst at x = " << p.x[worst_at] << ")";
        throw NumericError(msg.str());
    }

    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    double acc = 0.0;
    for (std::size_t k = n - tail; k < n; ++k) acc += sol.F[k];
    sol.asymptote = acc / static_cast<double>(tail);
    return sol;
}

/// Largest multiplier value over the discrete frequencies of a grid.
inline double max_multiplier(std::size_t n, double h, double sigma) {
    double best = 0.0;
    for (double xi : detail::frequencies(n, h)) best = std::max(best, regularized_multiplier(xi, sigma));
    return best;
}

} // namespace chaoslab::poisson
