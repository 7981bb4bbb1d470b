#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "chaoslab/errors.hpp"

namespace chaoslab {

/// Which log-correlated field a grid carries: the exact-scaling field X_t
/// or the star field Y_t = X_t - X_0.
enum class FieldKind { ExactX, StarY };

inline std::string_view to_string(FieldKind kind) {
    return kind == FieldKind::ExactX ? "exact-X" : "star-Y";
}

inline FieldKind field_kind_from_string(std::string_view s) {
    if (s == "exact-X") return FieldKind::ExactX;
    if (s == "star-Y") return FieldKind::StarY;
    throw ConfigError("unknown field kind '" + std::string(s) + "' (expected exact-X or star-Y)");
}

inline bool is_power_of_two(std::size_t m) { return m != 0 && (m & (m - 1)) == 0; }

/// Field on [0,1] discretized at the m cell centers (i + 1/2) / m.
struct FieldSpec {
    FieldKind kind = FieldKind::ExactX;
    double t = 0.0;
    std::size_t m = 1;

    void validate() const {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw ConfigError("field t must be finite and >= 0, got " + std::to_string(t));
        }
        if (!is_power_of_two(m)) {
            throw ConfigError("field grid size m must be a power of two, got " + std::to_string(m));
        }
    }

    double spacing() const { return 1.0 / static_cast<double>(m); }
    double point(std::size_t i) const { return (static_cast<double>(i) + 0.5) / static_cast<double>(m); }

    /// Default resolution coupling: e^{-t} equals the grid spacing.
    static FieldSpec coupled(FieldKind kind, std::size_t m) {
        FieldSpec spec{kind, std::log(static_cast<double>(m)), m};
        spec.validate();
        return spec;
    }
};

/// Covariance E X_t(x) X_t(y) of the exact-scaling field.
inline double cov_exact(double x, double y, double t) {
    const double d = std::abs(x - y);
    if (d > 1.0) return 0.0;
    if (d <= std::exp(-t)) return t + 1.0 - std::exp(t) * d;
    return -std::log(d);
}

/// Covariance E Y_t(x) Y_t(y) of the star field Y_t = X_t - X_0.
inline double cov_star(double x, double y, double t) {
    const double d = std::abs(x - y);
    if (d > 1.0) return 0.0;
    if (d <= std::exp(-t)) return t + d - std::exp(t) * d;
    return -std::log(d) + d - 1.0;
}

/// Stationary kernel as a function of the distance only.
inline double kernel_at_distance(FieldKind kind, double d, double t) {
    return kind == FieldKind::ExactX ? cov_exact(0.0, d, t) : cov_star(0.0, d, t);
}

inline double kernel(const FieldSpec& spec, double x, double y) {
    return kernel_at_distance(spec.kind, std::abs(x - y), spec.t);
}

/// Pointwise variance E field(x)^2.
inline double field_variance(FieldKind kind, double t) {
    return kind == FieldKind::ExactX ? t + 1.0 : t;
}

/// Variance log(1/len) of the cone variable X(I) for |I| = len.
inline double cone_variance(double len) {
    if (!(len > 0.0) || len > 1.0) {
        throw std::invalid_argument("cone_variance: interval length must lie in (0,1], got " +
                                    std::to_string(len));
    }
    return -std::log(len);
}

/// Max deviation of the kernel scaling identity over point pairs inside [0, len]:
/// cov_exact(x,y,t) - log(1/len) == cov_exact(x/len, y/len, t - log(1/len)).
inline double verify_scale_kernel(double len, double t, std::span<const std::pair<double, double>> pairs) {
    const double shift = cone_variance(len);
    if (t < shift) {
        throw std::invalid_argument("verify_scale_kernel: requires t >= log(1/len)");
    }
    double worst = 0.0;
    for (const auto& [x, y] : pairs) {
        if (x < 0.0 || y < 0.0 || x > len || y > len) {
            throw std::invalid_argument("verify_scale_kernel: pair outside [0, len]");
        }
        const double lhs = cov_exact(x, y, t) - shift;
        const double rhs = cov_exact(x / len, y / len, t - shift);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

} // namespace chaoslab
