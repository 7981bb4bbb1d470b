#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "chaoslab/binary.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/fft.hpp"
#include "chaoslab/field_kernels.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

using CovarianceMatrix = Eigen::MatrixXd;

/// One realization of a field on the grid of `spec`.
struct FieldSample {
    FieldSpec spec;
    std::vector<double> values;
    std::vector<double> variance_profile;
};

inline std::vector<double> variance_profile(const FieldSpec& spec) {
    return std::vector<double>(spec.m, kernel(spec, 0.0, 0.0));
}

/// Kernel evaluated at all pairs of grid centers.
inline CovarianceMatrix build_covariance(const FieldSpec& spec) {
    spec.validate();
    const auto m = static_cast<Eigen::Index>(spec.m);
    CovarianceMatrix cov(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel(spec, spec.point(static_cast<std::size_t>(i)), spec.point(static_cast<std::size_t>(j)));
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }
    return cov;
}

/// Lower Cholesky factor with the one-shot diagonal jitter retry.
class CholeskyFactor {
public:
    CholeskyFactor(const CovarianceMatrix& cov, double jitter) {
        if (cov.rows() != cov.cols()) throw NumericError("covariance matrix is not square");
        Eigen::LLT<CovarianceMatrix> llt(cov);
        if (llt.info() != Eigen::Success) {
            CovarianceMatrix shifted = cov;
            shifted.diagonal().array() += jitter;
            llt.compute(shifted);
            if (llt.info() != Eigen::Success) {
                Eigen::SelfAdjointEigenSolver<CovarianceMatrix> eig(cov, Eigen::EigenvaluesOnly);
                std::ostringstream msg;
                msg << "Cholesky factorization failed after jitter " << jitter
                    << "; smallest eigenvalue estimate " << eig.eigenvalues().minCoeff();
                throw NumericError(msg.str());
            }
            jitter_used_ = jitter;
        }
        lower_ = llt.matrixL();
    }

    /// Factor for a field covariance with jitter 1e-12 (t + 1).
    explicit CholeskyFactor(const FieldSpec& spec) : CholeskyFactor(build_covariance(spec), 1e-12 * (spec.t + 1.0)) {}

    const Eigen::MatrixXd& lower() const noexcept { return lower_; }
    double jitter_used() const noexcept { return jitter_used_; }
    Eigen::Index size() const noexcept { return lower_.rows(); }

    Eigen::VectorXd sample(RngStream& rng) const {
        Eigen::VectorXd z(lower_.rows());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
        return apply(z);
    }

    /// L z for a caller-supplied standard normal vector (common random numbers).
    Eigen::VectorXd apply(const Eigen::VectorXd& z) const { return lower_.triangularView<Eigen::Lower>() * z; }

private:
    Eigen::MatrixXd lower_;
    double jitter_used_ = 0.0;
};

inline FieldSample sample_cholesky(const FieldSpec& spec, const CholeskyFactor& factor, RngStream& rng) {
    if (factor.size() != static_cast<Eigen::Index>(spec.m)) throw NumericError("factor size does not match spec");
    const Eigen::VectorXd v = factor.sample(rng);
    return {spec, std::vector<double>(v.data(), v.data() + v.size()), variance_profile(spec)};
}

/// Circulant-embedding sampler for the stationary kernels.
///
/// The kernel row is wrapped onto a circle of size M >= 2m; M is doubled until
/// the circulant spectrum is nonnegative. Residual negative eigenvalues are
/// clipped to zero and their share of the spectral mass is reported; above
/// `max_clip` construction fails.
class CirculantSampler {
public:
    explicit CirculantSampler(const FieldSpec& spec, double max_clip = 1e-8, int max_doublings = 4) : spec_(spec) {
        spec_.validate();
        if (spec_.m < 2) throw ConfigError("circulant sampler requires m >= 2");
        std::size_t big = 2 * spec_.m;
        for (int attempt = 0;; ++attempt, big *= 2) {
            std::vector<double> lambda = spectrum(big);
            double neg = 0.0;
            double total = 0.0;
            for (std::size_t k = 0; k < lambda.size(); ++k) {
                const double mult = (k == 0 || 2 * k == big) ? 1.0 : 2.0;
                total += mult * std::abs(lambda[k]);
                if (lambda[k] < 0.0) neg += mult * -lambda[k];
            }
            const double ratio = total > 0.0 ? neg / total : 0.0;
            // Roundoff-level negatives are accepted at once; anything larger
            // first gets a bigger embedding.
            if (ratio <= 1e-13 || attempt == max_doublings) {
                if (ratio > max_clip) {
                    std::ostringstream msg;
                    msg << "circulant embedding of size " << big << " has negative spectral mass " << ratio
                        << " > allowed " << max_clip;
                    throw NumericError(msg.str());
                }
                embedding_ = big;
                clipped_mass_ = ratio;
                scale_.resize(lambda.size());
                for (std::size_t k = 0; k < lambda.size(); ++k) {
                    scale_[k] = std::sqrt(std::max(lambda[k], 0.0) / static_cast<double>(big));
                }
                min_eigenvalue_ = *std::min_element(lambda.begin(), lambda.end());
                break;
            }
        }
    }

    const FieldSpec& spec() const noexcept { return spec_; }
    std::size_t embedding_size() const noexcept { return embedding_; }
    double clipped_mass() const noexcept { return clipped_mass_; }
    double min_eigenvalue() const noexcept { return min_eigenvalue_; }

    /// Writes one field realization into out[0..m).
    void sample_into(RngStream& rng, std::span<double> out) const {
        const std::size_t half = embedding_ / 2;
        fft::ComplexBuffer coef(half + 1);
        fft::RealBuffer y(embedding_);
        coef[0][0] = scale_[0] * rng.normal();
        coef[0][1] = 0.0;
        const double r = std::sqrt(0.5);
        for (std::size_t k = 1; k < half; ++k) {
            const double a = rng.normal();
            const double b = rng.normal();
            coef[k][0] = scale_[k] * r * a;
            coef[k][1] = scale_[k] * r * b;
        }
        coef[half][0] = scale_[half] * rng.normal();
        coef[half][1] = 0.0;
        fft::c2r(coef, y);
        std::copy_n(y.data(), spec_.m, out.begin());
    }

    FieldSample sample(RngStream& rng) const {
        FieldSample s{spec_, std::vector<double>(spec_.m), variance_profile(spec_)};
        sample_into(rng, s.values);
        return s;
    }

private:
    std::vector<double> spectrum(std::size_t big) const {
        fft::RealBuffer row(big);
        const double h = spec_.spacing();
        for (std::size_t k = 0; k < big; ++k) {
            const std::size_t lag = std::min(k, big - k);
            row[k] = kernel_at_distance(spec_.kind, static_cast<double>(lag) * h, spec_.t);
        }
        fft::ComplexBuffer out(big / 2 + 1);
        fft::r2c(row, out);
        std::vector<double> lambda(big / 2 + 1);
        for (std::size_t k = 0; k < lambda.size(); ++k) lambda[k] = out[k][0];
        return lambda;
    }

    FieldSpec spec_;
    std::size_t embedding_ = 0;
    double clipped_mass_ = 0.0;
    double min_eigenvalue_ = 0.0;
    std::vector<double> scale_;
};

inline FieldSample sample_circulant(const FieldSpec& spec, RngStream& rng) {
    return CirculantSampler(spec).sample(rng);
}

enum class SamplerChoice { Auto, Cholesky, Circulant };

/// Holds whichever sampler a spec calls for; Auto uses dense factorization
/// only for tiny grids and circulant embedding otherwise.
class FieldSampler {
public:
    explicit FieldSampler(const FieldSpec& spec, SamplerChoice choice = SamplerChoice::Auto) : spec_(spec) {
        spec_.validate();
        if (choice == SamplerChoice::Auto) {
            choice = spec_.m < 2 ? SamplerChoice::Cholesky : SamplerChoice::Circulant;
        }
        if (choice == SamplerChoice::Cholesky) {
            cholesky_.emplace(spec_);
        } else {
            circulant_.emplace(spec_);
        }
    }

    const FieldSpec& spec() const noexcept { return spec_; }

    void sample_into(RngStream& rng, std::span<double> out) const {
        if (circulant_) {
            circulant_->sample_into(rng, out);
        } else {
            const Eigen::VectorXd v = cholesky_->sample(rng);
            std::copy(v.data(), v.data() + v.size(), out.begin());
        }
    }

    FieldSample sample(RngStream& rng) const {
        FieldSample s{spec_, std::vector<double>(spec_.m), variance_profile(spec_)};
        sample_into(rng, s.values);
        return s;
    }

private:
    FieldSpec spec_;
    std::optional<CholeskyFactor> cholesky_;
    std::optional<CirculantSampler> circulant_;
};

/// Largest ratio E|Y(x)-Y(y)|^2 / (2^{n+1} |x-y|) over grid pairs of a star
/// field at t = n log 2; the increment bound holds iff the result is <= 1.
inline double star_increment_ratio(unsigned n, std::size_t m) {
    const double t = n * std::log(2.0);
    const double bound = std::ldexp(2.0, static_cast<int>(n));
    double worst = 0.0;
    const double var = cov_star(0.0, 0.0, t);
    for (std::size_t lag = 1; lag < m; ++lag) {
        const double d = static_cast<double>(lag) / static_cast<double>(m);
        const double incr = 2.0 * (var - cov_star(0.0, d, t));
        worst = std::max(worst, incr / (bound * d));
    }
    return worst;
}

// Raw field export: 32-byte header then m little-endian float64 values.
//   [0,4) "CHAO"  [4,8) version u32  [8,12) payload type u32 (1 = field)
//   [12,16) kind u32 (0 exact-X, 1 star-Y)  [16,24) t f64  [24,32) m u64
inline constexpr std::uint32_t kFieldFormatVersion = 1;
inline constexpr std::uint32_t kPayloadField = 1;

inline void write_field_sample(std::ostream& os, const FieldSample& s) {
    binary::put_magic(os);
    binary::put<std::uint32_t>(os, kFieldFormatVersion);
    binary::put<std::uint32_t>(os, kPayloadField);
    binary::put<std::uint32_t>(os, s.spec.kind == FieldKind::ExactX ? 0U : 1U);
    binary::put<double>(os, s.spec.t);
    binary::put<std::uint64_t>(os, s.spec.m);
    for (double v : s.values) binary::put<double>(os, v);
}

inline FieldSample read_field_sample(std::istream& is) {
    binary::expect_magic(is);
    if (binary::get<std::uint32_t>(is) != kFieldFormatVersion) throw IoError("unsupported field format version");
    if (binary::get<std::uint32_t>(is) != kPayloadField) throw IoError("payload is not a field sample");
    const auto kind = binary::get<std::uint32_t>(is);
    if (kind > 1) throw IoError("bad field kind in header");
    FieldSpec spec{kind == 0 ? FieldKind::ExactX : FieldKind::StarY, binary::get<double>(is),
                   static_cast<std::size_t>(binary::get<std::uint64_t>(is))};
    spec.validate();
    FieldSample s{spec, std::vector<double>(spec.m), variance_profile(spec)};
    for (auto& v : s.values) v = binary::get<double>(is);
    return s;
}

} // namespace chaoslab
