#ifndef EXSUR_DISTRIBUTION_HPP
#define EXSUR_DISTRIBUTION_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "exsur/covariance.hpp"
#include "exsur/error.hpp"
#include "exsur/gaussian.hpp"
#include "exsur/rng.hpp"

namespace exsur {

enum class DistributionKind { GaussianDiag, GaussianFull, UniformBox };

inline std::string_view distribution_name(DistributionKind k) {
    switch (k) {
        case DistributionKind::GaussianDiag: return "gaussian_diag";
        case DistributionKind::GaussianFull: return "gaussian_full";
        case DistributionKind::UniformBox: return "uniform_box";
    }
    return "unknown";
}

/// The input measure μ on X: a sampler plus a density.
class InputDistribution {
public:
    static InputDistribution gaussian_diag(Eigen::VectorXd mean, Eigen::VectorXd sd) {
        if (mean.size() != sd.size() || mean.size() == 0)
            throw InvalidArgument("gaussian_diag: mean and sd must have equal positive length");
        for (Eigen::Index i = 0; i < sd.size(); ++i)
            if (!(sd[i] > 0.0) || !std::isfinite(sd[i]) || !std::isfinite(mean[i]))
                throw InvalidArgument("gaussian_diag: standard deviations must be positive and finite");
        InputDistribution d(DistributionKind::GaussianDiag, std::move(mean));
        d.b_ = std::move(sd);
        return d;
    }

    static InputDistribution gaussian_full(Eigen::VectorXd mean, const Eigen::MatrixXd& cov) {
        if (cov.rows() != mean.size() || cov.cols() != mean.size() || mean.size() == 0)
            throw InvalidArgument("gaussian_full: covariance must be d × d");
        if (!cov.isApprox(cov.transpose(), 1e-12))
            throw InvalidArgument("gaussian_full: covariance must be symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw InvalidArgument("gaussian_full: covariance must be positive definite");
        InputDistribution d(DistributionKind::GaussianFull, std::move(mean));
        d.chol_ = llt.matrixL();
        d.log_det_ = 2.0 * d.chol_.diagonal().array().log().sum();
        return d;
    }

    static InputDistribution uniform_box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
        if (lower.size() != upper.size() || lower.size() == 0)
            throw InvalidArgument("uniform_box: bounds must have equal positive length");
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
                throw InvalidArgument("uniform_box: need finite lower < upper in every coordinate");
        InputDistribution d(DistributionKind::UniformBox, std::move(lower));
        d.b_ = std::move(upper);
        return d;
    }

    [[nodiscard]] DistributionKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(a_.size()); }

    /// Mean vector (Gaussian) or lower bounds (box).
    [[nodiscard]] const Eigen::VectorXd& first() const noexcept { return a_; }
    /// Standard deviations (diag Gaussian) or upper bounds (box).
    [[nodiscard]] const Eigen::VectorXd& second() const noexcept { return b_; }
    [[nodiscard]] Eigen::MatrixXd covariance() const {
        if (kind_ == DistributionKind::GaussianFull) return chol_ * chol_.transpose();
        if (kind_ == DistributionKind::GaussianDiag) return b_.array().square().matrix().asDiagonal();
        throw InvalidArgument("covariance() is only defined for Gaussian distributions");
    }

    [[nodiscard]] Point sample(Rng& rng) const {
        const auto d = a_.size();
        Point x(d);
        if (kind_ == DistributionKind::UniformBox) {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            for (Eigen::Index i = 0; i < d; ++i) x[i] = a_[i] + (b_[i] - a_[i]) * unif(rng);
            return x;
        }
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index i = 0; i < d; ++i) x[i] = gauss(rng);
        if (kind_ == DistributionKind::GaussianDiag) return a_ + b_.cwiseProduct(x);
        return a_ + chol_ * x;
    }

    /// l independent draws from a stream seeded with `seed`.
    [[nodiscard]] PointSet samples(std::size_t l, std::uint64_t seed) const {
        Rng rng(seed);
        PointSet out;
        out.reserve(l);
        for (std::size_t i = 0; i < l; ++i) out.push_back(sample(rng));
        return out;
    }

    /// Image of a point of the open unit cube under the inverse Rosenblatt
    /// map; used for quasi-random probe sets.
    [[nodiscard]] Point from_unit(const Eigen::VectorXd& u) const {
        const auto d = a_.size();
        Point x(d);
        if (kind_ == DistributionKind::UniformBox) {
            for (Eigen::Index i = 0; i < d; ++i) x[i] = a_[i] + (b_[i] - a_[i]) * u[i];
            return x;
        }
        for (Eigen::Index i = 0; i < d; ++i) x[i] = gaussian_quantile(u[i]);
        if (kind_ == DistributionKind::GaussianDiag) return a_ + b_.cwiseProduct(x);
        return a_ + chol_ * x;
    }

    [[nodiscard]] double density(const Point& x) const {
        const auto d = a_.size();
        if (x.size() != d) throw InvalidArgument("density evaluated at a point of wrong dimension");
        if (kind_ == DistributionKind::UniformBox) {
            double vol = 1.0;
            for (Eigen::Index i = 0; i < d; ++i) {
                if (x[i] < a_[i] || x[i] > b_[i]) return 0.0;
                vol *= b_[i] - a_[i];
            }
            return 1.0 / vol;
        }
        const double norm_const = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(d));
        if (kind_ == DistributionKind::GaussianDiag) {
            const Eigen::ArrayXd z = (x - a_).array() / b_.array();
            return norm_const * std::exp(-0.5 * z.square().sum()) / b_.prod();
        }
        const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(x - a_);
        return norm_const * std::exp(-0.5 * z.squaredNorm() - 0.5 * log_det_);
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << distribution_name(kind_);
        return os.str();
    }

private:
    InputDistribution(DistributionKind kind, Eigen::VectorXd a) : kind_(kind), a_(std::move(a)) {}

    DistributionKind kind_;
    Eigen::VectorXd a_;
    Eigen::VectorXd b_;
    Eigen::MatrixXd chol_;
    double log_det_ = 0.0;
};

/// Halton sequence point `index` (1-based) in (0,1)^d.
inline Eigen::VectorXd halton_point(std::size_t index, std::size_t d) {
    static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (d > std::size(primes)) throw InvalidArgument("halton_point supports at most 12 dimensions");
    Eigen::VectorXd u(static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < d; ++c) {
        double f = 1.0;
        double r = 0.0;
        std::size_t i = index;
        while (i > 0) {
            f /= primes[c];
            r += f * static_cast<double>(i % primes[c]);
            i /= primes[c];
        }
        u[static_cast<Eigen::Index>(c)] = r;
    }
    return u;
}

}  // namespace exsur

#endif  // EXSUR_DISTRIBUTION_HPP
