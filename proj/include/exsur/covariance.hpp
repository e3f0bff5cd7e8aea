#ifndef EXSUR_COVARIANCE_HPP
#define EXSUR_COVARIANCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "exsur/error.hpp"
#include "exsur/rng.hpp"

namespace exsur {

using Point = Eigen::VectorXd;
using PointSet = std::vector<Point>;

enum class Family { Matern, PowerLinear, Cubic, PolynomialGC };

inline std::string_view family_name(Family f) {
    switch (f) {
        case Family::Matern: return "matern";
        case Family::PowerLinear: return "power_linear";
        case Family::Cubic: return "cubic";
        case Family::PolynomialGC: return "polynomial";
    }
    return "unknown";
}

inline Family parse_family(std::string_view name) {
    if (name == "matern") return Family::Matern;
    if (name == "power_linear") return Family::PowerLinear;
    if (name == "cubic") return Family::Cubic;
    if (name == "polynomial") return Family::PolynomialGC;
    throw InvalidArgument("unknown covariance family '" + std::string(name) + "'");
}

/// Stationary generalized covariance k(h), isotropic in ‖h‖₂.
///
/// Parameter layout per family:
///   matern        (scale, range, smoothness)  smoothness in {0.5, 1.5, 2.5}
///   power_linear  (scale)                      k(h) = -scale ‖h‖
///   cubic         (scale)                      k(h) =  scale ‖h‖³
///   polynomial    (b_0, ..., b_S)              k(h) = Σ_s (-1)^{s+1} b_s ‖h‖^{2s+1}
///
/// The conditional positive definiteness order is the smallest l such that
/// k(λ,λ) ≥ 0 for every finite-support λ annihilating polynomials of
/// degree ≤ l.
class GeneralizedCovariance {
public:
    static GeneralizedCovariance matern(double scale, double range, double smoothness) {
        return GeneralizedCovariance(Family::Matern, {scale, range, smoothness});
    }
    static GeneralizedCovariance power_linear(double scale = 1.0) {
        return GeneralizedCovariance(Family::PowerLinear, {scale});
    }
    static GeneralizedCovariance cubic(double scale = 1.0) {
        return GeneralizedCovariance(Family::Cubic, {scale});
    }
    static GeneralizedCovariance polynomial(std::vector<double> coeffs) {
        return GeneralizedCovariance(Family::PolynomialGC, std::move(coeffs));
    }

    GeneralizedCovariance(Family family, std::vector<double> params)
        : family_(family), params_(std::move(params)) {
        validate();
    }

    [[nodiscard]] Family family() const noexcept { return family_; }
    [[nodiscard]] const std::vector<double>& params() const noexcept { return params_; }
    [[nodiscard]] std::size_t cpd_order() const noexcept { return cpd_order_; }

    /// Proper (positive definite) covariance, as opposed to a purely
    /// conditionally positive definite one.
    [[nodiscard]] bool is_positive_definite() const noexcept { return family_ == Family::Matern; }

    /// Magnitude used for numerical tolerances.
    [[nodiscard]] double scale() const noexcept {
        if (family_ == Family::PolynomialGC) {
            double s = 0.0;
            for (double b : params_) s += b;
            return s;
        }
        return params_[0];
    }

    /// Decay exponent ν of an algebraic spectral density (1+‖ω‖²)^{-ν} in
    /// dimension d. Only Matérn has a two-sided bound of that form.
    [[nodiscard]] std::optional<double> spectral_nu(std::size_t d) const {
        if (family_ == Family::Matern) return params_[2] + 0.5 * static_cast<double>(d);
        return std::nullopt;
    }

    [[nodiscard]] double radial(double r) const {
        switch (family_) {
            case Family::Matern: {
                const double scale = params_[0];
                const double t = r / params_[1];
                const double nu = params_[2];
                if (nu == 0.5) return scale * std::exp(-t);
                if (nu == 1.5) {
                    const double a = std::sqrt(3.0) * t;
                    return scale * (1.0 + a) * std::exp(-a);
                }
                const double a = std::sqrt(5.0) * t;
                return scale * (1.0 + a + a * a / 3.0) * std::exp(-a);
            }
            case Family::PowerLinear: return -params_[0] * r;
            case Family::Cubic: return params_[0] * r * r * r;
            case Family::PolynomialGC: {
                double acc = 0.0;
                double pw = r;  // r^{2s+1}
                for (std::size_t s = 0; s < params_.size(); ++s) {
                    const double sign = (s % 2 == 0) ? -1.0 : 1.0;
                    acc += sign * params_[s] * pw;
                    pw *= r * r;
                }
                return acc;
            }
        }
        return 0.0;
    }

    [[nodiscard]] double operator()(const Point& h) const { return radial(h.norm()); }

    [[nodiscard]] double between(const Point& x, const Point& y) const {
        return radial((x - y).norm());
    }

    [[nodiscard]] double at_zero() const { return radial(0.0); }

    /// Gram matrix k(x_i - x_j).
    [[nodiscard]] Eigen::MatrixXd gram(const PointSet& pts) const {
        const auto n = static_cast<Eigen::Index>(pts.size());
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            k(i, i) = at_zero();
            for (Eigen::Index j = 0; j < i; ++j) {
                const double v = between(pts[i], pts[j]);
                k(i, j) = v;
                k(j, i) = v;
            }
        }
        return k;
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << family_name(family_) << '(';
        for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? ", " : "") << params_[i];
        os << ')';
        return os.str();
    }

private:
    void validate() {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(params_.begin(), params_.end(), finite))
            throw InvalidArgument("covariance parameters must be finite");
        switch (family_) {
            case Family::Matern:
                if (params_.size() != 3)
                    throw InvalidArgument("matern expects (scale, range, smoothness)");
                if (params_[0] <= 0.0 || params_[1] <= 0.0)
                    throw InvalidArgument("matern scale and range must be positive");
                if (params_[2] != 0.5 && params_[2] != 1.5 && params_[2] != 2.5)
                    throw InvalidArgument("matern smoothness must be 0.5, 1.5 or 2.5");
                cpd_order_ = 0;
                break;
            case Family::PowerLinear:
            case Family::Cubic:
                if (params_.size() != 1 || params_[0] <= 0.0)
                    throw InvalidArgument(std::string(family_name(family_)) +
                                          " expects a single positive scale");
                cpd_order_ = family_ == Family::Cubic ? 1 : 0;
                break;
            case Family::PolynomialGC: {
                if (params_.empty()) throw InvalidArgument("polynomial expects coefficients b_0..b_S");
                if (std::any_of(params_.begin(), params_.end(), [](double b) { return b < 0.0; }))
                    throw InvalidArgument("polynomial coefficients must be non-negative");
                auto last = std::find_if(params_.rbegin(), params_.rend(),
                                         [](double b) { return b > 0.0; });
                if (last == params_.rend())
                    throw InvalidArgument("polynomial needs at least one positive coefficient");
                cpd_order_ = static_cast<std::size_t>(std::distance(last, params_.rend()) - 1);
                break;
            }
        }
    }

    Family family_;
    std::vector<double> params_;
    std::size_t cpd_order_ = 0;
};

/// Monomials x^i with |i| ≤ degree in graded lexicographic order: by total
/// degree first, then lexicographically descending exponents, so for d = 2,
/// degree 2 the order is 1, x1, x2, x1², x1 x2, x2².
class MonomialBasis {
public:
    MonomialBasis(std::size_t dimension, std::size_t degree)
        : dim_(dimension), degree_(degree) {
        if (dimension == 0) throw InvalidArgument("basis dimension must be positive");
        std::vector<int> current(dim_, 0);
        for (std::size_t total = 0; total <= degree_; ++total) {
            fill_degree(0, static_cast<int>(total), current);
        }
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
    [[nodiscard]] std::size_t degree() const noexcept { return degree_; }
    [[nodiscard]] std::size_t size() const noexcept { return exponents_.size(); }
    [[nodiscard]] const std::vector<std::vector<int>>& exponents() const noexcept { return exponents_; }

    [[nodiscard]] Eigen::VectorXd eval(const Point& x) const {
        if (static_cast<std::size_t>(x.size()) != dim_)
            throw InvalidArgument("basis evaluated at a point of wrong dimension");
        Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
        for (std::size_t k = 0; k < exponents_.size(); ++k) {
            double v = 1.0;
            for (std::size_t c = 0; c < dim_; ++c) {
                for (int e = 0; e < exponents_[k][c]; ++e) v *= x[static_cast<Eigen::Index>(c)];
            }
            out[static_cast<Eigen::Index>(k)] = v;
        }
        return out;
    }

    /// q × n matrix with column j equal to eval(points[j]).
    [[nodiscard]] Eigen::MatrixXd eval_matrix(const PointSet& points) const {
        Eigen::MatrixXd p(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(points.size()));
        for (std::size_t j = 0; j < points.size(); ++j) p.col(static_cast<Eigen::Index>(j)) = eval(points[j]);
        return p;
    }

private:
    void fill_degree(std::size_t coord, int remaining, std::vector<int>& current) {
        if (coord + 1 == dim_) {
            current[coord] = remaining;
            exponents_.push_back(current);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            current[coord] = e;
            fill_degree(coord + 1, remaining - e, current);
        }
        current[coord] = 0;
    }

    std::size_t dim_;
    std::size_t degree_;
    std::vector<std::vector<int>> exponents_;
};

inline double eval_gencov(const GeneralizedCovariance& model, const Point& h) { return model(h); }

inline Eigen::VectorXd eval_basis(const MonomialBasis& basis, const Point& x) { return basis.eval(x); }

struct CpdReport {
    bool passed = true;
    double min_quadratic_form = 0.0;
    double tolerance = 0.0;
    std::size_t trials = 0;
    std::size_t failures = 0;
};

struct CpdCheckOptions {
    /// Points are drawn uniformly in [0, extent]^d.
    double extent = 1.0;
};

/// Randomized check of conditional positive definiteness: random point sets,
/// random coefficient vectors projected onto {λ : Pλ = 0}, normalized to unit
/// length; every quadratic form λᵀKλ must be ≥ -1e-9·scale.
inline CpdReport check_cpd(const GeneralizedCovariance& model, const MonomialBasis& basis,
                           std::size_t n_trials, std::size_t n_points, std::uint64_t rng_seed,
                           CpdCheckOptions options = {}) {
    if (basis.degree() < model.cpd_order())
        throw OrderMismatch("basis degree " + std::to_string(basis.degree()) +
                            " is below the covariance order " + std::to_string(model.cpd_order()));
    if (n_points <= basis.size())
        throw InvalidArgument("check_cpd needs more points than basis functions");

    Rng rng(derive_seed(rng_seed, "check_cpd"));
    std::uniform_real_distribution<double> unif(0.0, options.extent);
    std::normal_distribution<double> gauss(0.0, 1.0);

    CpdReport report;
    report.tolerance = 1e-9 * model.scale();
    report.min_quadratic_form = std::numeric_limits<double>::infinity();
    const auto d = static_cast<Eigen::Index>(basis.dimension());
    const auto n = static_cast<Eigen::Index>(n_points);

    for (std::size_t t = 0; t < n_trials; ++t) {
        PointSet pts(n_points, Point(d));
        for (auto& p : pts)
            for (Eigen::Index c = 0; c < d; ++c) p[c] = unif(rng);
        Eigen::VectorXd lambda(n);
        for (Eigen::Index i = 0; i < n; ++i) lambda[i] = gauss(rng);

        const Eigen::MatrixXd pt = basis.eval_matrix(pts).transpose();  // n × q
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(pt);
        const Eigen::MatrixXd q_thin =
            qr.householderQ() * Eigen::MatrixXd::Identity(n, static_cast<Eigen::Index>(basis.size()));
        lambda -= q_thin * (q_thin.transpose() * lambda);
        const double norm = lambda.norm();
        if (norm == 0.0) continue;
        lambda /= norm;

        const double qf = lambda.dot(model.gram(pts) * lambda);
        report.min_quadratic_form = std::min(report.min_quadratic_form, qf);
        ++report.trials;
        if (qf < -report.tolerance) {
            ++report.failures;
            report.passed = false;
        }
    }
    return report;
}

}  // namespace exsur

#endif  // EXSUR_COVARIANCE_HPP
