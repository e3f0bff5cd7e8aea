#ifndef EXSUR_KRIGING_HPP
#define EXSUR_KRIGING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "exsur/covariance.hpp"
#include "exsur/distribution.hpp"
#include "exsur/error.hpp"

namespace exsur {

/// Points closer than this are treated as the same location.
inline constexpr double kDuplicateTolerance = 1e-12;

/// Evaluated design: points x_i, observations f(x_i) and the observation
/// noise covariance K_N (empty or all-zero for exact observations).
struct DesignSet {
    PointSet points;
    std::vector<double> values;
    Eigen::MatrixXd noise_cov;

    static DesignSet exact(PointSet pts, std::vector<double> vals) {
        return DesignSet{std::move(pts), std::move(vals), Eigen::MatrixXd()};
    }

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
    [[nodiscard]] std::size_t dimension() const noexcept {
        return points.empty() ? 0 : static_cast<std::size_t>(points.front().size());
    }
    [[nodiscard]] bool noise_free() const {
        return noise_cov.size() == 0 || noise_cov.cwiseAbs().maxCoeff() == 0.0;
    }

    void validate() const {
        if (points.size() != values.size())
            throw InvalidArgument("design has " + std::to_string(points.size()) + " points but " +
                                  std::to_string(values.size()) + " observations");
        const auto n = static_cast<Eigen::Index>(points.size());
        if (noise_cov.size() != 0) {
            if (noise_cov.rows() != n || noise_cov.cols() != n)
                throw InvalidArgument("noise covariance must be n × n");
            if (!noise_cov.isApprox(noise_cov.transpose(), 1e-12) && noise_cov.cwiseAbs().maxCoeff() > 0.0)
                throw InvalidArgument("noise covariance must be symmetric");
        }
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (static_cast<std::size_t>(points[i].size()) != dimension())
                throw InvalidArgument("design points have inconsistent dimensions");
            if (!points[i].allFinite() || !std::isfinite(values[i]))
                throw NonFiniteValue("design entry " + std::to_string(i) + " is not finite");
        }
    }
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
    /// Kriging weights λ_x on the observations.
    Eigen::VectorXd weights;
    /// Set when a slightly negative variance was clamped to zero.
    bool clamped = false;

    [[nodiscard]] double sd() const { return std::sqrt(variance); }
};

struct KrigingOptions {
    /// Added to the diagonal of K as a multiple of |k(0)| (or of the
    /// covariance scale when k(0) = 0).
    double jitter = 0.0;
};

/// Intrinsic Kriging predictor: the factorized saddle system
///
///   [ K + K_N   Pᵀ ] [ λ_x ]   [ k_x ]
///   [   P       0  ] [  μ  ] = [ p_x ]
///
/// with K_ij = k(x_i - x_j), P the q × n monomial matrix. Immutable; copies
/// share the factorization.
class KrigingModel {
public:
    KrigingModel(DesignSet design, GeneralizedCovariance cov, MonomialBasis basis,
                 KrigingOptions options = {})
    {
        auto state = std::make_shared<State>(std::move(design), std::move(cov), std::move(basis), options);
        state->assemble_and_factorize();
        state_ = std::move(state);
    }

    [[nodiscard]] const DesignSet& design() const noexcept { return state_->design; }
    [[nodiscard]] const GeneralizedCovariance& covariance() const noexcept { return state_->cov; }
    [[nodiscard]] const MonomialBasis& basis() const noexcept { return state_->basis; }
    [[nodiscard]] const KrigingOptions& options() const noexcept { return state_->options; }
    [[nodiscard]] std::size_t size() const noexcept { return state_->design.size(); }
    [[nodiscard]] std::size_t dimension() const noexcept { return state_->basis.dimension(); }
    [[nodiscard]] const Eigen::MatrixXd& saddle_matrix() const noexcept { return state_->saddle; }

    /// Relative Frobenius error of the factorization reconstruction.
    [[nodiscard]] double factorization_residual() const {
        const Eigen::MatrixXd rec = state_->lu.reconstructedMatrix();
        return (rec - state_->saddle).norm() / state_->saddle.norm();
    }

    /// Right-hand side [k_x; p_x].
    [[nodiscard]] Eigen::VectorXd rhs(const Point& x) const {
        check_dimension(x);
        const auto n = static_cast<Eigen::Index>(size());
        const auto q = static_cast<Eigen::Index>(state_->basis.size());
        Eigen::VectorXd r(n + q);
        for (Eigen::Index i = 0; i < n; ++i) r[i] = state_->cov.between(x, state_->design.points[i]);
        r.tail(q) = state_->basis.eval(x);
        return r;
    }

    /// Solution (λ_x, μ) stacked.
    [[nodiscard]] Eigen::VectorXd solve(const Point& x) const { return state_->lu.solve(rhs(x)); }

    /// Solves the saddle system for a block of right-hand sides.
    [[nodiscard]] Eigen::MatrixXd solve_columns(const Eigen::MatrixXd& rhs_block) const {
        return state_->lu.solve(rhs_block);
    }

    /// Solutions for many points at once, one column per point.
    [[nodiscard]] Eigen::MatrixXd solve_many(const PointSet& xs) const {
        Eigen::MatrixXd r(static_cast<Eigen::Index>(size() + state_->basis.size()),
                          static_cast<Eigen::Index>(xs.size()));
        for (std::size_t j = 0; j < xs.size(); ++j) r.col(static_cast<Eigen::Index>(j)) = rhs(xs[j]);
        return state_->lu.solve(r);
    }

    [[nodiscard]] Prediction predict(const Point& x) const {
        const Eigen::VectorXd r = rhs(x);
        const Eigen::VectorXd sol = state_->lu.solve(r);
        return from_solution(r, sol);
    }

    /// Mean only, through the cached dual coefficients: O(n) per point.
    [[nodiscard]] double mean(const Point& x) const { return state_->dual.dot(rhs(x)); }

    /// Prediction from a precomputed right-hand side and solution.
    [[nodiscard]] Prediction from_solution(const Eigen::VectorXd& r, const Eigen::VectorXd& sol) const {
        const auto n = static_cast<Eigen::Index>(size());
        Prediction p;
        p.weights = sol.head(n);
        p.mean = p.weights.dot(state_->y);
        p.variance = state_->cov.at_zero() - sol.dot(r);
        if (p.variance < 0.0) {
            p.variance = 0.0;
            p.clamped = true;
        }
        return p;
    }

    /// Covariance of the prediction errors at x and y:
    /// k(x - y) - λ_yᵀ k_x - μ_yᵀ p_x.
    [[nodiscard]] double error_covariance(const Point& x, const Point& y) const {
        return state_->cov.between(x, y) - solve(y).dot(rhs(x));
    }

private:
    struct State {
        State(DesignSet d, GeneralizedCovariance c, MonomialBasis b, KrigingOptions o)
            : design(std::move(d)), cov(std::move(c)), basis(std::move(b)), options(o) {}

        void assemble_and_factorize();

        DesignSet design;
        GeneralizedCovariance cov;
        MonomialBasis basis;
        KrigingOptions options;
        Eigen::MatrixXd saddle;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
        Eigen::VectorXd y;
        Eigen::VectorXd dual;
    };

    void check_dimension(const Point& x) const {
        if (static_cast<std::size_t>(x.size()) != dimension())
            throw InvalidArgument("query point has dimension " + std::to_string(x.size()) +
                                  ", model expects " + std::to_string(dimension()));
        if (!x.allFinite()) throw NonFiniteValue("query point is not finite");
    }

    std::shared_ptr<const State> state_;
};

inline void KrigingModel::State::assemble_and_factorize() {
    design.validate();
    if (basis.degree() < cov.cpd_order())
        throw OrderMismatch("basis degree " + std::to_string(basis.degree()) +
                            " is below the covariance order " + std::to_string(cov.cpd_order()));
    if (design.size() == 0) throw SingularSystem("empty design");
    if (design.dimension() != basis.dimension())
        throw InvalidArgument("design dimension does not match the basis dimension");

    const auto n = static_cast<Eigen::Index>(design.size());
    const auto q = static_cast<Eigen::Index>(basis.size());
    if (n < q)
        throw SingularSystem("unisolvency requires n >= q (n = " + std::to_string(n) +
                             ", q = " + std::to_string(q) + ")");

    if (design.noise_free()) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                if ((design.points[i] - design.points[j]).norm() <= kDuplicateTolerance)
                    throw SingularSystem("design points " + std::to_string(j) + " and " +
                                         std::to_string(i) + " coincide");
    }

    const Eigen::MatrixXd p = basis.eval_matrix(design.points);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() < q) throw SingularSystem("design is not unisolvent for the polynomial basis");

    saddle = Eigen::MatrixXd::Zero(n + q, n + q);
    saddle.topLeftCorner(n, n) = cov.gram(design.points);
    if (design.noise_cov.size() != 0) saddle.topLeftCorner(n, n) += design.noise_cov;
    if (options.jitter > 0.0) {
        const double ref = cov.at_zero() != 0.0 ? std::abs(cov.at_zero()) : cov.scale();
        saddle.topLeftCorner(n, n).diagonal().array() += options.jitter * ref;
    }
    saddle.topRightCorner(n, q) = p.transpose();
    saddle.bottomLeftCorner(q, n) = p;

    lu.compute(saddle);
    if (!(lu.rcond() > std::numeric_limits<double>::epsilon()))
        throw SingularSystem("saddle system is numerically singular (rcond " +
                             std::to_string(lu.rcond()) + "); consider a diagonal jitter");

    y = Eigen::Map<const Eigen::VectorXd>(design.values.data(), n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + q);
    rhs.head(n) = y;
    dual = lu.solve(rhs);  // saddle matrix is symmetric
}

inline KrigingModel build_model(DesignSet design, GeneralizedCovariance cov, MonomialBasis basis,
                                KrigingOptions options = {}) {
    return KrigingModel(std::move(design), std::move(cov), std::move(basis), options);
}

inline Prediction predict(const KrigingModel& model, const Point& x) { return model.predict(x); }

namespace detail {

inline void reject_duplicate(const KrigingModel& model, const Point& x) {
    if (!model.design().noise_free()) return;
    for (std::size_t i = 0; i < model.size(); ++i)
        if ((model.design().points[i] - x).norm() <= kDuplicateTolerance)
            throw DuplicatePoint("point coincides with design point " + std::to_string(i));
}

}  // namespace detail

/// New model over the design enlarged by (x_new, y_new). The factorization is
/// rebuilt from scratch. `noise_variance` is the new observation's noise.
inline KrigingModel add_point(const KrigingModel& model, const Point& x_new, double y_new,
                              double noise_variance = 0.0) {
    if (static_cast<std::size_t>(x_new.size()) != model.dimension())
        throw InvalidArgument("new point has the wrong dimension");
    detail::reject_duplicate(model, x_new);
    DesignSet d = model.design();
    d.points.push_back(x_new);
    d.values.push_back(y_new);
    const auto n = static_cast<Eigen::Index>(d.size());
    if (d.noise_cov.size() != 0 || noise_variance != 0.0) {
        Eigen::MatrixXd kn = Eigen::MatrixXd::Zero(n, n);
        if (d.noise_cov.size() != 0) kn.topLeftCorner(n - 1, n - 1) = d.noise_cov;
        kn(n - 1, n - 1) = noise_variance;
        d.noise_cov = std::move(kn);
    }
    return KrigingModel(std::move(d), model.covariance(), model.basis(), model.options());
}

/// Effect of a hypothetical exact observation ξ(x_new) = z on the predictor.
///
/// The updated variance does not depend on z and the updated mean is affine
/// in z:
///   σ²ₙ₊₁(x)    = σ²ₙ(x) - cₙ(x, x_new)² / σ²ₙ(x_new)
///   ξ̂ₙ₊₁(x; z) = ξ̂ₙ(x) + cₙ(x, x_new) / σ²ₙ(x_new) · (z - ξ̂ₙ(x_new))
/// where cₙ is the covariance of the current prediction errors. Only the solve
/// for x_new is cached; each query costs one more solve.
class HypotheticalUpdate {
public:
    struct Affine {
        /// Updated mean at z = 0.
        double intercept = 0.0;
        /// d ξ̂ₙ₊₁(x; z) / dz.
        double slope = 0.0;
        double variance = 0.0;

        [[nodiscard]] double mean(double z) const { return intercept + slope * z; }
    };

    HypotheticalUpdate(KrigingModel model, Point x_new)
        : model_(std::move(model)), x_new_(std::move(x_new)) {
        if (static_cast<std::size_t>(x_new_.size()) != model_.dimension())
            throw InvalidArgument("hypothetical point has the wrong dimension");
        detail::reject_duplicate(model_, x_new_);
        rhs_new_ = model_.rhs(x_new_);
        current_ = model_.from_solution(rhs_new_, model_.solve(x_new_));
        if (!(current_.variance > 0.0))
            throw DegenerateVariance("prediction variance at the hypothetical point is zero");
    }

    [[nodiscard]] const Prediction& at_new_point() const noexcept { return current_; }
    [[nodiscard]] const Point& point() const noexcept { return x_new_; }

    [[nodiscard]] Affine at(const Point& x) const {
        const Eigen::VectorXd r = model_.rhs(x);
        const Eigen::VectorXd sol = model_.solve(x);
        const Prediction p = model_.from_solution(r, sol);
        const double c = model_.covariance().between(x, x_new_) - sol.dot(rhs_new_);
        return combine(p.mean, p.variance, c);
    }

    /// Same as at(), from the current prediction at x and the error
    /// covariance cₙ(x, x_new) computed elsewhere.
    [[nodiscard]] Affine combine(double mean, double variance, double cross) const {
        Affine a;
        a.slope = cross / current_.variance;
        a.intercept = mean - a.slope * current_.mean;
        a.variance = std::max(0.0, variance - cross * a.slope);
        return a;
    }

    [[nodiscard]] double variance(const Point& x) const { return at(x).variance; }
    [[nodiscard]] double mean(const Point& x, double z) const { return at(x).mean(z); }

private:
    KrigingModel model_;
    Point x_new_;
    Eigen::VectorXd rhs_new_;
    Prediction current_;
};

inline HypotheticalUpdate hypothetical_update(const KrigingModel& model, const Point& x_new) {
    return HypotheticalUpdate(model, x_new);
}

/// h = max over probes y of min_i ‖y - x_i‖₂.
inline double fill_distance(const PointSet& points, const PointSet& probes) {
    if (points.empty()) throw InvalidArgument("fill distance of an empty point set");
    double h = 0.0;
    for (const auto& y : probes) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& x : points) best = std::min(best, (y - x).squaredNorm());
        h = std::max(h, best);
    }
    return std::sqrt(h);
}

/// Regular grid with `per_axis` nodes per coordinate, endpoints included.
inline PointSet box_grid(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, std::size_t per_axis) {
    if (per_axis < 2) throw InvalidArgument("box grid needs at least two nodes per axis");
    const auto d = lower.size();
    std::size_t total = 1;
    for (Eigen::Index c = 0; c < d; ++c) total *= per_axis;
    PointSet grid;
    grid.reserve(total);
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    for (std::size_t k = 0; k < total; ++k) {
        Point p(d);
        for (Eigen::Index c = 0; c < d; ++c) {
            const double t = static_cast<double>(idx[static_cast<std::size_t>(c)]) /
                             static_cast<double>(per_axis - 1);
            p[c] = lower[c] + t * (upper[c] - lower[c]);
        }
        grid.push_back(std::move(p));
        for (std::size_t c = 0; c < idx.size(); ++c) {
            if (++idx[c] < per_axis) break;
            idx[c] = 0;
        }
    }
    return grid;
}

/// Fill distance over a box, probed on a regular grid.
inline double fill_distance(const PointSet& points, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, std::size_t per_axis) {
    return fill_distance(points, box_grid(lower, upper, per_axis));
}

/// Fill distance over the support of μ, probed with n_probe Halton points.
inline double fill_distance(const PointSet& points, const InputDistribution& mu, std::size_t n_probe) {
    PointSet probes;
    probes.reserve(n_probe);
    for (std::size_t i = 1; i <= n_probe; ++i) probes.push_back(mu.from_unit(halton_point(i, mu.dimension())));
    return fill_distance(points, probes);
}

// CSV: header x_1,...,x_d,f[,noise]; noise is a per-point variance.

inline void write_design_csv(std::ostream& os, const DesignSet& design) {
    const std::size_t d = design.dimension();
    const bool noisy = !design.noise_free();
    for (std::size_t c = 0; c < d; ++c) os << "x_" << (c + 1) << ',';
    os << 'f' << (noisy ? ",noise" : "") << '\n';
    os.precision(17);
    for (std::size_t i = 0; i < design.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) os << design.points[i][static_cast<Eigen::Index>(c)] << ',';
        os << design.values[i];
        if (noisy) os << ',' << design.noise_cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        os << '\n';
    }
}

inline DesignSet read_design_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("design CSV is empty");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    std::size_t d = 0;
    while (d < header.size() && header[d] == "x_" + std::to_string(d + 1)) ++d;
    if (d == 0 || d >= header.size() || header[d] != "f")
        throw IoError("design CSV header must be x_1,...,x_d,f[,noise]");
    const bool noisy = header.size() == d + 2 && header[d + 1] == "noise";
    if (header.size() != d + 1 + (noisy ? 1 : 0)) throw IoError("unexpected columns in design CSV header");

    DesignSet design;
    std::vector<double> noise;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw IoError("design CSV row " + std::to_string(row) + ": bad number '" + cell + "'");
            }
        }
        if (vals.size() != header.size())
            throw IoError("design CSV row " + std::to_string(row) + " has " + std::to_string(vals.size()) +
                          " columns, expected " + std::to_string(header.size()));
        Point p(static_cast<Eigen::Index>(d));
        for (std::size_t c = 0; c < d; ++c) p[static_cast<Eigen::Index>(c)] = vals[c];
        design.points.push_back(std::move(p));
        design.values.push_back(vals[d]);
        if (noisy) noise.push_back(vals[d + 1]);
    }
    if (noisy) {
        design.noise_cov = Eigen::Map<Eigen::VectorXd>(noise.data(), static_cast<Eigen::Index>(noise.size()))
                               .asDiagonal();
    }
    return design;
}

}  // namespace exsur

#endif  // EXSUR_KRIGING_HPP
