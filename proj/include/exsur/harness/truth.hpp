#ifndef EXSUR_HARNESS_TRUTH_HPP
#define EXSUR_HARNESS_TRUTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "exsur/distribution.hpp"
#include "exsur/error.hpp"
#include "exsur/excursion.hpp"
#include "exsur/harness/config.hpp"
#include "exsur/kriging.hpp"
#include "exsur/rng.hpp"
#include "exsur/simulate.hpp"

namespace exsur::harness {

struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

/// The box a simulated truth lives on: the support for uniform μ, otherwise
/// mean ± half_width standard deviations per coordinate.
inline Box support_box(const InputDistribution& mu, double half_width) {
    if (mu.kind() == DistributionKind::UniformBox) return {mu.first(), mu.second()};
    const Eigen::VectorXd sd = mu.covariance().diagonal().cwiseSqrt();
    return {mu.first() - half_width * sd, mu.first() + half_width * sd};
}

/// Multilinear interpolant of values on a regular box grid (box_grid order,
/// first coordinate fastest). Queries outside the box are clamped to it.
class GridFunction {
public:
    GridFunction(Box box, std::size_t per_axis, std::vector<double> values)
        : box_(std::move(box)), per_axis_(per_axis), values_(std::move(values)) {
        std::size_t total = 1;
        for (Eigen::Index c = 0; c < box_.lower.size(); ++c) total *= per_axis_;
        if (values_.size() != total) throw InvalidArgument("grid function needs per_axis^d values");
    }

    [[nodiscard]] double operator()(const Point& x) const {
        const auto d = box_.lower.size();
        std::vector<std::size_t> base(static_cast<std::size_t>(d));
        std::vector<double> frac(static_cast<std::size_t>(d));
        for (Eigen::Index c = 0; c < d; ++c) {
            const double span = box_.upper[c] - box_.lower[c];
            double t = (x[c] - box_.lower[c]) / span * static_cast<double>(per_axis_ - 1);
            t = std::clamp(t, 0.0, static_cast<double>(per_axis_ - 1));
            auto i = static_cast<std::size_t>(std::floor(t));
            if (i >= per_axis_ - 1) i = per_axis_ - 2;
            base[static_cast<std::size_t>(c)] = i;
            frac[static_cast<std::size_t>(c)] = t - static_cast<double>(i);
        }
        double acc = 0.0;
        const std::size_t corners = std::size_t{1} << d;
        for (std::size_t mask = 0; mask < corners; ++mask) {
            double w = 1.0;
            std::size_t index = 0, stride = 1;
            for (std::size_t c = 0; c < static_cast<std::size_t>(d); ++c) {
                const bool up = (mask >> c) & 1U;
                w *= up ? frac[c] : 1.0 - frac[c];
                index += (base[c] + (up ? 1 : 0)) * stride;
                stride *= per_axis_;
            }
            if (w != 0.0) acc += w * values_[index];
        }
        return acc;
    }

    [[nodiscard]] const Box& box() const noexcept { return box_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

private:
    Box box_;
    std::size_t per_axis_;
    std::vector<double> values_;
};

inline std::uint64_t truth_seed(std::uint64_t seed) { return derive_seed(seed, "truth"); }
inline std::uint64_t reference_seed(std::uint64_t seed) { return derive_seed(seed, "reference"); }
inline std::uint64_t random_mc_seed(std::uint64_t seed) { return derive_seed(seed, "random_mc"); }

/// Draws the seeded true functions of an experiment: Gaussian paths with the
/// configured covariance and trend on the truth grid. The grid factorization
/// is shared by all seeds.
class TruthFactory {
public:
    explicit TruthFactory(const ExperimentConfig& cfg)
        : box_(support_box(cfg.mu, cfg.truth_half_width)),
          per_axis_(cfg.truth_grid),
          trend_(cfg.truth_trend),
          sampler_(cfg.covariance, MonomialBasis(cfg.mu.dimension(), cfg.basis_degree),
                   box_grid(box_.lower, box_.upper, per_axis_), SimulationOptions{cfg.truth_jitter}) {}

    [[nodiscard]] GridFunction make(std::uint64_t seed) const {
        PathSample s = sampler_.draw(trend_, truth_seed(seed));
        return GridFunction(box_, per_axis_, std::move(s.values));
    }

    [[nodiscard]] const Box& box() const noexcept { return box_; }
    [[nodiscard]] const PointSet& grid() const noexcept { return sampler_.grid(); }
    [[nodiscard]] const PathSampler& sampler() const noexcept { return sampler_; }

private:
    Box box_;
    std::size_t per_axis_;
    std::vector<double> trend_;
    PathSampler sampler_;
};

/// Empirical p-quantile (smallest value with at least a fraction p at or
/// below it).
inline double empirical_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidArgument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
    k = std::clamp<std::size_t>(k, 1, values.size());
    return values[k - 1];
}

/// Everything a strategy needs for one seed: the true function, its resolved
/// threshold and the reference sample shared by all strategies.
struct SeedContext {
    std::uint64_t seed = 0;
    std::shared_ptr<const GridFunction> truth;
    double u = 0.0;
    std::shared_ptr<const PointSet> reference_points;
    ExcursionEstimate reference;
};

inline SeedContext prepare_seed(const ExperimentConfig& cfg, const TruthFactory& factory, std::uint64_t seed) {
    SeedContext ctx;
    ctx.seed = seed;
    ctx.truth = std::make_shared<const GridFunction>(factory.make(seed));
    ctx.reference_points =
        std::make_shared<const PointSet>(cfg.mu.samples(cfg.reference_samples, reference_seed(seed)));
    const GridFunction& f = *ctx.truth;
    if (cfg.threshold.value) {
        ctx.u = *cfg.threshold.value;
    } else {
        std::vector<double> vals;
        vals.reserve(ctx.reference_points->size());
        for (const auto& x : *ctx.reference_points) vals.push_back(f(x));
        ctx.u = empirical_quantile(std::move(vals), *cfg.threshold.quantile);
    }
    ctx.reference = volume_on_samples([&f](const Point& x) { return f(x); }, ctx.u, *ctx.reference_points);
    ctx.reference.seed = seed;
    return ctx;
}

/// n cell-centred lattice points per axis over [lower, upper]; in d > 1 the
/// lattice has floor(n^(1/d))^d points.
inline PointSet lattice_design(const Box& box, std::size_t n) {
    const auto d = box.lower.size();
    std::size_t per_axis = n;
    if (d > 1) {
        per_axis = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 1.0 / d) + 1e-9));
        per_axis = std::max<std::size_t>(per_axis, 1);
    }
    std::size_t total = 1;
    for (Eigen::Index c = 0; c < d; ++c) total *= per_axis;
    PointSet pts;
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    for (std::size_t k = 0; k < total; ++k) {
        Point p(d);
        for (Eigen::Index c = 0; c < d; ++c)
            p[c] = box.lower[c] + (static_cast<double>(idx[static_cast<std::size_t>(c)]) + 0.5) *
                                      (box.upper[c] - box.lower[c]) / static_cast<double>(per_axis);
        pts.push_back(std::move(p));
        for (std::size_t c = 0; c < idx.size(); ++c) {
            if (++idx[c] < per_axis) break;
            idx[c] = 0;
        }
    }
    return pts;
}

inline Box lattice_box(const ExperimentConfig& cfg) { return support_box(cfg.mu, cfg.lattice_half_width); }

inline DesignSet evaluate_design(const PointSet& pts, const GridFunction& f) {
    std::vector<double> y;
    y.reserve(pts.size());
    for (const auto& x : pts) y.push_back(f(x));
    return DesignSet::exact(pts, std::move(y));
}

}  // namespace exsur::harness

#endif  // EXSUR_HARNESS_TRUTH_HPP
