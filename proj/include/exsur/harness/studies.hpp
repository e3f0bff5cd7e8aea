#ifndef EXSUR_HARNESS_STUDIES_HPP
#define EXSUR_HARNESS_STUDIES_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "exsur/excursion.hpp"
#include "exsur/gaussian.hpp"
#include "exsur/harness/config.hpp"
#include "exsur/harness/truth.hpp"
#include "exsur/kriging.hpp"
#include "exsur/sur.hpp"

namespace exsur::harness {

// ---------------------------------------------------------------------------
// Strategy curves

struct CurvePoint {
    std::size_t n = 0;
    ExcursionEstimate estimate;
};

struct StrategyRun {
    Strategy strategy = Strategy::Sur;
    std::uint64_t seed = 0;
    std::vector<CurvePoint> curve;
    /// Full loop record, SUR only.
    std::optional<SurTrajectory> trajectory;

    [[nodiscard]] double final_error(double reference) const {
        return std::abs(curve.back().estimate.volume - reference);
    }
};

inline SurConfig sur_config(const ExperimentConfig& cfg, const SeedContext& ctx, std::size_t n_max) {
    SurConfig s;
    s.u = ctx.u;
    s.quantizer_size = cfg.quantizer;
    s.candidates = cfg.candidates;
    s.n_max = n_max;
    s.seed = ctx.seed;
    s.covariance = cfg.covariance;
    s.basis_degree = cfg.basis_degree;
    s.mu = cfg.mu;
    s.criterion_threshold = cfg.criterion_threshold;
    s.threads = cfg.threads;
    s.kriging.jitter = cfg.kriging_jitter;
    s.volume_points = ctx.reference_points;
    return s;
}

inline DesignSet initial_design(const ExperimentConfig& cfg, const SeedContext& ctx) {
    return evaluate_design(lattice_design(lattice_box(cfg), cfg.n_init), *ctx.truth);
}

inline StrategyRun run_sur_strategy(const ExperimentConfig& cfg, const SeedContext& ctx, std::size_t budget,
                                    const SelectionObserver& observer = {}) {
    StrategyRun run{Strategy::Sur, ctx.seed, {}, std::nullopt};
    const GridFunction& f = *ctx.truth;
    SurTrajectory traj =
        run_sur([&f](const Point& x) { return f(x); }, initial_design(cfg, ctx), sur_config(cfg, ctx, budget), observer);
    for (const auto& s : traj.steps) run.curve.push_back({s.design_size, s.volume});
    run.trajectory = std::move(traj);
    return run;
}

/// One fresh lattice per design size; the lattices are not nested.
inline StrategyRun run_lattice_strategy(const ExperimentConfig& cfg, const SeedContext& ctx, std::size_t budget) {
    StrategyRun run{Strategy::Lattice, ctx.seed, {}, std::nullopt};
    const Box box = lattice_box(cfg);
    const MonomialBasis basis(cfg.mu.dimension(), cfg.basis_degree);
    std::size_t last = 0;
    for (std::size_t n = cfg.n_init; n <= budget; ++n) {
        const PointSet pts = lattice_design(box, n);
        if (pts.size() == last) continue;  // d > 1: lattice size only changes at perfect powers
        last = pts.size();
        const KrigingModel m =
            build_model(evaluate_design(pts, *ctx.truth), cfg.covariance, basis, KrigingOptions{cfg.kriging_jitter});
        ExcursionEstimate e =
            volume_on_samples([&m](const Point& x) { return m.mean(x); }, ctx.u, *ctx.reference_points);
        e.seed = ctx.seed;
        run.curve.push_back({pts.size(), e});
    }
    return run;
}

/// Plain Monte Carlo on the true function with n evaluations; identical to
/// mc_volume(f, u, μ, n, random_mc_seed(seed)).
inline StrategyRun run_random_mc_strategy(const ExperimentConfig& cfg, const SeedContext& ctx, std::size_t budget) {
    StrategyRun run{Strategy::RandomMc, ctx.seed, {}, std::nullopt};
    const GridFunction& f = *ctx.truth;
    for (std::size_t n = cfg.n_init; n <= budget; ++n)
        run.curve.push_back({n, mc_volume([&f](const Point& x) { return f(x); }, ctx.u, cfg.mu, n,
                                          random_mc_seed(ctx.seed))});
    return run;
}

inline StrategyRun run_strategy(Strategy s, const ExperimentConfig& cfg, const SeedContext& ctx, std::size_t budget) {
    switch (s) {
        case Strategy::Sur: return run_sur_strategy(cfg, ctx, budget);
        case Strategy::Lattice: return run_lattice_strategy(cfg, ctx, budget);
        case Strategy::RandomMc: return run_random_mc_strategy(cfg, ctx, budget);
    }
    throw InvalidArgument("unknown strategy");
}

struct Comparison {
    std::vector<SeedContext> contexts;
    /// runs[k][j]: strategy k, seed j.
    std::vector<std::vector<StrategyRun>> runs;

    /// Seeds where strategy a's final error is no larger than strategy b's.
    [[nodiscard]] std::size_t wins(std::size_t a, std::size_t b) const {
        std::size_t w = 0;
        for (std::size_t j = 0; j < contexts.size(); ++j) {
            const double ref = contexts[j].reference.volume;
            if (runs[a][j].final_error(ref) <= runs[b][j].final_error(ref)) ++w;
        }
        return w;
    }
};

inline Comparison run_comparison(const ExperimentConfig& cfg) {
    require_comparison(cfg);
    const TruthFactory factory(cfg);
    Comparison out;
    out.runs.resize(cfg.strategies.size());
    for (std::uint64_t seed : cfg.seeds) {
        out.contexts.push_back(prepare_seed(cfg, factory, seed));
        for (std::size_t k = 0; k < cfg.strategies.size(); ++k)
            out.runs[k].push_back(run_strategy(cfg.strategies[k], cfg, out.contexts.back(), cfg.budget));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convergence studies on [a, b] with nested lattices x_i = a + (b - a) i / n,
// i = 0..n: n cells, n + 1 nodes, fill distance (b - a) / (2n).

inline PointSet nested_lattice(double a, double b, std::size_t n) {
    PointSet pts;
    for (std::size_t i = 0; i <= n; ++i)
        pts.push_back(Point::Constant(1, a + (b - a) * static_cast<double>(i) / static_cast<double>(n)));
    return pts;
}

struct ConvergenceRow {
    std::size_t n = 0;
    double fill_distance = 0.0;
    double sup_sd = 0.0;
    /// E[(1{ξ ≥ u} - 1{ξ̂ₙ ≥ u})²] averaged over the probes, by Monte Carlo
    /// over simulated paths.
    double misclassification = 0.0;
    /// Same quantity by quadrature over the law of ξ̂ₙ(x).
    double misclassification_exact = 0.0;
    /// σ̄ |log σ̄|^{1/2} with σ̄ = sup_sd.
    double bound = 0.0;
    double ratio = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    double ratio_spread = 0.0;  // max ratio / min ratio
    double slope = 0.0;         // least squares slope of log sup σ on log h
    double target_slope = 0.0;  // ν - d/2
};

namespace detail {

/// P{ξ ≥ u} or P{ξ < u} given ξ̂ = v, whichever disagrees with 1{v ≥ u},
/// for ξ | ξ̂ = v ~ N(βv, s²).
inline double misclassified_given(double v, double u, double beta, double s) {
    if (!(s > 0.0)) return ((beta * v >= u) != (v >= u)) ? 1.0 : 0.0;
    const double above = gaussian_tail((u - beta * v) / s);
    return v >= u ? 1.0 - above : above;
}

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Uses a zero-mean stationary truth with covariance k (positive definite
/// families only), so that (ξ(x), ξ̂ₙ(x)) is a centred Gaussian pair with
///   var ξ̂ₙ(x) = λᵀKλ,  cov(ξ(x), ξ̂ₙ(x)) = λᵀk_x.
/// Paths are simulated only at the design points; the indicator mismatch at
/// each probe is replaced by its conditional expectation given ξ̂ₙ(x), which
/// keeps the estimate usable when the mismatch probability is tiny.
inline ConvergenceStudy run_convergence(const ExperimentConfig& cfg, std::uint64_t seed, bool with_paths = true) {
    const GeneralizedCovariance& k = cfg.covariance;
    if (!k.is_positive_definite())
        throw FieldError("[covariance] family", "convergence studies need a positive definite covariance");
    const double a = cfg.mu.first()[0], b = cfg.mu.second()[0];
    const double u = cfg.level;
    const MonomialBasis basis(1, cfg.basis_degree);

    PointSet probes;
    for (std::size_t i = 0; i < cfg.probes; ++i)
        probes.push_back(Point::Constant(1, a + (b - a) * static_cast<double>(i) / static_cast<double>(cfg.probes - 1)));

    // union of all design points, simulated jointly once per path
    PointSet all;
    std::vector<std::vector<std::size_t>> where(cfg.sizes.size());
    for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
        for (const auto& x : nested_lattice(a, b, cfg.sizes[s])) {
            std::size_t idx = all.size();
            for (std::size_t i = 0; i < all.size(); ++i)
                if ((all[i] - x).norm() <= 1e-12 * (b - a)) idx = i;
            if (idx == all.size()) all.push_back(x);
            where[s].push_back(idx);
        }
    }
    std::vector<Eigen::VectorXd> paths;
    if (with_paths) {
        const PathSampler sampler(k, basis, all, SimulationOptions{cfg.truth_jitter});
        for (std::size_t j = 0; j < cfg.paths; ++j)
            paths.push_back(sampler.draw_values(derive_seed(seed, "convergence", j)));
    }

    ConvergenceStudy study;
    const double k0 = k.at_zero();
    for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
        const PointSet design = nested_lattice(a, b, cfg.sizes[s]);
        const auto n = static_cast<Eigen::Index>(design.size());
        const KrigingModel m = build_model(DesignSet::exact(design, std::vector<double>(design.size(), 0.0)), k, basis,
                                           KrigingOptions{cfg.kriging_jitter});
        const Eigen::MatrixXd sol = m.solve_many(probes);
        const Eigen::MatrixXd lambda = sol.topRows(n);
        const Eigen::MatrixXd kdd = k.gram(design);

        ConvergenceRow row;
        row.n = design.size();
        row.fill_distance = fill_distance(design, probes);

        double sup_var = 0.0, mc = 0.0, exact = 0.0;
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const Eigen::VectorXd lam = lambda.col(static_cast<Eigen::Index>(p));
            Eigen::VectorXd kx(n);
            for (Eigen::Index i = 0; i < n; ++i) kx[i] = k.between(probes[p], design[static_cast<std::size_t>(i)]);
            const double var_hat = lam.dot(kdd * lam);
            const double cov = lam.dot(kx);
            const double err_var = std::max(0.0, k0 - 2 * cov + var_hat);
            sup_var = std::max(sup_var, err_var);
            const double beta = var_hat > 0 ? cov / var_hat : 0.0;
            const double s2 = var_hat > 0 ? std::max(0.0, k0 - cov * cov / var_hat) : k0;
            const double sc = std::sqrt(s2);

            for (const auto& path : paths) {
                double v = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) v += lam[i] * path[static_cast<Eigen::Index>(where[s][static_cast<std::size_t>(i)])];
                mc += detail::misclassified_given(v, u, beta, sc);
            }

            // ∫ φ(v; 0, var_hat) P{misclassified | v} dv. The integrand is
            // discontinuous at v = u and, for small s, concentrated within a
            // few s/|β| of it, so the range is cut at geometric offsets.
            const double sd_hat = std::sqrt(std::max(var_hat, 0.0));
            if (sd_hat > 0.0) {
                auto integrand = [&](double v) {
                    return gaussian_pdf(v / sd_hat) / sd_hat * detail::misclassified_given(v, u, beta, sc);
                };
                const double lo = std::min(-12 * sd_hat, u - 1.0), hi = std::max(12 * sd_hat, u + 1.0);
                std::vector<double> cuts{lo, u, hi};
                const double w = std::abs(beta) > 0 ? sc / std::abs(beta) : sc;
                for (double m = 1.0; m <= 1e6 && w * m < hi - lo; m *= 4.0) {
                    cuts.push_back(u - w * m);
                    cuts.push_back(u + w * m);
                }
                std::sort(cuts.begin(), cuts.end());
                using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
                for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
                    if (cuts[c] >= lo && cuts[c + 1] <= hi && cuts[c + 1] > cuts[c])
                        exact += GK::integrate(integrand, cuts[c], cuts[c + 1], 8, 1e-10);
            } else {
                exact += detail::misclassified_given(0.0, u, 0.0, std::sqrt(k0));
            }
        }
        row.sup_sd = std::sqrt(sup_var);
        row.misclassification = paths.empty() ? std::nan("") : mc / static_cast<double>(paths.size() * probes.size());
        row.misclassification_exact = exact / static_cast<double>(probes.size());
        row.bound = row.sup_sd * std::sqrt(std::abs(std::log(row.sup_sd)));
        row.ratio = row.misclassification / row.bound;
        study.rows.push_back(row);
    }

    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    std::vector<double> lx, ly;
    for (const auto& r : study.rows) {
        rmin = std::min(rmin, r.ratio);
        rmax = std::max(rmax, r.ratio);
        lx.push_back(std::log(r.fill_distance));
        ly.push_back(std::log(r.sup_sd));
    }
    study.ratio_spread = rmax / rmin;
    study.slope = detail::least_squares_slope(lx, ly);
    study.target_slope = k.spectral_nu(1).value_or(std::nan("")) - 0.5;
    return study;
}

}  // namespace exsur::harness

#endif  // EXSUR_HARNESS_STUDIES_HPP
