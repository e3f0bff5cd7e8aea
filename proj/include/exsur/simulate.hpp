#ifndef EXSUR_SIMULATE_HPP
#define EXSUR_SIMULATE_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exsur/covariance.hpp"
#include "exsur/error.hpp"
#include "exsur/kriging.hpp"
#include "exsur/rng.hpp"

namespace exsur {

struct SimulationOptions {
    /// Diagonal regularization as a multiple of the covariance scale.
    double jitter = 0.0;
};

struct PathProvenance {
    std::string covariance;
    std::size_t basis_degree = 0;
    std::vector<double> trend;
    std::uint64_t seed = 0;
    double jitter = 0.0;
    /// "stationary" for proper covariances; "anchored" when the process is
    /// pinned to zero at the anchor points (purely conditionally positive
    /// definite families).
    std::string representation;
    PointSet anchors;
};

struct PathSample {
    PointSet grid;
    std::vector<double> values;
    PathProvenance provenance;
};

/// Gaussian sampler on a fixed grid; the covariance factorization is done
/// once and reused for every draw.
///
/// Purely conditionally positive definite k are simulated through the
/// representation that vanishes on a unisolvent anchor set A:
///   ξ₀(x) = ξ(x) - Σ_a ℓ_a(x) ξ(a),
/// with ℓ the Lagrange polynomials of A. Its covariance is k(λ_x, λ_y) with
/// λ_x = δ_x - Σ ℓ_a(x) δ_a annihilating N_l, hence positive semidefinite.
/// Any other representation differs by an element of N_l.
class PathSampler {
public:
    PathSampler(GeneralizedCovariance cov, MonomialBasis basis, PointSet grid, SimulationOptions options = {})
        : cov_(std::move(cov)), basis_(std::move(basis)), grid_(std::move(grid)), options_(options) {
        if (basis_.degree() < cov_.cpd_order())
            throw OrderMismatch("basis degree is below the covariance order");
        if (grid_.empty()) throw InvalidArgument("simulation grid is empty");
        for (const auto& p : grid_)
            if (static_cast<std::size_t>(p.size()) != basis_.dimension())
                throw InvalidArgument("grid point dimension does not match the basis");

        Eigen::MatrixXd c = cov_.gram(grid_);
        if (!cov_.is_positive_definite()) c = anchored(c);
        if (options_.jitter > 0.0) c.diagonal().array() += options_.jitter * cov_.scale();

        Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
        if (ldlt.info() != Eigen::Success)
            throw FactorizationFailure("grid covariance factorization failed; try a diagonal jitter");
        Eigen::VectorXd dvec = ldlt.vectorD();
        const double floor = -1e-8 * std::max(cov_.scale(), c.diagonal().cwiseAbs().maxCoeff());
        if (dvec.minCoeff() < floor)
            throw FactorizationFailure("grid covariance is not positive semidefinite (pivot " +
                                       std::to_string(dvec.minCoeff()) + "); try a diagonal jitter");
        dvec = dvec.cwiseMax(0.0).cwiseSqrt();
        Eigen::MatrixXd l = ldlt.matrixL();
        factor_ = l * dvec.asDiagonal();
        factor_ = ldlt.transpositionsP().transpose() * factor_;
    }

    [[nodiscard]] const PointSet& grid() const noexcept { return grid_; }
    [[nodiscard]] const PointSet& anchors() const noexcept { return anchors_; }

    /// Zero-trend values for one seed.
    [[nodiscard]] Eigen::VectorXd draw_values(std::uint64_t seed) const {
        Rng rng(derive_seed(seed, "path"));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd z(factor_.cols());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = gauss(rng);
        return factor_ * z;
    }

    [[nodiscard]] PathSample draw(const std::vector<double>& trend_coeffs, std::uint64_t seed) const {
        if (!trend_coeffs.empty() && trend_coeffs.size() != basis_.size())
            throw InvalidArgument("trend needs one coefficient per basis function");
        Eigen::VectorXd v = draw_values(seed);
        if (!trend_coeffs.empty()) {
            const Eigen::Map<const Eigen::VectorXd> b(trend_coeffs.data(),
                                                      static_cast<Eigen::Index>(trend_coeffs.size()));
            for (std::size_t i = 0; i < grid_.size(); ++i)
                v[static_cast<Eigen::Index>(i)] += basis_.eval(grid_[i]).dot(b);
        }
        PathSample s;
        s.grid = grid_;
        s.values.assign(v.data(), v.data() + v.size());
        s.provenance.covariance = cov_.describe();
        s.provenance.basis_degree = basis_.degree();
        s.provenance.trend = trend_coeffs;
        s.provenance.seed = seed;
        s.provenance.jitter = options_.jitter;
        s.provenance.representation = cov_.is_positive_definite() ? "stationary" : "anchored";
        s.provenance.anchors = anchors_;
        return s;
    }

private:
    Eigen::MatrixXd anchored(const Eigen::MatrixXd& k_grid) {
        const std::size_t d = basis_.dimension();
        Point lo = grid_.front();
        Point hi = grid_.front();
        for (const auto& p : grid_) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const Point center = 0.5 * (lo + hi);
        const double extent = std::max((hi - lo).maxCoeff(), 1e-6);
        const double step = extent / static_cast<double>(std::max<std::size_t>(basis_.degree(), 1));
        // principal lattice {i : |i| ≤ l}, unisolvent for N_l
        for (const auto& e : basis_.exponents()) {
            Point a(static_cast<Eigen::Index>(d));
            for (std::size_t c = 0; c < d; ++c)
                a[static_cast<Eigen::Index>(c)] =
                    center[static_cast<Eigen::Index>(c)] +
                    step * (static_cast<double>(e[c]) - 0.5 * static_cast<double>(basis_.degree()));
            anchors_.push_back(std::move(a));
        }
        const Eigen::MatrixXd pa = basis_.eval_matrix(anchors_);  // q × q
        const Eigen::MatrixXd pg = basis_.eval_matrix(grid_);     // q × g
        const Eigen::MatrixXd lag = pa.fullPivLu().solve(pg);     // ℓ_a(x), q × g
        const auto g = static_cast<Eigen::Index>(grid_.size());
        const auto q = static_cast<Eigen::Index>(anchors_.size());
        Eigen::MatrixXd k_ga(g, q);
        for (Eigen::Index i = 0; i < g; ++i)
            for (Eigen::Index a = 0; a < q; ++a) k_ga(i, a) = cov_.between(grid_[i], anchors_[a]);
        const Eigen::MatrixXd k_aa = cov_.gram(anchors_);
        const Eigen::MatrixXd cross = k_ga * lag;
        Eigen::MatrixXd c = k_grid - cross - cross.transpose() + lag.transpose() * k_aa * lag;
        return 0.5 * (c + c.transpose());
    }

    GeneralizedCovariance cov_;
    MonomialBasis basis_;
    PointSet grid_;
    SimulationOptions options_;
    PointSet anchors_;
    Eigen::MatrixXd factor_;
};

/// One path: trend p(x)ᵀb plus a Gaussian fluctuation with covariance k.
inline PathSample sample_path(const GeneralizedCovariance& cov, const MonomialBasis& basis,
                              const std::vector<double>& trend_coeffs, const PointSet& grid, std::uint64_t seed,
                              SimulationOptions options = {}) {
    return PathSampler(cov, basis, grid, options).draw(trend_coeffs, seed);
}

/// m paths conditioned on the model's (exact) observations, by conditioning
/// with Kriging: ζ(x) = ξ̂ₙ(x) + [ξ_sim(x) - ξ̂_sim(x)], where ξ̂_sim applies
/// the same Kriging weights to an unconditional path ξ_sim. Grid points that
/// coincide with design points are pinned to the observations. Copy j uses
/// seed derive_seed(seed, "conditional", j).
inline std::vector<PathSample> sample_conditional_paths(const KrigingModel& model, const PointSet& grid,
                                                        std::size_t m, std::uint64_t seed,
                                                        SimulationOptions options = {}) {
    const DesignSet& design = model.design();
    if (!design.noise_free()) throw InvalidArgument("conditional simulation requires exact observations");

    std::vector<long> pinned(grid.size(), -1);
    PointSet free_points;
    std::vector<std::size_t> free_index;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        for (std::size_t i = 0; i < design.size(); ++i) {
            if ((grid[g] - design.points[i]).norm() <= kDuplicateTolerance) {
                pinned[g] = static_cast<long>(i);
                break;
            }
        }
        if (pinned[g] < 0) {
            free_index.push_back(g);
            free_points.push_back(grid[g]);
        }
    }

    const auto n = static_cast<Eigen::Index>(design.size());
    const auto nf = static_cast<Eigen::Index>(free_points.size());
    PointSet joint = design.points;
    joint.insert(joint.end(), free_points.begin(), free_points.end());
    const PathSampler sampler(model.covariance(), model.basis(), joint, options);

    Eigen::MatrixXd weights(n, nf);  // λ for each free point
    Eigen::VectorXd means(nf);
    if (nf > 0) {
        const Eigen::MatrixXd sol = model.solve_many(free_points);
        weights = sol.topRows(n);
        const Eigen::Map<const Eigen::VectorXd> y(design.values.data(), n);
        means = weights.transpose() * y;
    }

    std::vector<PathSample> out;
    out.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        const std::uint64_t s = derive_seed(seed, "conditional", j);
        const Eigen::VectorXd sim = sampler.draw_values(s);
        const Eigen::VectorXd resid = sim.tail(nf) - weights.transpose() * sim.head(n);
        PathSample p;
        p.grid = grid;
        p.values.resize(grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g)
            if (pinned[g] >= 0) p.values[g] = design.values[static_cast<std::size_t>(pinned[g])];
        for (Eigen::Index k = 0; k < nf; ++k)
            p.values[free_index[static_cast<std::size_t>(k)]] = means[k] + resid[k];
        p.provenance.covariance = model.covariance().describe();
        p.provenance.basis_degree = model.basis().degree();
        p.provenance.seed = s;
        p.provenance.jitter = options.jitter;
        p.provenance.representation = "conditional";
        p.provenance.anchors = sampler.anchors();
        out.push_back(std::move(p));
    }
    return out;
}

/// CSV: x_1..x_d followed by one value column per path.
inline void write_paths_csv(std::ostream& os, const std::vector<PathSample>& paths) {
    if (paths.empty()) return;
    const auto d = paths.front().grid.empty() ? 0 : paths.front().grid.front().size();
    for (Eigen::Index c = 0; c < d; ++c) os << "x_" << (c + 1) << ',';
    for (std::size_t j = 0; j < paths.size(); ++j) os << "path_" << j << (j + 1 < paths.size() ? "," : "\n");
    const auto old = os.precision(17);
    for (std::size_t g = 0; g < paths.front().grid.size(); ++g) {
        for (Eigen::Index c = 0; c < d; ++c) os << paths.front().grid[g][c] << ',';
        for (std::size_t j = 0; j < paths.size(); ++j)
            os << paths[j].values[g] << (j + 1 < paths.size() ? "," : "\n");
    }
    os.precision(old);
}

}  // namespace exsur

#endif  // EXSUR_SIMULATE_HPP
