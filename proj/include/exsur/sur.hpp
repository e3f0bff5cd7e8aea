#ifndef EXSUR_SUR_HPP
#define EXSUR_SUR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "exsur/covariance.hpp"
#include "exsur/distribution.hpp"
#include "exsur/error.hpp"
#include "exsur/excursion.hpp"
#include "exsur/gaussian.hpp"
#include "exsur/kriging.hpp"
#include "exsur/parallel.hpp"
#include "exsur/rng.hpp"
#include "exsur/simulate.hpp"

namespace exsur {

/// Discretization Δ_Q onto levels z_1 < ... < z_Q. Bin j is the half-open
/// interval (e_{j-1}, e_j] with e_0 = -∞, e_Q = +∞, and
///   Δ_Q h = z_1 + Σ_{i=2}^{Q} (z_i - z_{i-1}) 1{h > e_{i-1}}.
/// Edges must interleave the levels: z_j < e_j < z_{j+1}.
class Quantizer {
public:
    Quantizer(std::vector<double> levels, std::vector<double> edges)
        : levels_(std::move(levels)), edges_(std::move(edges)) {
        if (levels_.size() < 2) throw InvalidArgument("quantizer needs Q >= 2 levels");
        if (edges_.size() + 1 != levels_.size()) throw InvalidArgument("quantizer needs Q - 1 bin edges");
        for (std::size_t j = 0; j + 1 < levels_.size(); ++j) {
            if (!(levels_[j] < edges_[j] && edges_[j] < levels_[j + 1]))
                throw InvalidArgument("quantizer levels must be strictly increasing and interleave the edges");
        }
    }

    /// Edges at the midpoints between consecutive levels.
    static Quantizer from_levels(std::vector<double> levels) {
        std::vector<double> edges;
        for (std::size_t j = 0; j + 1 < levels.size(); ++j) edges.push_back(0.5 * (levels[j] + levels[j + 1]));
        return Quantizer(std::move(levels), std::move(edges));
    }

    [[nodiscard]] std::size_t size() const noexcept { return levels_.size(); }
    [[nodiscard]] const std::vector<double>& levels() const noexcept { return levels_; }
    [[nodiscard]] const std::vector<double>& edges() const noexcept { return edges_; }

    /// Δ_Q h. The telescoping sum collapses to the level of h's bin, which is
    /// returned directly so that the result is exactly a level.
    [[nodiscard]] double operator()(double h) const { return levels_[index(h)]; }

    /// Bin index of h: the number of edges strictly below h.
    [[nodiscard]] std::size_t index(double h) const {
        return static_cast<std::size_t>(std::lower_bound(edges_.begin(), edges_.end(), h) - edges_.begin());
    }

private:
    std::vector<double> levels_;
    std::vector<double> edges_;
};

/// Q equiprobable bins of the predictive law N(mean, σ²): edges at
/// mean + σ Φ⁻¹(j/Q), levels at the bin medians mean + σ Φ⁻¹((j - 1/2)/Q).
inline Quantizer make_quantizer(const Prediction& pred, std::size_t q) {
    if (q < 2) throw InvalidArgument("quantizer needs Q >= 2");
    if (!(pred.variance > 0.0)) throw DegenerateVariance("cannot quantize a zero-variance prediction");
    const double sd = pred.sd();
    const auto qd = static_cast<double>(q);
    std::vector<double> levels(q);
    std::vector<double> edges(q - 1);
    for (std::size_t j = 0; j < q; ++j)
        levels[j] = pred.mean + sd * gaussian_quantile((static_cast<double>(j) + 0.5) / qd);
    for (std::size_t j = 0; j + 1 < q; ++j)
        edges[j] = pred.mean + sd * gaussian_quantile((static_cast<double>(j) + 1.0) / qd);
    return Quantizer(std::move(levels), std::move(edges));
}

inline double quantize(const Quantizer& quantizer, double h) { return quantizer(h); }

/// P{Δ_Q ξ = z_j} for ξ ~ N(mean, σ²).
inline std::vector<double> bin_probabilities(const Prediction& pred, const Quantizer& quantizer) {
    if (!(pred.variance > 0.0)) throw DegenerateVariance("bin probabilities need a positive variance");
    const double sd = pred.sd();
    const auto& e = quantizer.edges();
    std::vector<double> p(quantizer.size());
    double upper_tail = 1.0;  // Ψ at the lower edge of the current bin
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double next = j + 1 < p.size() ? gaussian_tail((e[j] - pred.mean) / sd) : 0.0;
        p[j] = std::max(0.0, upper_tail - next);
        upper_tail = next;
    }
    return p;
}

struct SurHistoryEntry {
    Point point;
    double value = 0.0;
    double criterion = 0.0;
    /// Candidate index, or -1 for points outside the candidate set.
    long candidate = -1;
};

/// Evaluated design, the fixed candidate set S ⊂ X drawn from μ and the
/// per-iteration cache over S: Kriging means, variances and the matrix of
/// prediction-error covariances cₙ(y_i, y_j).
class SurState {
public:
    SurState(KrigingModel model, PointSet candidates, double u, std::size_t q)
        : model_(std::move(model)), candidates_(std::move(candidates)), u_(u), q_(q) {
        if (q_ < 2) throw InvalidArgument("SUR needs a quantizer size Q >= 2");
        if (candidates_.empty()) throw InvalidArgument("SUR needs a non-empty candidate set");
        for (const auto& c : candidates_)
            if (static_cast<std::size_t>(c.size()) != model_.dimension())
                throw InvalidArgument("candidate dimension does not match the model");
        excluded_.assign(candidates_.size(), false);
        for (const auto& x : model_.design().points) exclude_near(x);
        k_ss_ = model_.covariance().gram(candidates_);
        refresh();
    }

    [[nodiscard]] const KrigingModel& model() const noexcept { return model_; }
    [[nodiscard]] const PointSet& candidates() const noexcept { return candidates_; }
    [[nodiscard]] double threshold() const noexcept { return u_; }
    [[nodiscard]] std::size_t quantizer_size() const noexcept { return q_; }
    [[nodiscard]] const std::vector<SurHistoryEntry>& history() const noexcept { return history_; }
    [[nodiscard]] bool excluded(std::size_t i) const { return excluded_.at(i); }
    [[nodiscard]] std::size_t remaining() const {
        return static_cast<std::size_t>(std::count(excluded_.begin(), excluded_.end(), false));
    }

    [[nodiscard]] const Eigen::VectorXd& candidate_means() const noexcept { return means_; }
    [[nodiscard]] const Eigen::VectorXd& candidate_variances() const noexcept { return variances_; }
    /// cₙ(y_i, y_j) over the candidate set.
    [[nodiscard]] const Eigen::MatrixXd& error_covariances() const noexcept { return cross_; }

    /// cₙ(y_i, x) for every candidate y_i.
    [[nodiscard]] Eigen::VectorXd error_covariances_with(const Point& x) const {
        const Eigen::VectorXd r = model_.rhs(x);
        Eigen::VectorXd c = -(solutions_.transpose() * r);
        for (std::size_t i = 0; i < candidates_.size(); ++i)
            c[static_cast<Eigen::Index>(i)] += model_.covariance().between(candidates_[i], x);
        return c;
    }

    /// Record the evaluation of candidate `index`.
    void observe(std::size_t index, double value, double criterion) {
        const Point x = candidates_.at(index);
        model_ = add_point(model_, x, value);
        exclude_near(x);
        history_.push_back({x, value, criterion, static_cast<long>(index)});
        refresh();
    }

    /// Record an evaluation at an arbitrary point.
    void observe_point(const Point& x, double value, double criterion) {
        model_ = add_point(model_, x, value);
        exclude_near(x);
        long idx = -1;
        for (std::size_t i = 0; i < candidates_.size(); ++i)
            if ((candidates_[i] - x).norm() <= kDuplicateTolerance) idx = static_cast<long>(i);
        history_.push_back({x, value, criterion, idx});
        refresh();
    }

private:
    void exclude_near(const Point& x) {
        for (std::size_t i = 0; i < candidates_.size(); ++i)
            if ((candidates_[i] - x).norm() <= kDuplicateTolerance) excluded_[i] = true;
    }

    void refresh() {
        const auto l = static_cast<Eigen::Index>(candidates_.size());
        const auto m = static_cast<Eigen::Index>(model_.size() + model_.basis().size());
        Eigen::MatrixXd rhs(m, l);
        for (Eigen::Index i = 0; i < l; ++i) rhs.col(i) = model_.rhs(candidates_[static_cast<std::size_t>(i)]);
        solutions_ = model_.solve_columns(rhs);
        const Eigen::Map<const Eigen::VectorXd> y(model_.design().values.data(),
                                                  static_cast<Eigen::Index>(model_.size()));
        means_ = solutions_.topRows(static_cast<Eigen::Index>(model_.size())).transpose() * y;
        const double k0 = model_.covariance().at_zero();
        variances_.resize(l);
        for (Eigen::Index i = 0; i < l; ++i)
            variances_[i] = std::max(0.0, k0 - solutions_.col(i).dot(rhs.col(i)));
        cross_ = k_ss_ - solutions_.transpose() * rhs;
    }

    KrigingModel model_;
    PointSet candidates_;
    double u_;
    std::size_t q_;
    std::vector<bool> excluded_;
    std::vector<SurHistoryEntry> history_;
    Eigen::MatrixXd k_ss_;
    Eigen::MatrixXd solutions_;
    Eigen::VectorXd means_;
    Eigen::VectorXd variances_;
    Eigen::MatrixXd cross_;
};

namespace detail {

/// Υ''ₙ from the prediction at the candidate and its error covariances with
/// every y_i in S:
///   (1/l) Σ_i ( Σ_j P{Δ_Q ξ(x) = z_j} υₙ₊₁(y_i; z_j) )^{1/2}
/// where υₙ₊₁(y; z) uses the hypothetical mean at z and the z-free variance.
inline double sur_criterion(const SurState& state, double mean_c, double var_c,
                            const Eigen::Ref<const Eigen::VectorXd>& cross) {
    const auto& cov = state.model().covariance();
    const double ref = cov.at_zero() != 0.0 ? std::abs(cov.at_zero()) : cov.scale();
    if (!(var_c > 1e-15 * ref)) return std::numeric_limits<double>::infinity();

    Prediction at_candidate;
    at_candidate.mean = mean_c;
    at_candidate.variance = var_c;
    const Quantizer quantizer = make_quantizer(at_candidate, state.quantizer_size());
    const std::vector<double> probs = bin_probabilities(at_candidate, quantizer);
    const auto& levels = quantizer.levels();

    const auto& means = state.candidate_means();
    const auto& vars = state.candidate_variances();
    const double u = state.threshold();
    double total = 0.0;
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        const double slope = cross[i] / var_c;
        const double var_new = vars[i] - cross[i] * slope;
        if (!(var_new > 0.0)) continue;  // υ = 0 where the variance vanishes
        const double sd_new = std::sqrt(var_new);
        double acc = 0.0;
        for (std::size_t j = 0; j < levels.size(); ++j) {
            const double m = means[i] + slope * (levels[j] - mean_c);
            acc += probs[j] * gaussian_tail(std::abs(u - m) / sd_new);
        }
        total += std::sqrt(acc);
    }
    return total / static_cast<double>(means.size());
}

}  // namespace detail

/// Υ''ₙ at an arbitrary point (+∞ where the prediction variance vanishes).
inline double criterion(const SurState& state, const Point& candidate) {
    const Prediction p = state.model().predict(candidate);
    if (!(p.variance > 0.0)) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd cross = state.error_covariances_with(candidate);
    return detail::sur_criterion(state, p.mean, p.variance, cross);
}

/// Υ''ₙ at candidate `index` of S, from the cached covariances.
inline double criterion_at(const SurState& state, std::size_t index) {
    const auto i = static_cast<Eigen::Index>(index);
    return detail::sur_criterion(state, state.candidate_means()[i], state.candidate_variances()[i],
                                 state.error_covariances().col(i));
}

struct Selection {
    std::size_t index = 0;
    Point point;
    double criterion = 0.0;
    /// Υ''ₙ for every candidate; +∞ for excluded ones.
    std::vector<double> profile;
};

/// argmin of Υ''ₙ over the non-excluded candidates; ties go to the lowest
/// index. Criterion values are computed in parallel and reduced in index
/// order, so the result does not depend on `threads`.
inline Selection select_next(const SurState& state, unsigned threads = 1) {
    if (state.remaining() == 0) throw ExhaustedCandidates("every candidate has been evaluated");
    const std::size_t l = state.candidates().size();
    Selection s;
    s.profile.assign(l, std::numeric_limits<double>::infinity());
    parallel_for(l, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            if (!state.excluded(i)) s.profile[i] = criterion_at(state, i);
    });
    bool found = false;
    for (std::size_t i = 0; i < l; ++i) {
        if (state.excluded(i)) continue;
        if (!found || s.profile[i] < s.profile[s.index]) {
            s.index = i;
            found = true;
        }
    }
    s.point = state.candidates()[s.index];
    s.criterion = s.profile[s.index];
    return s;
}

/// Υₙ,ₘ: Monte Carlo estimate of E[(|A_u(ξ)|_S - |A_u(ξ̂ₙ)|_S)² | data],
/// where ξ ranges over m conditional paths on S and ξ̂ₙ is the predictor after
/// observing each path's value at the candidate. Meant for small instances.
inline double criterion_oracle_mc(const SurState& state, const Point& candidate, std::size_t m,
                                  std::uint64_t seed, SimulationOptions options = {}) {
    if (m == 0) throw InvalidArgument("oracle needs m >= 1");
    const KrigingModel& model = state.model();
    PointSet grid = state.candidates();
    const std::size_t l = grid.size();
    std::size_t c_idx = l;
    for (std::size_t i = 0; i < l; ++i)
        if ((grid[i] - candidate).norm() <= kDuplicateTolerance) {
            c_idx = i;
            break;
        }
    if (c_idx == l) grid.push_back(candidate);

    const auto paths = sample_conditional_paths(model, grid, m, seed, options);

    bool observed = false;
    for (const auto& x : model.design().points)
        if ((x - candidate).norm() <= kDuplicateTolerance) observed = true;

    std::vector<HypotheticalUpdate::Affine> affine(l);
    const double u = state.threshold();
    if (observed) {
        for (std::size_t i = 0; i < l; ++i) affine[i] = {model.mean(grid[i]), 0.0, 0.0};
    } else {
        const HypotheticalUpdate hyp(model, candidate);
        for (std::size_t i = 0; i < l; ++i) affine[i] = hyp.at(grid[i]);
    }

    double err = 0.0;
    for (const auto& path : paths) {
        const double z = path.values[c_idx];
        std::size_t truth = 0;
        std::size_t plug = 0;
        for (std::size_t i = 0; i < l; ++i) {
            if (path.values[i] >= u) ++truth;
            if (affine[i].mean(z) >= u) ++plug;
        }
        const double diff = (static_cast<double>(truth) - static_cast<double>(plug)) / static_cast<double>(l);
        err += diff * diff;
    }
    return err / static_cast<double>(m);
}

struct SurConfig {
    double u = 0.0;
    std::size_t quantizer_size = 20;
    /// Size of the candidate set S.
    std::size_t candidates = 800;
    /// Stop once the design holds this many points.
    std::size_t n_max = 10;
    std::uint64_t seed = 0;
    GeneralizedCovariance covariance = GeneralizedCovariance::matern(1.0, 1.0, 2.5);
    std::size_t basis_degree = 0;
    InputDistribution mu = InputDistribution::gaussian_diag(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
    /// Stop when min Υ''ₙ falls below this value; disabled when <= 0.
    double criterion_threshold = 0.0;
    /// Monte Carlo size of the plug-in volume estimates (0: same as candidates).
    std::size_t volume_samples = 0;
    /// When set, plug-in volumes are indicator averages over these points
    /// instead of a fresh μ-sample; lets several strategies share samples.
    std::shared_ptr<const PointSet> volume_points;
    unsigned threads = 1;
    KrigingOptions kriging{};
};

struct SurStep {
    std::size_t iteration = 0;
    std::size_t design_size = 0;
    std::optional<Point> point;
    double value = std::numeric_limits<double>::quiet_NaN();
    double criterion_min = std::numeric_limits<double>::quiet_NaN();
    ExcursionEstimate volume;
};

struct SurTrajectory {
    std::vector<SurStep> steps;
    PointSet candidates;
    DesignSet final_design;
    /// Candidates that received +∞ because of a vanishing variance.
    std::size_t degenerate_candidates = 0;
};

using SelectionObserver = std::function<void(std::size_t iteration, const SurState&, const Selection&)>;

inline std::uint64_t candidate_stream_seed(std::uint64_t seed) { return derive_seed(seed, "candidates"); }
inline std::uint64_t sur_volume_seed(std::uint64_t seed) { return derive_seed(seed, "volume"); }

/// The sequential loop: select_next → evaluate → add_point → plug-in volume,
/// until the design holds n_max points or min Υ''ₙ drops below the threshold.
inline SurTrajectory run_sur(const Evaluator& evaluator, const DesignSet& initial_design, const SurConfig& config,
                             const SelectionObserver& observer = {}) {
    if (initial_design.size() == 0) throw InvalidArgument("SUR needs a non-empty initial design");
    const std::size_t d = initial_design.dimension();
    if (d != config.mu.dimension()) throw InvalidArgument("initial design and μ have different dimensions");
    const std::size_t vol_l = config.volume_samples ? config.volume_samples : config.candidates;

    SurTrajectory traj;
    traj.candidates = config.mu.samples(config.candidates, candidate_stream_seed(config.seed));
    SurState state(build_model(initial_design, config.covariance, MonomialBasis(d, config.basis_degree), config.kriging),
                   traj.candidates, config.u, config.quantizer_size);

    auto volume = [&] {
        if (config.volume_points) {
            const KrigingModel& m = state.model();
            ExcursionEstimate e = volume_on_samples([&m](const Point& x) { return m.mean(x); }, config.u,
                                                    *config.volume_points);
            e.seed = config.seed;
            return e;
        }
        return plugin_volume(state.model(), config.u, config.mu, vol_l, sur_volume_seed(config.seed));
    };

    SurStep first;
    first.design_size = state.model().size();
    first.volume = volume();
    traj.steps.push_back(first);

    std::size_t iteration = 0;
    while (state.model().size() < config.n_max && state.remaining() > 0) {
        ++iteration;
        const Selection sel = select_next(state, config.threads);
        for (std::size_t i = 0; i < sel.profile.size(); ++i)
            if (!state.excluded(i) && std::isinf(sel.profile[i])) ++traj.degenerate_candidates;
        if (observer) observer(iteration, state, sel);
        if (!std::isfinite(sel.criterion)) break;
        if (config.criterion_threshold > 0.0 && sel.criterion < config.criterion_threshold) break;
        const double y = evaluator(sel.point);
        if (!std::isfinite(y)) throw NonFiniteValue("evaluator returned a non-finite value at the selected point");
        state.observe(sel.index, y, sel.criterion);

        SurStep step;
        step.iteration = iteration;
        step.design_size = state.model().size();
        step.point = sel.point;
        step.value = y;
        step.criterion_min = sel.criterion;
        step.volume = volume();
        traj.steps.push_back(std::move(step));
    }
    traj.final_design = state.model().design();
    return traj;
}

/// CSV: iteration,x_1..x_d,f,criterion_min,volume,std_error. The initial
/// row (iteration 0) has empty point and value cells.
inline void write_trajectory_csv(std::ostream& os, const SurTrajectory& traj, std::size_t d) {
    os << "iteration,";
    for (std::size_t c = 0; c < d; ++c) os << "x_" << (c + 1) << ',';
    os << "f,criterion_min,volume,std_error\n";
    const auto old = os.precision(17);
    for (const auto& s : traj.steps) {
        os << s.iteration << ',';
        for (std::size_t c = 0; c < d; ++c) {
            if (s.point) os << (*s.point)[static_cast<Eigen::Index>(c)];
            os << ',';
        }
        if (s.point) os << s.value;
        os << ',';
        if (std::isfinite(s.criterion_min)) os << s.criterion_min;
        os << ',' << s.volume.volume << ',' << s.volume.std_error << '\n';
    }
    os.precision(old);
}

}  // namespace exsur

#endif  // EXSUR_SUR_HPP
