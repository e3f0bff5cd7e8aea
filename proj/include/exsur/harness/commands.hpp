#ifndef EXSUR_HARNESS_COMMANDS_HPP
#define EXSUR_HARNESS_COMMANDS_HPP

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "exsur/excursion.hpp"
#include "exsur/harness/config.hpp"
#include "exsur/harness/studies.hpp"
#include "exsur/harness/truth.hpp"
#include "exsur/kriging.hpp"
#include "exsur/simulate.hpp"
#include "exsur/sur.hpp"

namespace exsur::harness {

inline constexpr const char* kVersion = "1.0.0";

using Json = nlohmann::ordered_json;

struct Column {
    std::string name;
    std::string description;
};

/// Writes artifacts into one directory. Each file goes to a temporary name
/// first and is renamed into place, so readers never see a partial file.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    void text(const std::string& name, const std::string& content) {
        const auto target = dir_ / name;
        const auto tmp = dir_ / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw IoError("cannot write '" + tmp.string() + "'");
            out << content;
            if (!out) throw IoError("write failed for '" + tmp.string() + "'");
        }
        std::error_code ec;
        std::filesystem::rename(tmp, target, ec);
        if (ec) throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
        files_.push_back(name);
    }

    /// A CSV and its "<stem>.schema.json" column description.
    void csv(const std::string& name, const std::string& content, const std::vector<Column>& columns,
             const std::string& description) {
        text(name, content);
        Json schema;
        schema["file"] = name;
        schema["description"] = description;
        schema["columns"] = Json::array();
        for (const auto& c : columns) schema["columns"].push_back({{"name", c.name}, {"description", c.description}});
        const auto stem = std::filesystem::path(name).stem().string();
        text(stem + ".schema.json", schema.dump(2) + "\n");
    }

    void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }

    [[nodiscard]] const std::vector<std::string>& files() const noexcept { return files_; }
    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

namespace detail {

inline std::string num(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline Json vec_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline std::string seed_suffix(std::uint64_t seed) { return "_seed_" + std::to_string(seed); }

inline std::vector<Column> point_columns(std::size_t d, const std::string& what) {
    std::vector<Column> cols;
    for (std::size_t c = 0; c < d; ++c) cols.push_back({"x_" + std::to_string(c + 1), what + ", coordinate " + std::to_string(c + 1)});
    return cols;
}

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/// Every parameter that can influence results.
inline Json config_json(const ExperimentConfig& c) {
    Json j;
    j["scenario"] = scenario_name(c.scenario);
    j["seeds"] = c.seeds;
    j["threads"] = c.threads;
    j["covariance"] = {{"family", family_name(c.covariance.family())},
                       {"params", c.covariance.params()},
                       {"cpd_order", c.covariance.cpd_order()}};
    if (auto nu = c.covariance.spectral_nu(c.mu.dimension())) j["covariance"]["spectral_nu"] = *nu;
    j["basis"] = {{"degree", c.basis_degree}, {"size", MonomialBasis(c.mu.dimension(), c.basis_degree).size()}};
    j["distribution"] = {{"kind", distribution_name(c.mu.kind())}, {"dimension", c.mu.dimension()}};
    if (c.mu.kind() == DistributionKind::UniformBox) {
        j["distribution"]["lower"] = detail::vec_json(c.mu.first());
        j["distribution"]["upper"] = detail::vec_json(c.mu.second());
    } else {
        j["distribution"]["mean"] = detail::vec_json(c.mu.first());
        Json cov = Json::array();
        const Eigen::MatrixXd m = c.mu.covariance();
        for (Eigen::Index r = 0; r < m.rows(); ++r) cov.push_back(detail::vec_json(m.row(r).transpose()));
        j["distribution"]["cov"] = cov;
    }
    j["truth"] = {{"grid", c.truth_grid}, {"half_width", c.truth_half_width}, {"jitter", c.truth_jitter},
                  {"trend", c.truth_trend}};
    j["threshold"] = Json::object();
    if (c.threshold.value) j["threshold"]["value"] = *c.threshold.value;
    if (c.threshold.quantile) j["threshold"]["quantile"] = *c.threshold.quantile;
    j["threshold"]["reference_samples"] = c.reference_samples;
    j["sur"] = {{"quantizer", c.quantizer}, {"candidates", c.candidates}, {"n_init", c.n_init},
                {"n_max", c.n_max}, {"criterion_threshold", c.criterion_threshold}, {"jitter", c.kriging_jitter}};
    Json strategies = Json::array();
    for (auto s : c.strategies) strategies.push_back(strategy_name(s));
    j["compare"] = {{"strategies", strategies}, {"budget", c.budget}, {"lattice_half_width", c.lattice_half_width}};
    j["convergence"] = {{"sizes", c.sizes}, {"paths", c.paths}, {"probes", c.probes}, {"level", c.level}};
    j["output"] = {{"dir", c.output_dir}};
    return j;
}

inline Json seed_json(const SeedContext& ctx) {
    return {{"seed", ctx.seed},
            {"truth_seed", truth_seed(ctx.seed)},
            {"reference_seed", reference_seed(ctx.seed)},
            {"candidate_seed", candidate_stream_seed(ctx.seed)},
            {"volume_seed", sur_volume_seed(ctx.seed)},
            {"random_mc_seed", random_mc_seed(ctx.seed)},
            {"threshold", ctx.u},
            {"reference_volume", ctx.reference.volume},
            {"reference_std_error", ctx.reference.std_error}};
}

/// The manifest is the only artifact with a wall-clock value; it sits on its
/// own line so that comparisons can drop it.
inline void write_manifest(ArtifactWriter& out, const std::string& command, const ExperimentConfig& cfg,
                           const Json& seeds) {
    Json m;
    m["program"] = "exsur";
    m["version"] = kVersion;
    m["command"] = command;
    m["config"] = config_json(cfg);
    m["seed_derivation"] = {
        {"rule", "stream(seed, role) = splitmix64(splitmix64(seed) ^ fnv1a64(role)); "
                 "stream(seed, role, j) = splitmix64(stream(seed, role) + splitmix64(j))"},
        {"generator", "std::mt19937_64"},
        {"roles", {"truth", "reference", "candidates", "volume", "mu-samples", "random_mc", "convergence", "path",
                   "conditional"}}};
    m["seeds"] = seeds;
    m["files"] = out.files();
    m["generated_at"] = detail::utc_timestamp();
    out.json("manifest.json", m);
}

// ---------------------------------------------------------------------------

inline std::vector<Column> trajectory_columns(std::size_t d) {
    std::vector<Column> cols{{"iteration", "loop iteration; 0 is the initial design"}};
    for (auto& c : detail::point_columns(d, "selected point")) cols.push_back(c);
    cols.push_back({"f", "function value at the selected point"});
    cols.push_back({"criterion_min", "minimum of the SUR criterion over the candidates at selection time"});
    cols.push_back({"volume", "plug-in volume estimate after the evaluation"});
    cols.push_back({"std_error", "binomial standard error of the volume estimate"});
    return cols;
}

inline std::vector<Column> design_columns(std::size_t d) {
    auto cols = detail::point_columns(d, "design point");
    cols.push_back({"f", "observed value"});
    return cols;
}

inline std::string design_csv(const DesignSet& d) {
    std::ostringstream os;
    write_design_csv(os, d);
    return os.str();
}

inline Json run_sur_scenario(const ExperimentConfig& cfg, ArtifactWriter& out, Json& seeds) {
    const TruthFactory factory(cfg);
    const std::size_t d = cfg.mu.dimension();
    Json results = Json::array();
    for (auto seed : cfg.seeds) {
        const SeedContext ctx = prepare_seed(cfg, factory, seed);
        seeds.push_back(seed_json(ctx));
        const StrategyRun run = run_sur_strategy(cfg, ctx, cfg.n_max);
        std::ostringstream os;
        write_trajectory_csv(os, *run.trajectory, d);
        out.csv("trajectory" + detail::seed_suffix(seed) + ".csv", os.str(), trajectory_columns(d),
                "SUR loop trajectory");
        out.csv("design" + detail::seed_suffix(seed) + ".csv", design_csv(run.trajectory->final_design),
                design_columns(d), "final design");
        results.push_back({{"seed", seed},
                           {"threshold", ctx.u},
                           {"reference_volume", ctx.reference.volume},
                           {"final_volume", run.curve.back().estimate.volume},
                           {"abs_error", run.final_error(ctx.reference.volume)},
                           {"evaluations", run.curve.back().n},
                           {"degenerate_candidates", run.trajectory->degenerate_candidates}});
    }
    return results;
}

inline std::vector<Column> curve_columns() {
    return {{"n", "number of evaluations of f"},
            {"volume", "volume estimate"},
            {"std_error", "binomial standard error of the estimate"},
            {"reference", "reference volume of f on the shared reference sample"},
            {"abs_error", "absolute difference between estimate and reference"}};
}

inline std::string curve_csv(const StrategyRun& run, double reference) {
    std::ostringstream os;
    os << "n,volume,std_error,reference,abs_error\n";
    for (const auto& p : run.curve)
        os << p.n << ',' << detail::num(p.estimate.volume) << ',' << detail::num(p.estimate.std_error) << ','
           << detail::num(reference) << ',' << detail::num(std::abs(p.estimate.volume - reference)) << '\n';
    return os.str();
}

inline Json run_grid_scenario(const ExperimentConfig& cfg, ArtifactWriter& out, Json& seeds) {
    const TruthFactory factory(cfg);
    Json results = Json::array();
    for (auto seed : cfg.seeds) {
        const SeedContext ctx = prepare_seed(cfg, factory, seed);
        seeds.push_back(seed_json(ctx));
        const StrategyRun run = run_lattice_strategy(cfg, ctx, cfg.n_max);
        out.csv("grid" + detail::seed_suffix(seed) + ".csv", curve_csv(run, ctx.reference.volume), curve_columns(),
                "plug-in volume of lattice designs of increasing size");
        results.push_back({{"seed", seed},
                           {"threshold", ctx.u},
                           {"reference_volume", ctx.reference.volume},
                           {"final_volume", run.curve.back().estimate.volume},
                           {"abs_error", run.final_error(ctx.reference.volume)}});
    }
    return results;
}

inline Json run_convergence_scenario(const ExperimentConfig& cfg, ArtifactWriter& out, Json& seeds, bool paths) {
    Json results = Json::array();
    const std::vector<std::uint64_t> used =
        paths ? cfg.seeds : std::vector<std::uint64_t>{cfg.seeds.front()};
    for (auto seed : used) {
        seeds.push_back({{"seed", seed}});
        const ConvergenceStudy st = run_convergence(cfg, seed, paths);
        std::ostringstream os;
        std::vector<Column> cols{{"n", "lattice cells; the design has n + 1 nodes"},
                                 {"nodes", "number of design points"},
                                 {"fill_distance", "largest distance from a probe to the design"},
                                 {"sup_sd", "largest prediction standard deviation over the probes"}};
        if (paths) {
            cols.push_back({"misclassification", "indicator mismatch rate averaged over probes and paths"});
            cols.push_back({"misclassification_exact", "the same rate by quadrature over the predictor law"});
            cols.push_back({"bound", "sup_sd * sqrt(|log sup_sd|)"});
            cols.push_back({"ratio", "misclassification / bound"});
            os << "n,nodes,fill_distance,sup_sd,misclassification,misclassification_exact,bound,ratio\n";
        } else {
            os << "n,nodes,fill_distance,sup_sd\n";
        }
        Json rows = Json::array();
        for (std::size_t i = 0; i < st.rows.size(); ++i) {
            const auto& r = st.rows[i];
            os << cfg.sizes[i] << ',' << r.n << ',' << detail::num(r.fill_distance) << ',' << detail::num(r.sup_sd);
            if (paths)
                os << ',' << detail::num(r.misclassification) << ',' << detail::num(r.misclassification_exact) << ','
                   << detail::num(r.bound) << ',' << detail::num(r.ratio);
            os << '\n';
        }
        Json res{{"seed", seed}, {"slope", st.slope}, {"target_slope", st.target_slope}};
        if (paths) {
            res["ratio_spread"] = st.ratio_spread;
            out.csv("convergence" + detail::seed_suffix(seed) + ".csv", os.str(), cols,
                    "threshold misclassification against the prediction standard deviation");
        } else {
            out.csv("fill_rate.csv", os.str(), cols, "prediction standard deviation against fill distance");
        }
        results.push_back(res);
    }
    return results;
}

inline Json run_profile_scenario(const ExperimentConfig& cfg, ArtifactWriter& out, Json& seeds) {
    const TruthFactory factory(cfg);
    Json results = Json::array();
    for (auto seed : cfg.seeds) {
        const SeedContext ctx = prepare_seed(cfg, factory, seed);
        seeds.push_back(seed_json(ctx));
        const StrategyRun run = run_sur_strategy(cfg, ctx, cfg.n_max);
        const SurTrajectory& traj = *run.trajectory;
        const std::string sfx = detail::seed_suffix(seed);

        std::ostringstream tr;
        write_trajectory_csv(tr, traj, 1);
        out.csv("trajectory" + sfx + ".csv", tr.str(), trajectory_columns(1), "SUR loop trajectory");
        out.csv("design" + sfx + ".csv", design_csv(traj.final_design), design_columns(1), "final design");

        const KrigingModel model = build_model(traj.final_design, cfg.covariance, MonomialBasis(1, cfg.basis_degree),
                                               KrigingOptions{cfg.kriging_jitter});
        // predictor, excursion probability and density on a plotting grid
        const Box box = support_box(cfg.mu, 4.0);
        std::ostringstream pc;
        pc << "x,f,mean,sd,lower95,upper95,excursion_probability,density\n";
        const std::size_t np = 801;
        for (std::size_t i = 0; i < np; ++i) {
            const double x = box.lower[0] + (box.upper[0] - box.lower[0]) * static_cast<double>(i) / (np - 1);
            const Point p = Point::Constant(1, x);
            const Prediction pr = model.predict(p);
            pc << detail::num(x) << ',' << detail::num((*ctx.truth)(p)) << ',' << detail::num(pr.mean) << ','
               << detail::num(pr.sd()) << ',' << detail::num(pr.mean - 1.959963984540054 * pr.sd()) << ','
               << detail::num(pr.mean + 1.959963984540054 * pr.sd()) << ','
               << detail::num(excursion_probability(pr, ctx.u)) << ',' << detail::num(cfg.mu.density(p)) << '\n';
        }
        out.csv("predictor" + sfx + ".csv", pc.str(),
                {{"x", "plotting location"},
                 {"f", "true function"},
                 {"mean", "Kriging predictor"},
                 {"sd", "prediction standard deviation"},
                 {"lower95", "mean - 1.96 sd"},
                 {"upper95", "mean + 1.96 sd"},
                 {"excursion_probability", "P{xi(x) >= u | observations}"},
                 {"density", "density of the input distribution"}},
                "predictor, confidence band, excursion probability and input density");

        // criterion profile over the candidates for the next evaluation
        const SurState state(model, traj.candidates, ctx.u, cfg.quantizer);
        Json next = nullptr;
        std::ostringstream cp;
        cp << "index,x,criterion,excluded\n";
        if (state.remaining() > 0) {
            const Selection sel = select_next(state, cfg.threads);
            for (std::size_t i = 0; i < traj.candidates.size(); ++i) {
                cp << i << ',' << detail::num(traj.candidates[i][0]) << ',';
                if (!state.excluded(i)) cp << detail::num(sel.profile[i]);
                cp << ',' << (state.excluded(i) ? 1 : 0) << '\n';
            }
            next = {{"index", sel.index}, {"x", sel.point[0]}, {"criterion", sel.criterion}};
        }
        out.csv("criterion_profile" + sfx + ".csv", cp.str(),
                {{"index", "candidate index"},
                 {"x", "candidate location"},
                 {"criterion", "SUR criterion if this candidate were evaluated next (empty when excluded)"},
                 {"excluded", "1 if the candidate is already in the design"}},
                "SUR criterion over the candidate set after the last evaluation");
        results.push_back({{"seed", seed},
                           {"threshold", ctx.u},
                           {"evaluations", traj.final_design.size()},
                           {"reference_volume", ctx.reference.volume},
                           {"final_volume", run.curve.back().estimate.volume},
                           {"next_point", next}});
    }
    return results;
}

/// `run` verb: executes the configured scenario.
inline Json cmd_run(const ExperimentConfig& cfg) {
    ArtifactWriter out(cfg.output_dir);
    Json seeds = Json::array();
    Json results;
    switch (cfg.scenario) {
        case Scenario::SurRun: results = run_sur_scenario(cfg, out, seeds); break;
        case Scenario::GridRun: results = run_grid_scenario(cfg, out, seeds); break;
        case Scenario::ConvergenceTheorem: results = run_convergence_scenario(cfg, out, seeds, true); break;
        case Scenario::FillRate: results = run_convergence_scenario(cfg, out, seeds, false); break;
        case Scenario::Profile1d: results = run_profile_scenario(cfg, out, seeds); break;
    }
    Json summary{{"command", "run"}, {"scenario", scenario_name(cfg.scenario)}, {"results", results}};
    out.json("summary.json", summary);
    write_manifest(out, "run", cfg, seeds);
    return summary;
}

/// `compare` verb: paired strategies on the same seeded functions.
inline Json cmd_compare(const ExperimentConfig& cfg) {
    require_comparison(cfg);
    ArtifactWriter out(cfg.output_dir);
    const Comparison cmp = run_comparison(cfg);

    std::ostringstream os;
    os << "strategy,seed,n,volume,std_error,reference,abs_error\n";
    for (std::size_t k = 0; k < cmp.runs.size(); ++k)
        for (std::size_t j = 0; j < cmp.contexts.size(); ++j) {
            const double ref = cmp.contexts[j].reference.volume;
            for (const auto& p : cmp.runs[k][j].curve)
                os << strategy_name(cfg.strategies[k]) << ',' << cmp.contexts[j].seed << ',' << p.n << ','
                   << detail::num(p.estimate.volume) << ',' << detail::num(p.estimate.std_error) << ','
                   << detail::num(ref) << ',' << detail::num(std::abs(p.estimate.volume - ref)) << '\n';
        }
    out.csv("compare.csv", os.str(),
            {{"strategy", "design strategy"},
             {"seed", "experiment seed (paired across strategies)"},
             {"n", "number of evaluations of f"},
             {"volume", "volume estimate"},
             {"std_error", "binomial standard error of the estimate"},
             {"reference", "reference volume of f"},
             {"abs_error", "absolute difference between estimate and reference"}},
            "error against evaluations, one curve per strategy and seed");

    std::ostringstream wr;
    wr << "strategy_a,strategy_b,wins_a,seeds,win_rate\n";
    Json pairs = Json::array();
    const std::size_t ns = cmp.contexts.size();
    for (std::size_t a = 0; a < cmp.runs.size(); ++a)
        for (std::size_t b = 0; b < cmp.runs.size(); ++b) {
            if (a == b) continue;
            const std::size_t w = cmp.wins(a, b);
            const double rate = static_cast<double>(w) / static_cast<double>(ns);
            wr << strategy_name(cfg.strategies[a]) << ',' << strategy_name(cfg.strategies[b]) << ',' << w << ','
               << ns << ',' << detail::num(rate) << '\n';
            pairs.push_back({{"strategy_a", strategy_name(cfg.strategies[a])},
                             {"strategy_b", strategy_name(cfg.strategies[b])},
                             {"wins_a", w},
                             {"seeds", ns},
                             {"win_rate", rate}});
        }
    out.csv("win_rate.csv", wr.str(),
            {{"strategy_a", "first strategy"},
             {"strategy_b", "second strategy"},
             {"wins_a", "seeds where a's final error is no larger than b's"},
             {"seeds", "number of paired seeds"},
             {"win_rate", "wins_a / seeds"}},
            "pairwise comparison of final errors");

    Json seeds = Json::array();
    for (const auto& ctx : cmp.contexts) seeds.push_back(seed_json(ctx));
    Json summary{{"command", "compare"}, {"budget", cfg.budget}, {"win_rates", pairs}};
    out.json("summary.json", summary);
    write_manifest(out, "compare", cfg, seeds);
    return summary;
}

/// `simulate` verb: the seeded true functions on the truth grid.
inline Json cmd_simulate(const ExperimentConfig& cfg) {
    ArtifactWriter out(cfg.output_dir);
    const TruthFactory factory(cfg);
    std::vector<PathSample> paths;
    Json seeds = Json::array();
    for (auto seed : cfg.seeds) {
        paths.push_back(factory.sampler().draw(cfg.truth_trend, truth_seed(seed)));
        seeds.push_back({{"seed", seed}, {"truth_seed", truth_seed(seed)}});
    }
    std::ostringstream os;
    write_paths_csv(os, paths);
    auto cols = detail::point_columns(cfg.mu.dimension(), "grid node");
    for (std::size_t j = 0; j < paths.size(); ++j)
        cols.push_back({"path_" + std::to_string(j), "path for seed " + std::to_string(cfg.seeds[j])});
    out.csv("paths.csv", os.str(), cols, "simulated sample paths on the truth grid");
    Json summary{{"command", "simulate"},
                 {"paths", paths.size()},
                 {"grid_points", factory.grid().size()},
                 {"representation", paths.front().provenance.representation}};
    out.json("summary.json", summary);
    write_manifest(out, "simulate", cfg, seeds);
    return summary;
}

/// `estimate` verb: plug-in volume of a Kriging model fitted to a design file.
/// A quantile threshold is resolved on the predictor over the μ-sample.
inline Json cmd_estimate(const ExperimentConfig& cfg, const std::string& design_path) {
    std::ifstream in(design_path);
    if (!in) throw IoError("cannot open design file '" + design_path + "'");
    const DesignSet design = read_design_csv(in);
    if (design.dimension() != cfg.mu.dimension())
        throw ConfigError("design dimension does not match the distribution");
    ArtifactWriter out(cfg.output_dir);
    const KrigingModel model = build_model(design, cfg.covariance, MonomialBasis(design.dimension(), cfg.basis_degree),
                                           KrigingOptions{cfg.kriging_jitter});
    std::ostringstream os;
    write_estimate_csv_header(os);
    Json seeds = Json::array();
    Json rows = Json::array();
    for (auto seed : cfg.seeds) {
        double u = 0.0;
        if (cfg.threshold.value) {
            u = *cfg.threshold.value;
        } else {
            std::vector<double> vals;
            for (const auto& x : cfg.mu.samples(cfg.reference_samples, reference_seed(seed))) vals.push_back(model.mean(x));
            u = empirical_quantile(std::move(vals), *cfg.threshold.quantile);
        }
        const ExcursionEstimate e = plugin_volume(model, u, cfg.mu, cfg.reference_samples, seed);
        write_estimate_csv_row(os, e);
        seeds.push_back({{"seed", seed}, {"mu_stream_seed", volume_stream_seed(seed)}, {"threshold", u}});
        rows.push_back({{"seed", seed}, {"threshold", u}, {"volume", e.volume}, {"std_error", e.std_error}});
    }
    out.csv("estimate.csv", os.str(),
            {{"u", "threshold"},
             {"volume", "plug-in volume estimate"},
             {"std_error", "binomial standard error"},
             {"l", "Monte Carlo sample size"},
             {"seed", "seed of the input sample"}},
            "plug-in excursion volume of the fitted predictor");
    Json summary{{"command", "estimate"}, {"design_size", design.size()}, {"estimates", rows}};
    out.json("summary.json", summary);
    write_manifest(out, "estimate", cfg, seeds);
    return summary;
}

/// One-line JSON error description for the CLI.
inline std::string error_line(const std::exception& e) {
    Json j;
    if (const auto* fe = dynamic_cast<const FieldError*>(&e)) {
        j["error"] = fe->kind();
        j["field"] = fe->field();
    } else if (const auto* xe = dynamic_cast<const Error*>(&e)) {
        j["error"] = xe->kind();
    } else {
        j["error"] = "InternalError";
    }
    j["message"] = e.what();
    return j.dump();
}

}  // namespace exsur::harness

#endif  // EXSUR_HARNESS_COMMANDS_HPP
