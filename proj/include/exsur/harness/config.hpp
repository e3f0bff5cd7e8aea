#ifndef EXSUR_HARNESS_CONFIG_HPP
#define EXSUR_HARNESS_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "exsur/covariance.hpp"
#include "exsur/distribution.hpp"
#include "exsur/error.hpp"

namespace exsur::harness {

enum class Scenario { SurRun, GridRun, ConvergenceTheorem, FillRate, Profile1d };

inline std::string_view scenario_name(Scenario s) {
    switch (s) {
        case Scenario::SurRun: return "sur_run";
        case Scenario::GridRun: return "grid_run";
        case Scenario::ConvergenceTheorem: return "convergence_theorem";
        case Scenario::FillRate: return "fill_rate";
        case Scenario::Profile1d: return "profile_1d";
    }
    return "?";
}

enum class Strategy { Sur, Lattice, RandomMc };

inline std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Sur: return "sur";
        case Strategy::Lattice: return "lattice";
        case Strategy::RandomMc: return "random_mc";
    }
    return "?";
}

/// Config errors carry the offending "[section] key" so the CLI can report
/// it on one line.
class FieldError : public ConfigError {
public:
    FieldError(std::string field, const std::string& message)
        : ConfigError(field + ": " + message), field_(std::move(field)) {}
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ThresholdSpec {
    std::optional<double> value;
    /// Level p: u is the empirical p-quantile of f(X), X ~ μ, over the
    /// reference sample.
    std::optional<double> quantile;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::SurRun;
    std::vector<std::uint64_t> seeds;
    unsigned threads = 1;

    GeneralizedCovariance covariance = GeneralizedCovariance::matern(1.0, 1.0, 2.5);
    std::size_t basis_degree = 0;
    InputDistribution mu = InputDistribution::gaussian_diag(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));

    // simulated truth
    std::size_t truth_grid = 2001;
    double truth_half_width = 5.0;
    double truth_jitter = 1e-10;
    std::vector<double> truth_trend;

    ThresholdSpec threshold{std::nullopt, 0.9};
    std::size_t reference_samples = 20000;

    // SUR loop
    std::size_t quantizer = 20;
    std::size_t candidates = 800;
    std::size_t n_init = 3;
    std::size_t n_max = 15;
    double criterion_threshold = 0.0;
    double kriging_jitter = 0.0;

    // compare
    std::vector<Strategy> strategies;
    std::size_t budget = 15;
    double lattice_half_width = 3.0;

    // convergence studies
    std::vector<std::size_t> sizes{5, 10, 20, 40, 80};
    std::size_t paths = 100;
    std::size_t probes = 10001;
    double level = 1.0;

    std::string output_dir = "out";
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

template <class T>
T parse_number(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    T v{};
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (ec != std::errc() || ptr != end || t.empty()) throw FieldError(field, "expected a number, got '" + t + "'");
    if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(v)) throw FieldError(field, "value must be finite");
    return v;
}

/// Reads keys from a ptree and remembers which ones were consumed, so that
/// unknown keys can be reported instead of silently ignored.
class Reader {
public:
    explicit Reader(const boost::property_tree::ptree& root) : root_(root) {}

    [[nodiscard]] std::optional<std::string> get(const std::string& section, const std::string& key) {
        used_.insert(section + "." + key);
        const auto sec = root_.get_child_optional(section);
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    template <class T>
    void number(const std::string& section, const std::string& key, T& out) {
        if (auto v = get(section, key)) out = parse_number<T>(field(section, key), *v);
    }

    template <class T>
    void numbers(const std::string& section, const std::string& key, std::vector<T>& out) {
        if (auto v = get(section, key)) {
            out.clear();
            for (const auto& item : split_list(*v)) out.push_back(parse_number<T>(field(section, key), item));
        }
    }

    static std::string field(const std::string& section, const std::string& key) {
        return "[" + section + "] " + key;
    }

    void reject_unknown() const {
        for (const auto& [section, tree] : root_) {
            if (tree.empty() && !tree.data().empty())
                throw FieldError(section, "key outside of any section");
            for (const auto& [key, value] : tree) {
                (void)value;
                if (!used_.count(section + "." + key)) throw FieldError(field(section, key), "unknown key");
            }
        }
    }

private:
    const boost::property_tree::ptree& root_;
    std::set<std::string> used_;
};

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& name) {
    for (Scenario s : {Scenario::SurRun, Scenario::GridRun, Scenario::ConvergenceTheorem, Scenario::FillRate,
                       Scenario::Profile1d})
        if (scenario_name(s) == name) return s;
    throw FieldError("[experiment] scenario", "unknown scenario '" + name + "'");
}

inline Strategy parse_strategy(const std::string& name) {
    for (Strategy s : {Strategy::Sur, Strategy::Lattice, Strategy::RandomMc})
        if (strategy_name(s) == name) return s;
    throw FieldError("[compare] strategies", "unknown strategy '" + name + "'");
}

/// Parses the INI text. Every referenced precondition is checked here, before
/// any simulation starts.
inline ExperimentConfig parse_config(std::istream& is) {
    boost::property_tree::ptree root;
    try {
        boost::property_tree::ini_parser::read_ini(is, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw FieldError("line " + std::to_string(e.line()), e.message());
    }
    detail::Reader r(root);
    ExperimentConfig c;
    using detail::Reader;

    if (auto s = r.get("experiment", "scenario")) c.scenario = parse_scenario(*s);
    if (!r.get("experiment", "seeds")) throw FieldError("[experiment] seeds", "missing");
    r.numbers("experiment", "seeds", c.seeds);
    if (c.seeds.empty()) throw FieldError("[experiment] seeds", "at least one seed is required");
    r.number("experiment", "threads", c.threads);
    if (c.threads == 0) throw FieldError("[experiment] threads", "must be >= 1");

    {
        std::string family = "matern";
        if (auto f = r.get("covariance", "family")) family = *f;
        std::vector<double> params;
        r.numbers("covariance", "params", params);
        if (params.empty()) {
            if (family == "matern") params = {1.0, 1.0, 2.5};
            if (family == "power_linear" || family == "cubic") params = {1.0};
        }
        try {
            c.covariance = GeneralizedCovariance(parse_family(family), params);
        } catch (const InvalidArgument& e) {
            throw FieldError("[covariance]", e.what());
        }
    }
    r.number("basis", "degree", c.basis_degree);
    if (c.basis_degree < c.covariance.cpd_order())
        throw FieldError("[basis] degree", "must be >= the covariance order " +
                                               std::to_string(c.covariance.cpd_order()));

    {
        std::string kind = "gaussian_diag";
        if (auto k = r.get("distribution", "kind")) kind = *k;
        std::vector<double> a{0.0}, b{1.0}, cov;
        try {
            if (kind == "gaussian_diag") {
                r.numbers("distribution", "mean", a);
                r.numbers("distribution", "sd", b);
                c.mu = InputDistribution::gaussian_diag(detail::to_vector(a), detail::to_vector(b));
            } else if (kind == "gaussian_full") {
                r.numbers("distribution", "mean", a);
                r.numbers("distribution", "cov", cov);
                const auto d = static_cast<Eigen::Index>(a.size());
                if (static_cast<Eigen::Index>(cov.size()) != d * d)
                    throw FieldError("[distribution] cov", "expects d*d row-major entries");
                const Eigen::MatrixXd m =
                    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                        cov.data(), d, d);
                c.mu = InputDistribution::gaussian_full(detail::to_vector(a), m);
            } else if (kind == "uniform_box") {
                a = {0.0};
                r.numbers("distribution", "lower", a);
                r.numbers("distribution", "upper", b);
                c.mu = InputDistribution::uniform_box(detail::to_vector(a), detail::to_vector(b));
            } else {
                throw FieldError("[distribution] kind", "unknown distribution '" + kind + "'");
            }
        } catch (const InvalidArgument& e) {
            throw FieldError("[distribution]", e.what());
        }
    }

    r.number("truth", "grid", c.truth_grid);
    r.number("truth", "half_width", c.truth_half_width);
    r.number("truth", "jitter", c.truth_jitter);
    r.numbers("truth", "trend", c.truth_trend);
    if (c.truth_grid < 2) throw FieldError("[truth] grid", "needs at least 2 points per axis");
    if (c.truth_half_width <= 0) throw FieldError("[truth] half_width", "must be positive");
    if (c.truth_jitter < 0) throw FieldError("[truth] jitter", "must be non-negative");
    if (!c.truth_trend.empty() &&
        c.truth_trend.size() != MonomialBasis(c.mu.dimension(), c.basis_degree).size())
        throw FieldError("[truth] trend", "needs one coefficient per basis function");

    {
        const auto v = r.get("threshold", "value");
        const auto q = r.get("threshold", "quantile");
        if (v && q) throw FieldError("[threshold]", "give either value or quantile, not both");
        if (v) c.threshold = {detail::parse_number<double>("[threshold] value", *v), std::nullopt};
        if (q) {
            const double p = detail::parse_number<double>("[threshold] quantile", *q);
            if (!(p > 0.0 && p < 1.0)) throw FieldError("[threshold] quantile", "must lie in (0, 1)");
            c.threshold = {std::nullopt, p};
        }
    }
    r.number("threshold", "reference_samples", c.reference_samples);
    if (c.reference_samples == 0) throw FieldError("[threshold] reference_samples", "must be >= 1");

    r.number("sur", "quantizer", c.quantizer);
    r.number("sur", "candidates", c.candidates);
    r.number("sur", "n_init", c.n_init);
    r.number("sur", "n_max", c.n_max);
    r.number("sur", "criterion_threshold", c.criterion_threshold);
    r.number("sur", "jitter", c.kriging_jitter);
    if (c.quantizer < 2) throw FieldError("[sur] quantizer", "must be >= 2");
    if (c.candidates == 0) throw FieldError("[sur] candidates", "must be >= 1");
    const std::size_t q = MonomialBasis(c.mu.dimension(), c.basis_degree).size();
    if (c.n_init < std::max<std::size_t>(q, 1))
        throw FieldError("[sur] n_init", "must be >= " + std::to_string(std::max<std::size_t>(q, 1)) +
                                             " for the basis to be determined");
    if (c.n_max < c.n_init) throw FieldError("[sur] n_max", "must be >= n_init");
    if (c.kriging_jitter < 0) throw FieldError("[sur] jitter", "must be non-negative");

    if (auto s = r.get("compare", "strategies")) {
        for (const auto& name : detail::split_list(*s)) c.strategies.push_back(parse_strategy(name));
    }
    r.number("compare", "budget", c.budget);
    r.number("compare", "lattice_half_width", c.lattice_half_width);
    if (c.lattice_half_width <= 0) throw FieldError("[compare] lattice_half_width", "must be positive");

    r.numbers("convergence", "sizes", c.sizes);
    r.number("convergence", "paths", c.paths);
    r.number("convergence", "probes", c.probes);
    r.number("convergence", "level", c.level);
    if (c.sizes.size() < 2) throw FieldError("[convergence] sizes", "needs at least two design sizes");
    for (std::size_t i = 0; i < c.sizes.size(); ++i) {
        if (c.sizes[i] < std::max<std::size_t>(q, 2)) throw FieldError("[convergence] sizes", "sizes are too small");
        if (i && c.sizes[i] <= c.sizes[i - 1]) throw FieldError("[convergence] sizes", "must be increasing");
    }
    if (c.paths == 0) throw FieldError("[convergence] paths", "must be >= 1");
    if (c.probes < 2) throw FieldError("[convergence] probes", "must be >= 2");

    if (auto o = r.get("output", "dir")) c.output_dir = *o;

    r.reject_unknown();

    const bool study = c.scenario == Scenario::ConvergenceTheorem || c.scenario == Scenario::FillRate;
    if (study && (c.mu.kind() != DistributionKind::UniformBox || c.mu.dimension() != 1))
        throw FieldError("[distribution] kind", "convergence studies run on a 1-D uniform_box");
    if (c.scenario == Scenario::Profile1d && c.mu.dimension() != 1)
        throw FieldError("[distribution]", "profile_1d needs a 1-D distribution");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Strategy list validation for the compare verb.
inline void require_comparison(const ExperimentConfig& c) {
    if (c.strategies.size() < 2) throw FieldError("[compare] strategies", "name at least two strategies");
    std::set<Strategy> seen(c.strategies.begin(), c.strategies.end());
    if (seen.size() != c.strategies.size()) throw FieldError("[compare] strategies", "duplicate strategy");
    const std::size_t q = MonomialBasis(c.mu.dimension(), c.basis_degree).size();
    if (c.budget < std::max<std::size_t>(q, c.n_init))
        throw FieldError("[compare] budget", "must be >= n_init and the basis size");
}

}  // namespace exsur::harness

#endif  // EXSUR_HARNESS_CONFIG_HPP
