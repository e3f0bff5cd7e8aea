#ifndef EXSUR_EXCURSION_HPP
#define EXSUR_EXCURSION_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

#include "exsur/distribution.hpp"
#include "exsur/error.hpp"
#include "exsur/gaussian.hpp"
#include "exsur/kriging.hpp"
#include "exsur/rng.hpp"

namespace exsur {

using Evaluator = std::function<double(const Point&)>;

/// Estimate of |A_u| = P{f(X) ≥ u} from n_samples indicator draws.
struct ExcursionEstimate {
    double threshold = 0.0;
    double volume = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

/// Seed of the μ-sample stream used by mc_volume for a given user seed.
inline std::uint64_t volume_stream_seed(std::uint64_t seed) { return derive_seed(seed, "mu-samples"); }

/// Indicator average over a fixed sample set.
inline ExcursionEstimate volume_on_samples(const Evaluator& evaluator, double u, const PointSet& samples) {
    if (samples.empty()) throw InvalidArgument("volume estimate needs at least one sample");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double v = evaluator(samples[i]);
        if (!std::isfinite(v))
            throw NonFiniteValue("evaluator returned a non-finite value at sample " + std::to_string(i));
        if (v >= u) ++hits;
    }
    ExcursionEstimate e;
    e.threshold = u;
    e.n_samples = samples.size();
    e.volume = static_cast<double>(hits) / static_cast<double>(samples.size());
    e.std_error = std::sqrt(e.volume * (1.0 - e.volume) / static_cast<double>(samples.size()));
    return e;
}

/// Monte Carlo estimate (1/l) Σ 1{f(X_i) ≥ u}, X_i ~ μ i.i.d.
inline ExcursionEstimate mc_volume(const Evaluator& evaluator, double u, const InputDistribution& mu,
                                   std::size_t l, std::uint64_t seed) {
    if (l == 0) throw InvalidArgument("mc_volume needs l >= 1");
    Rng rng(volume_stream_seed(seed));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < l; ++i) {
        const double v = evaluator(mu.sample(rng));
        if (!std::isfinite(v))
            throw NonFiniteValue("evaluator returned a non-finite value at sample " + std::to_string(i));
        if (v >= u) ++hits;
    }
    ExcursionEstimate e;
    e.threshold = u;
    e.n_samples = l;
    e.seed = seed;
    e.volume = static_cast<double>(hits) / static_cast<double>(l);
    e.std_error = std::sqrt(e.volume * (1.0 - e.volume) / static_cast<double>(l));
    return e;
}

/// Probability that ξ(x) ≥ u under the predictive law N(mean, σ²); the
/// indicator 1{mean ≥ u} when σ = 0.
inline double excursion_probability(const Prediction& pred, double u) {
    if (pred.variance <= 0.0) return pred.mean >= u ? 1.0 : 0.0;
    return gaussian_tail((u - pred.mean) / pred.sd());
}

/// υ(x) = Ψ(|u - mean| / σ), in [0, 1/2]; 0 when σ = 0.
inline double misclassification_proxy(double mean, double sd, double u) {
    if (!(sd > 0.0)) return 0.0;
    return gaussian_tail(std::abs(u - mean) / sd);
}

inline double misclassification_proxy(const Prediction& pred, double u) {
    return misclassification_proxy(pred.mean, pred.variance > 0.0 ? pred.sd() : 0.0, u);
}

/// |A_u(ξ̂ₙ)|_l: mc_volume applied to the Kriging mean.
inline ExcursionEstimate plugin_volume(const KrigingModel& model, double u, const InputDistribution& mu,
                                       std::size_t l, std::uint64_t seed) {
    return mc_volume([&model](const Point& x) { return model.mean(x); }, u, mu, l, seed);
}

inline void write_estimate_csv_header(std::ostream& os) { os << "u,volume,std_error,l,seed\n"; }

inline void write_estimate_csv_row(std::ostream& os, const ExcursionEstimate& e) {
    const auto old = os.precision(17);
    os << e.threshold << ',' << e.volume << ',' << e.std_error << ',' << e.n_samples << ',' << e.seed << '\n';
    os.precision(old);
}

}  // namespace exsur

#endif  // EXSUR_EXCURSION_HPP
