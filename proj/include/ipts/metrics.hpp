#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "ipts/error.hpp"
#include "ipts/filters.hpp"
#include "ipts/image.hpp"
#include "ipts/rng.hpp"

namespace ipts {

inline constexpr int kHistogramBins = 256;
inline constexpr double kProbFloor = 1e-12;   // probability guard
inline constexpr double kDenomFloor = 1e-9;   // denominator guard
inline constexpr double kSigmaFloorBins = 0.5;  // Gaussian fit floor
inline constexpr double kScoreClamp = 1e-6;   // per-sample score guard for the loss

using HistogramVector = std::array<double, kHistogramBins>;

/// Intensity histogram with the usual 256 buckets.
struct Histogram {
    std::array<std::uint64_t, kHistogramBins> bins{};
    std::uint64_t total = 0;

    HistogramVector normalized() const {
        HistogramVector p{};
        if (total == 0) return p;
        for (int i = 0; i < kHistogramBins; ++i) p[i] = static_cast<double>(bins[i]) / total;
        return p;
    }
};

/// Pixelwise |a - b|; shapes must match.
inline Image difference_image(const Image& original, const Image& processed) {
    if (!original.same_shape(processed)) {
        throw DimensionMismatch("difference_image: shapes differ");
    }
    Image di(original.width, original.height);
    for (std::size_t i = 0; i < di.size(); ++i) {
        di.pixels[i] = std::abs(original.pixels[i] - processed.pixels[i]);
    }
    return di;
}

/// Bucket index is min(floor(i*256), 255), so 1.0 lands in bin 255.
inline Histogram histogram(const Image& img) {
    Histogram h;
    for (double p : img.pixels) {
        int bin = static_cast<int>(std::floor(clamp01(p) * kHistogramBins));
        if (bin > kHistogramBins - 1) bin = kHistogramBins - 1;
        ++h.bins[bin];
    }
    h.total = img.size();
    return h;
}

/// Scalar summary of a difference image: mean intensity on the 0-255 scale.
inline double h_avg(const Image& di) {
    if (di.size() == 0) return 0.0;
    double acc = 0.0;
    for (double p : di.pixels) acc += p;
    return acc / static_cast<double>(di.size()) * 255.0;
}

/// Set-level statistics of the difference images a sequence produces on a
/// corpus: mean/std of per-image h_avg plus the per-bin mean of the
/// normalized histograms.
struct MetricStats {
    double h_avg_mean = 0.0;
    double h_avg_std = 0.0;  // population convention
    HistogramVector mean_histogram{};
    std::vector<double> h_avg_values;  // per sample, corpus order
};

/// Applies `seq` to every image, builds the difference image, and
/// aggregates. Every image uses the same seed — the convention test-time
/// classification follows — so calibration statistics describe exactly the
/// pipeline a deployed profile runs, and results are independent of
/// evaluation order.
inline MetricStats set_stats(const Corpus& corpus, const IptSequence& seq, std::uint64_t seed,
                             const FilterParams& params = {}) {
    if (corpus.empty()) throw EmptyCorpus("set_stats: corpus '" + corpus.name + "' is empty");
    MetricStats stats;
    stats.h_avg_values.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const Image& original = corpus.samples[i].image;
        const Image processed = apply_sequence(original, seq, seed, params);
        const Image di = difference_image(original, processed);
        stats.h_avg_values.push_back(h_avg(di));
        const HistogramVector p = histogram(di).normalized();
        for (int b = 0; b < kHistogramBins; ++b) stats.mean_histogram[b] += p[b];
    }
    const double n = static_cast<double>(corpus.size());
    for (int b = 0; b < kHistogramBins; ++b) stats.mean_histogram[b] /= n;
    double mean = 0.0;
    for (double v : stats.h_avg_values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : stats.h_avg_values) var += (v - mean) * (v - mean);
    var /= n;
    stats.h_avg_mean = mean;
    stats.h_avg_std = std::sqrt(var);
    return stats;
}

// ---------------------------------------------------------------------------
// Fitness components
// ---------------------------------------------------------------------------

/// Squared separation of the set-level h_avg means.
inline double fitness_h(const MetricStats& adv, const MetricStats& clean) {
    const double d = std::abs(adv.h_avg_mean - clean.h_avg_mean);
    return d * d;
}

/// Cross-entropy of p against q, natural log, q floored at 1e-12. Zero-mass
/// bins of p contribute nothing, so fitness_ce(p, p) is exactly the Shannon
/// entropy of p whenever p has no bins below the floor.
inline double fitness_ce(const HistogramVector& p, const HistogramVector& q) {
    double acc = 0.0;
    for (int i = 0; i < kHistogramBins; ++i) {
        if (p[i] <= 0.0) continue;
        acc += p[i] * std::log(1.0 / std::max(q[i], kProbFloor));
    }
    return acc;
}

/// L2 distance between the mean normalized histograms.
inline double fitness_ed(const MetricStats& adv, const MetricStats& clean) {
    double acc = 0.0;
    for (int i = 0; i < kHistogramBins; ++i) {
        const double d = adv.mean_histogram[i] - clean.mean_histogram[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace detail {

/// Moment-matched Gaussian over bin indices, evaluated on the integer grid
/// and renormalized to a probability vector. Sigma is floored at 0.5 bins so
/// point-mass histograms stay finite.
inline HistogramVector gaussian_pd_fit(const HistogramVector& hist) {
    double mu = 0.0;
    for (int i = 0; i < kHistogramBins; ++i) mu += i * hist[i];
    double var = 0.0;
    for (int i = 0; i < kHistogramBins; ++i) var += hist[i] * (i - mu) * (i - mu);
    const double sigma = std::max(std::sqrt(var), kSigmaFloorBins);

    HistogramVector pd{};
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    double sum = 0.0;
    for (int i = 0; i < kHistogramBins; ++i) {
        const double z = (i - mu) / sigma;
        pd[i] = norm * std::exp(-0.5 * z * z);
        sum += pd[i];
    }
    for (double& v : pd) v /= sum;
    return pd;
}

}  // namespace detail

/// Cross-entropy between Gaussian probability-density fits of the two
/// histograms.
inline double fitness_ce_pd(const HistogramVector& adv_hist, const HistogramVector& clean_hist) {
    return fitness_ce(detail::gaussian_pd_fit(adv_hist), detail::gaussian_pd_fit(clean_hist));
}

/// Binary cross-entropy loss over per-sample scores s = h_avg/255 (clamped
/// away from 0 and 1), target 1 for adversarial samples and 0 for clean ones.
/// Lower means better separation.
inline double fitness_l(std::span<const double> adv_h_avgs, std::span<const double> clean_h_avgs) {
    auto score = [](double h) {
        double s = h / 255.0;
        if (s < kScoreClamp) s = kScoreClamp;
        if (s > 1.0 - kScoreClamp) s = 1.0 - kScoreClamp;
        return s;
    };
    double acc = 0.0;
    for (double h : adv_h_avgs) acc += -std::log(score(h));
    for (double h : clean_h_avgs) acc += -std::log(1.0 - score(h));
    return acc;
}

// ---------------------------------------------------------------------------
// Combined fitness
// ---------------------------------------------------------------------------

/// The five raw component values for one individual.
struct RawComponents {
    double f_h = 0.0;
    double f_ce = 0.0;
    double f_ed = 0.0;
    double f_ce_pd = 0.0;
    double f_l = 0.0;

    bool operator==(const RawComponents&) const = default;
};

/// Raw components mapped so that larger is always better: the loss enters
/// inverted (1/f_l, floored) while the other four pass through.
inline std::array<double, 5> effective_components(const RawComponents& c) {
    return {c.f_h, c.f_ce, c.f_ed, c.f_ce_pd, 1.0 / std::max(c.f_l, kDenomFloor)};
}

/// Per-component min/max over a generation; the basis all normalization uses.
struct NormalizationBasis {
    std::array<double, 5> min{};
    std::array<double, 5> max{};
};

inline NormalizationBasis normalization_basis(std::span<const RawComponents> generation) {
    NormalizationBasis basis;
    bool first = true;
    for (const auto& raw : generation) {
        const auto eff = effective_components(raw);
        for (int k = 0; k < 5; ++k) {
            if (first || eff[k] < basis.min[k]) basis.min[k] = eff[k];
            if (first || eff[k] > basis.max[k]) basis.max[k] = eff[k];
        }
        first = false;
    }
    return basis;
}

/// One individual's scored fitness: raw values, normalized values, the
/// generation's shared weights, and the combined F_V.
struct FitnessReport {
    RawComponents raw;
    std::array<double, 5> normalized{};  // f_h, f_ce, f_ed, f_ce_pd, inverted loss
    std::array<double, 5> weights{};     // shared across the generation
    double f_v = 0.0;
};

inline std::array<double, 5> normalize_in_basis(const RawComponents& raw,
                                                const NormalizationBasis& basis) {
    std::array<double, 5> n{};
    const auto eff = effective_components(raw);
    for (int k = 0; k < 5; ++k) {
        const double range = basis.max[k] - basis.min[k];
        n[k] = (eff[k] - basis.min[k]) / std::max(range, kDenomFloor);
    }
    return n;
}

/// Weight vector for one generation: each component's mean normalized value
/// over the sum of the other four means, denominators floored at 1e-9. The
/// weights are shared by every individual, so F_V stays monotone in each
/// individual's components.
inline std::array<double, 5> generation_weights(std::span<const RawComponents> generation,
                                                const NormalizationBasis& basis) {
    std::array<double, 5> mean{};
    for (const auto& raw : generation) {
        const auto n = normalize_in_basis(raw, basis);
        for (int k = 0; k < 5; ++k) mean[k] += n[k];
    }
    for (int k = 0; k < 5; ++k) mean[k] /= std::max<double>(generation.size(), 1);
    std::array<double, 5> weights{};
    double total = 0.0;
    for (int k = 0; k < 5; ++k) total += mean[k];
    for (int k = 0; k < 5; ++k) {
        weights[k] = mean[k] / std::max(total - mean[k], kDenomFloor);
    }
    return weights;
}

/// Scores one individual against a basis and weight vector.
inline FitnessReport score_with_weights(const RawComponents& raw, const NormalizationBasis& basis,
                                        const std::array<double, 5>& weights) {
    FitnessReport rep;
    rep.raw = raw;
    rep.normalized = normalize_in_basis(raw, basis);
    rep.weights = weights;
    rep.f_v = 0.0;
    for (int k = 0; k < 5; ++k) rep.f_v += rep.weights[k] * rep.normalized[k];
    return rep;
}

/// Scores a whole generation: min-max normalization across the generation,
/// one weight vector for all individuals, F_V as the weighted sum. Reordering
/// the generation permutes the reports but changes no value.
inline std::vector<FitnessReport> combine(std::span<const RawComponents> generation) {
    const NormalizationBasis basis = normalization_basis(generation);
    const auto weights = generation_weights(generation, basis);
    std::vector<FitnessReport> reports;
    reports.reserve(generation.size());
    for (const auto& raw : generation) {
        reports.push_back(score_with_weights(raw, basis, weights));
    }
    return reports;
}

}  // namespace ipts
