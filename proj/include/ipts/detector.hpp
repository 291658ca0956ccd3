#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ipts/error.hpp"
#include "ipts/genome.hpp"
#include "ipts/metrics.hpp"
#include "ipts/rng.hpp"

namespace ipts {

/// Which test-time rules may declare an input adversarial.
enum class RuleMode { RangeOnly, NearestOnly, Either };

enum class RuleFired { None, Range, NearestReference, Both };

inline std::string_view rule_name(RuleFired r) {
    switch (r) {
        case RuleFired::None: return "none";
        case RuleFired::Range: return "range";
        case RuleFired::NearestReference: return "nearest_reference";
        case RuleFired::Both: return "both";
    }
    return "unknown";
}

/// A deployable detector: an evolved genome plus the threshold range and
/// reference statistics calibrated on the training split.
struct DetectorProfile {
    Genome genome;
    std::string attack_tag;
    std::string dataset_tag;
    int width = 0;
    int height = 0;
    double range_lo = 0.0;  // h_avg threshold band, 0-255 scale
    double range_hi = 0.0;
    double range_k = 2.0;   // band half-width in adversarial-set std units
    MetricStats reference_adv;
    MetricStats reference_clean;
    std::uint64_t noise_seed = 0;
    bool zero_separation = false;  // calibration saw no mean separation
    FilterParams filter_params;
};

/// Computes both reference statistics on the training split and derives the
/// h_avg band as the adversarial mean +/- k standard deviations, clipped to
/// [0, 255]. A profile with no mean separation is flagged, not rejected.
inline DetectorProfile calibrate(const Genome& genome, const Corpus& adv_train,
                                 const Corpus& clean_train, std::uint64_t seed, double k = 2.0,
                                 std::string attack_tag = "", std::string dataset_tag = "",
                                 const FilterParams& params = {}) {
    if (adv_train.empty() || clean_train.empty()) {
        throw EmptyCorpus("calibrate: training corpora must be non-empty");
    }
    if (adv_train.width() != clean_train.width() || adv_train.height() != clean_train.height()) {
        throw DimensionMismatch("calibrate: corpora have different image shapes");
    }
    const IptSequence seq = decode(genome);
    DetectorProfile profile;
    profile.genome = genome;
    profile.attack_tag = std::move(attack_tag);
    profile.dataset_tag = std::move(dataset_tag);
    profile.width = adv_train.width();
    profile.height = adv_train.height();
    profile.noise_seed = seed;
    profile.range_k = k;
    profile.filter_params = params;
    profile.reference_adv = set_stats(adv_train, seq, seed, params);
    profile.reference_clean = set_stats(clean_train, seq, seed, params);
    const double m = profile.reference_adv.h_avg_mean;
    const double s = profile.reference_adv.h_avg_std;
    profile.range_lo = std::max(0.0, m - k * s);
    profile.range_hi = std::min(255.0, m + k * s);
    profile.zero_separation =
        std::abs(profile.reference_adv.h_avg_mean - profile.reference_clean.h_avg_mean) < 1e-12;
    return profile;
}

/// Distances between the test image's difference-image histogram and the two
/// calibrated references. Diagnostics only; no rule consumes them.
struct VerdictDiagnostics {
    double ed_to_adv = 0.0;
    double ed_to_clean = 0.0;
    double ce_to_adv = 0.0;
    double ce_to_clean = 0.0;
};

struct DetectionVerdict {
    bool adversarial = false;
    std::size_t profile_index = 0;
    double h_avg_observed = 0.0;
    RuleFired rule_fired = RuleFired::None;
    VerdictDiagnostics diagnostics;
};

/// Applies the profile's sequence (with its stored noise seed), measures the
/// difference-image h_avg, and decides. Range rule: the value falls inside
/// the calibrated band. Nearest-reference rule: the value sits strictly
/// closer to the adversarial reference mean than to the clean one; ties
/// resolve to clean.
inline DetectionVerdict classify(const Image& img, const DetectorProfile& profile,
                                 RuleMode mode = RuleMode::Either) {
    if (img.width != profile.width || img.height != profile.height) {
        throw DimensionMismatch("classify: image does not match profile dimensions");
    }
    const IptSequence seq = decode(profile.genome);
    const Image processed = apply_sequence(img, seq, profile.noise_seed, profile.filter_params);
    const Image di = difference_image(img, processed);
    const double k_i = h_avg(di);

    const bool range_hit = k_i >= profile.range_lo && k_i <= profile.range_hi;
    const bool nearest_hit = std::abs(profile.reference_clean.h_avg_mean - k_i) >
                             std::abs(profile.reference_adv.h_avg_mean - k_i);
    const bool use_range = mode != RuleMode::NearestOnly;
    const bool use_nearest = mode != RuleMode::RangeOnly;

    DetectionVerdict verdict;
    verdict.h_avg_observed = k_i;
    const bool r = use_range && range_hit;
    const bool n = use_nearest && nearest_hit;
    verdict.adversarial = r || n;
    verdict.rule_fired = r && n   ? RuleFired::Both
                         : r      ? RuleFired::Range
                         : n      ? RuleFired::NearestReference
                                  : RuleFired::None;

    const HistogramVector hist = histogram(di).normalized();
    MetricStats observed;
    observed.mean_histogram = hist;
    verdict.diagnostics.ed_to_adv = fitness_ed(observed, profile.reference_adv);
    verdict.diagnostics.ed_to_clean = fitness_ed(observed, profile.reference_clean);
    verdict.diagnostics.ce_to_adv = fitness_ce(hist, profile.reference_adv.mean_histogram);
    verdict.diagnostics.ce_to_clean = fitness_ce(hist, profile.reference_clean.mean_histogram);
    return verdict;
}

/// The randomized pool a deployment draws from at test time.
struct SipsPool {
    std::vector<DetectorProfile> profiles;
    std::uint64_t selection_seed = 0;

    void validate() const {
        if (profiles.empty()) throw ConfigError("pool must contain at least one profile");
    }
};

/// Draws one profile uniformly at random and delegates to classify; the
/// verdict records which profile was used.
inline DetectionVerdict classify_pooled(const Image& img, const SipsPool& pool, Rng& rng,
                                        RuleMode mode = RuleMode::Either) {
    pool.validate();
    const std::size_t idx = rng.below(pool.profiles.size());
    DetectionVerdict verdict = classify(img, pool.profiles[idx], mode);
    verdict.profile_index = idx;
    return verdict;
}

struct VerdictRecord {
    std::string id;
    bool truth_adversarial = false;
    DetectionVerdict verdict;
};

/// Confusion counts and derived scores; adversarial is the positive class.
struct EvalMetrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::vector<VerdictRecord> verdicts;

    void finalize() {
        precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
        recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
        f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        const std::size_t total = tp + fp + tn + fn;
        accuracy = total ? static_cast<double>(tp + tn) / total : 0.0;
    }
};

/// Scores a pool on held-out corpora: every adversarial sample should be
/// flagged, every clean one passed. One pooled draw per sample.
inline EvalMetrics evaluate(const SipsPool& pool, const Corpus& adv_test, const Corpus& clean_test,
                            Rng& rng, RuleMode mode = RuleMode::Either) {
    pool.validate();
    if (adv_test.empty() || clean_test.empty()) {
        throw EmptyCorpus("evaluate: test corpora must be non-empty");
    }
    EvalMetrics m;
    for (const auto& s : adv_test.samples) {
        const DetectionVerdict v = classify_pooled(s.image, pool, rng, mode);
        v.adversarial ? ++m.tp : ++m.fn;
        m.verdicts.push_back({s.id, true, v});
    }
    for (const auto& s : clean_test.samples) {
        const DetectionVerdict v = classify_pooled(s.image, pool, rng, mode);
        v.adversarial ? ++m.fp : ++m.tn;
        m.verdicts.push_back({s.id, false, v});
    }
    m.finalize();
    return m;
}

/// Single-profile convenience wrapper.
inline EvalMetrics evaluate(const DetectorProfile& profile, const Corpus& adv_test,
                            const Corpus& clean_test, Rng& rng, RuleMode mode = RuleMode::Either) {
    SipsPool pool;
    pool.profiles.push_back(profile);
    return evaluate(pool, adv_test, clean_test, rng, mode);
}

}  // namespace ipts
