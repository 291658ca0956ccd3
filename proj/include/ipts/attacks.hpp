#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ipts/classifier.hpp"
#include "ipts/error.hpp"
#include "ipts/image.hpp"
#include "ipts/parallel.hpp"
#include "ipts/rng.hpp"

namespace ipts {

enum class AttackKind { Fgsm, Bim, Mbim, Pgd };

inline std::string_view attack_name(AttackKind k) {
    switch (k) {
        case AttackKind::Fgsm: return "fgsm";
        case AttackKind::Bim: return "bim";
        case AttackKind::Mbim: return "mbim";
        case AttackKind::Pgd: return "pgd";
    }
    return "unknown";
}

inline AttackKind attack_from_name(std::string_view name) {
    if (name == "fgsm") return AttackKind::Fgsm;
    if (name == "bim") return AttackKind::Bim;
    if (name == "mbim") return AttackKind::Mbim;
    if (name == "pgd") return AttackKind::Pgd;
    throw ConfigError("unknown attack kind: " + std::string(name));
}

/// Gradient-sign attack family under an L-infinity budget.
struct AttackSpec {
    AttackKind kind = AttackKind::Fgsm;
    double epsilon = 0.3;
    double step_size = 0.0;      // iterative kinds; 0 picks epsilon/4
    int iterations = 10;         // iterative kinds
    double momentum_decay = 1.0; // MBIM only
    bool random_start = false;   // PGD only

    void validate() const {
        if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon must be in [0, 1]");
        if (step_size < 0.0) throw ConfigError("step_size must be >= 0");
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
        if (momentum_decay < 0.0) throw ConfigError("momentum_decay must be >= 0");
    }

    int effective_iterations() const { return kind == AttackKind::Fgsm ? 1 : iterations; }

    double effective_step() const {
        if (kind == AttackKind::Fgsm) return epsilon;
        return step_size > 0.0 ? step_size : epsilon / 4.0;
    }
};

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Post-rounding repair: after x0 + delta is rounded to double, a coordinate
/// can exceed the budget by one ulp. Nudge such coordinates back toward x0 so
/// the stored pixels satisfy the bound exactly.
inline void enforce_linf(std::span<const double> x0, std::vector<double>& x, double eps) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        while (std::abs(x[i] - x0[i]) > eps) {
            x[i] = std::nextafter(x[i], x0[i]);
        }
    }
}

}  // namespace detail

/// Untargeted attack: maximize the true-class loss by signed gradient steps.
/// Every kind runs through the same loop; FGSM is the single full-step case
/// and PGD only adds the optional random start, so the documented
/// equivalences (FGSM == BIM(1, eps), PGD(no random start) == BIM) hold
/// bitwise. Output is clamped to [0,1] with ||out - x||_inf <= epsilon.
inline Image attack(const Classifier& model, const LabeledSample& sample, const AttackSpec& spec,
                    Rng& rng) {
    spec.validate();
    const std::vector<double>& x0 = sample.image.pixels;
    std::vector<double> x = x0;
    const double eps = spec.epsilon;
    const double alpha = spec.effective_step();
    const int iters = spec.effective_iterations();

    if (spec.kind == AttackKind::Pgd && spec.random_start) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = clamp01(x0[i] + rng.uniform(-eps, eps));
        }
    }

    std::vector<double> momentum(x.size(), 0.0);
    const bool use_momentum = spec.kind == AttackKind::Mbim;

    for (int t = 0; t < iters; ++t) {
        std::vector<double> grad = model.input_gradient(x, sample.label);
        if (use_momentum) {
            double l1 = 0.0;
            for (double g : grad) l1 += std::abs(g);
            const double inv = 1.0 / std::max(l1, 1e-12);
            for (std::size_t i = 0; i < grad.size(); ++i) {
                momentum[i] = spec.momentum_decay * momentum[i] + grad[i] * inv;
            }
            grad = momentum;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            double v = x[i] + alpha * detail::sign(grad[i]);
            // project into the epsilon box around x0, then into [0,1]
            const double lo = x0[i] - eps, hi = x0[i] + eps;
            if (v < lo) v = lo;
            if (v > hi) v = hi;
            x[i] = clamp01(v);
        }
    }
    detail::enforce_linf(x0, x, eps);

    Image out = sample.image;
    out.pixels = std::move(x);
    return out;
}

/// Fraction of effective adversarial examples that a transform repairs:
/// among pairs where the clean image is classified correctly and the
/// adversarial one is not, the share whose transformed adversarial image is
/// classified correctly again. Zero when no pair qualifies.
inline double destruction_rate(const Classifier& model, std::span<const LabeledSample> clean,
                               std::span<const Image> adv,
                               const std::function<Image(const Image&)>& transform) {
    if (clean.size() != adv.size()) {
        throw LengthMismatch("destruction_rate: clean and adversarial lists differ in size");
    }
    std::size_t qualifying = 0, destroyed = 0;
    for (std::size_t k = 0; k < clean.size(); ++k) {
        const int y = clean[k].label;
        if (model.predict(clean[k].image) != y) continue;
        if (model.predict(adv[k]) == y) continue;
        ++qualifying;
        if (model.predict(transform(adv[k])) == y) ++destroyed;
    }
    return qualifying == 0 ? 0.0 : static_cast<double>(destroyed) / static_cast<double>(qualifying);
}

/// Bookkeeping from one corpus-generation run; serialized as provenance.
struct AttackBuildStats {
    std::size_t source_count = 0;
    std::size_t clean_misclassified = 0;  // skipped: victim already wrong
    std::size_t attack_failed = 0;        // label survived the attack
    std::size_t destroyed = 0;            // quantization repaired the attack
    std::size_t epsilon_violations = 0;   // defensive count, expected 0
    std::size_t survivors = 0;
    double destruction_rate = 0.0;        // destroyed / (destroyed + survivors)
};

/// Attacks every correctly-classified source sample and keeps those that are
/// misclassified, stay misclassified after the 8-bit quantization round-trip,
/// and respect the budget. Stored images are the quantized survivors, so a
/// PGM export and reload reproduces the corpus bit-exactly.
inline Corpus build_attack_corpus(const Classifier& model, const Corpus& source,
                                  const AttackSpec& spec, std::uint64_t seed,
                                  std::size_t min_count = 250, int threads = 1,
                                  AttackBuildStats* stats_out = nullptr) {
    if (source.empty()) throw EmptyCorpus("build_attack_corpus: source corpus is empty");
    spec.validate();

    struct Outcome {
        enum { Skipped, Failed, Destroyed, EpsilonViolation, Survivor } tag = Skipped;
        Image image;
    };
    std::vector<Outcome> outcomes(source.size());
    parallel_for(source.size(), threads, [&](std::size_t i) {
        const LabeledSample& s = source.samples[i];
        Outcome& o = outcomes[i];
        if (model.predict(s.image) != s.label) {
            o.tag = Outcome::Skipped;
            return;
        }
        Rng rng(derive_seed(seed, i));
        const Image adv = attack(model, s, spec, rng);
        if (model.predict(adv) == s.label) {
            o.tag = Outcome::Failed;
            return;
        }
        double linf = 0.0;
        for (std::size_t k = 0; k < adv.pixels.size(); ++k) {
            linf = std::max(linf, std::abs(adv.pixels[k] - s.image.pixels[k]));
        }
        if (linf > spec.epsilon) {
            o.tag = Outcome::EpsilonViolation;
            return;
        }
        const Image quantized = quantize_roundtrip(adv);
        if (model.predict(quantized) == s.label) {
            o.tag = Outcome::Destroyed;
            return;
        }
        o.tag = Outcome::Survivor;
        o.image = quantized;
    });

    AttackBuildStats stats;
    stats.source_count = source.size();
    Corpus corpus;
    corpus.name = std::string(attack_name(spec.kind)) + "-corpus";
    corpus.num_classes = source.num_classes;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        switch (outcomes[i].tag) {
            case Outcome::Skipped: ++stats.clean_misclassified; break;
            case Outcome::Failed: ++stats.attack_failed; break;
            case Outcome::Destroyed: ++stats.destroyed; break;
            case Outcome::EpsilonViolation: ++stats.epsilon_violations; break;
            case Outcome::Survivor: {
                ++stats.survivors;
                LabeledSample s;
                s.image = std::move(outcomes[i].image);
                s.label = source.samples[i].label;
                s.provenance =
                    Provenance::attacked(std::string(attack_name(spec.kind)), spec.epsilon);
                s.id = source.samples[i].id;
                corpus.samples.push_back(std::move(s));
                break;
            }
        }
    }
    const std::size_t attacked_ok = stats.destroyed + stats.survivors;
    stats.destruction_rate =
        attacked_ok == 0 ? 0.0 : static_cast<double>(stats.destroyed) / attacked_ok;
    if (stats_out) *stats_out = stats;

    if (corpus.size() < min_count) {
        throw InsufficientSamples("only " + std::to_string(corpus.size()) +
                                  " adversarial survivors, need " + std::to_string(min_count));
    }
    return corpus;
}

}  // namespace ipts
