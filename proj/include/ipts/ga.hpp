#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ipts/error.hpp"
#include "ipts/genome.hpp"
#include "ipts/metrics.hpp"
#include "ipts/parallel.hpp"
#include "ipts/rng.hpp"

namespace ipts {

enum class WeightMode { PerGeneration, Frozen };

struct GaConfig {
    int population_size = 36;
    std::size_t max_len = 3;          // genes per genome, upper bound
    double mutation_rate = 0.05;      // per-bit flip probability
    int elite_count = 2;
    int max_generations = 30;
    int patience = 0;                 // early stop after this many stale generations; 0 disables
    std::uint64_t seed = 0;
    std::vector<std::string> heuristic_seeds;  // genome bit strings placed first
    WeightMode weight_mode = WeightMode::PerGeneration;
    int threads = 1;
    FilterParams filter_params;

    void validate() const {
        if (population_size < 2 || population_size % 2 != 0) {
            throw ConfigError("population_size must be even and >= 2");
        }
        if (mutation_rate < 0.0 || mutation_rate > 1.0) {
            throw ConfigError("mutation_rate must be in [0, 1]");
        }
        if (elite_count < 0 || elite_count >= population_size) {
            throw ConfigError("elite_count must be in [0, population_size)");
        }
        if (max_len < 1) throw ConfigError("max_len must be >= 1");
        if (max_generations < 0) throw ConfigError("max_generations must be >= 0");
        if (patience < 0) throw ConfigError("patience must be >= 0");
    }
};

struct EvaluatedGenome {
    Genome genome;
    FitnessReport fitness;
};

struct GenerationTrace {
    int generation = 0;       // 1-based
    double best_fv = 0.0;     // best seen so far (monotone by construction)
    double champion_fv = 0.0; // top individual of this generation, in its own basis
    double mean_fv = 0.0;
    std::string champion_bits;
};

struct GaRunReport {
    GaConfig config;
    std::string codec_name;
    std::vector<GenerationTrace> generations;
    std::vector<EvaluatedGenome> final_population;  // sorted, best first
    Genome best;                                    // final generation's champion
    double best_fv = 0.0;
    double wall_clock_seconds = 0.0;  // not serialized: reports must replay bit-exactly
};

/// The sub-seed run() hands to set_stats; exposed so exhaustive-search
/// baselines can reproduce the exact per-image noise streams.
inline std::uint64_t ga_eval_seed(std::uint64_t config_seed) {
    return derive_seed(config_seed, "noise");
}

/// Raw fitness components of one genome against the two corpora.
inline RawComponents raw_components(const Genome& g, const Corpus& adv, const Corpus& clean,
                                    std::uint64_t eval_seed, const FilterParams& params = {}) {
    const IptSequence seq = decode(g);
    const MetricStats a = set_stats(adv, seq, eval_seed, params);
    const MetricStats c = set_stats(clean, seq, eval_seed, params);
    RawComponents r;
    r.f_h = fitness_h(a, c);
    r.f_ce = fitness_ce(a.mean_histogram, c.mean_histogram);
    r.f_ed = fitness_ed(a, c);
    r.f_ce_pd = fitness_ce_pd(a.mean_histogram, c.mean_histogram);
    r.f_l = fitness_l(a.h_avg_values, c.h_avg_values);
    return r;
}

namespace detail {

/// Raw components for a population, memoized by bit string. Only cache
/// misses are computed (in parallel); duplicates share one entry, so equal
/// genomes always receive equal fitness.
inline std::vector<RawComponents> population_raw_components(
    const std::vector<Genome>& population, const Corpus& adv, const Corpus& clean,
    std::uint64_t eval_seed, const FilterParams& params, int threads,
    std::map<std::string, RawComponents>& cache) {
    std::vector<std::string> missing;
    for (const auto& g : population) {
        if (!cache.contains(g.bits)) {
            cache.emplace(g.bits, RawComponents{});
            missing.push_back(g.bits);
        }
    }
    if (!missing.empty()) {
        std::vector<RawComponents> computed(missing.size());
        const Codec& codec = population.front().codec;
        parallel_for(missing.size(), threads, [&](std::size_t i) {
            computed[i] = raw_components(Genome{missing[i], codec}, adv, clean, eval_seed, params);
        });
        for (std::size_t i = 0; i < missing.size(); ++i) cache[missing[i]] = computed[i];
    }
    std::vector<RawComponents> out;
    out.reserve(population.size());
    for (const auto& g : population) out.push_back(cache.at(g.bits));
    return out;
}

}  // namespace detail

/// Builds the initial population: heuristic seeds first, the remainder drawn
/// uniformly at random.
inline std::vector<Genome> init_population(const GaConfig& cfg, const Codec& codec) {
    cfg.validate();
    codec.validate();
    if (cfg.heuristic_seeds.size() > static_cast<std::size_t>(cfg.population_size)) {
        throw TooManySeeds("got " + std::to_string(cfg.heuristic_seeds.size()) +
                           " heuristic seeds for a population of " +
                           std::to_string(cfg.population_size));
    }
    std::vector<Genome> population;
    population.reserve(cfg.population_size);
    for (const auto& bits : cfg.heuristic_seeds) {
        Genome g{bits, codec};
        g.validate(cfg.max_len);
        population.push_back(std::move(g));
    }
    Rng rng(derive_seed(derive_seed(cfg.seed, "ga"), "init"));
    while (population.size() < static_cast<std::size_t>(cfg.population_size)) {
        population.push_back(random_genome(codec, cfg.max_len, rng));
    }
    return population;
}

/// Evaluates a population: per-genome raw components, then the combined F_V
/// scored across this generation. Result order follows the input order;
/// values are independent of it.
inline std::vector<EvaluatedGenome> evaluate_population(const std::vector<Genome>& population,
                                                        const Corpus& adv, const Corpus& clean,
                                                        std::uint64_t seed,
                                                        const FilterParams& params = {},
                                                        int threads = 1) {
    if (population.empty()) throw ConfigError("cannot evaluate an empty population");
    if (adv.empty() || clean.empty()) throw EmptyCorpus("evaluation corpora must be non-empty");
    std::map<std::string, RawComponents> cache;
    const auto raw = detail::population_raw_components(population, adv, clean,
                                                       ga_eval_seed(seed), params, threads, cache);
    const auto reports = combine(raw);
    std::vector<EvaluatedGenome> out;
    out.reserve(population.size());
    for (std::size_t i = 0; i < population.size(); ++i) {
        out.push_back({population[i], reports[i]});
    }
    return out;
}

namespace detail {

/// Sort best-first: descending F_V, ties broken by ascending bit string.
inline void sort_evaluated(std::vector<EvaluatedGenome>& pop) {
    std::sort(pop.begin(), pop.end(), [](const EvaluatedGenome& a, const EvaluatedGenome& b) {
        if (a.fitness.f_v != b.fitness.f_v) return a.fitness.f_v > b.fitness.f_v;
        return a.genome.bits < b.genome.bits;
    });
}

/// Two-point crossover on gene boundaries. Cut points live within the
/// shorter parent, so both children decode without repair and each keeps its
/// parent's length.
inline std::pair<Genome, Genome> two_point_crossover(const Genome& a, const Genome& b, Rng& rng) {
    const int bpg = a.codec.bits_per_gene;
    const std::size_t min_genes = std::min(a.gene_count(), b.gene_count());
    // boundary positions 0..min_genes; pick two distinct, ordered
    std::size_t c1 = rng.below(min_genes + 1);
    std::size_t c2 = rng.below(min_genes + 1);
    if (c1 > c2) std::swap(c1, c2);
    Genome child_a = a, child_b = b;
    const std::size_t lo = c1 * bpg, len = (c2 - c1) * bpg;
    for (std::size_t i = lo; i < lo + len; ++i) std::swap(child_a.bits[i], child_b.bits[i]);
    return {std::move(child_a), std::move(child_b)};
}

}  // namespace detail

/// One steady-state generation turnover: sort by fitness, keep the elites
/// verbatim, keep the top half, refill the bottom half with two-point
/// crossover over parents drawn from the survivors, then bit-flip mutation on
/// everything except the elites.
inline std::vector<Genome> step(std::vector<EvaluatedGenome> evaluated, const GaConfig& cfg,
                                Rng& rng) {
    detail::sort_evaluated(evaluated);
    const std::size_t pop_size = evaluated.size();
    const std::size_t elites = std::min<std::size_t>(std::max(cfg.elite_count, 0), pop_size);
    const std::size_t survivors = std::max<std::size_t>(pop_size / 2, 1);

    std::vector<Genome> next;
    next.reserve(pop_size);
    for (const auto& e : evaluated) next.push_back(e.genome);

    // refill the non-elite part of the bottom half with offspring
    std::vector<Genome> offspring;
    while (offspring.size() + std::max(survivors, elites) < pop_size) {
        const std::size_t i = rng.below(survivors);
        std::size_t j = survivors > 1 ? rng.below(survivors) : i;
        auto [a, b] = detail::two_point_crossover(next[i], next[j], rng);
        offspring.push_back(std::move(a));
        if (offspring.size() + std::max(survivors, elites) < pop_size) {
            offspring.push_back(std::move(b));
        }
    }
    for (std::size_t k = 0; k < offspring.size(); ++k) {
        next[pop_size - offspring.size() + k] = std::move(offspring[k]);
    }

    for (std::size_t i = elites; i < pop_size; ++i) {
        for (char& bit : next[i].bits) {
            if (rng.bernoulli(cfg.mutation_rate)) bit = (bit == '0') ? '1' : '0';
        }
    }
    return next;
}

/// Full evolution loop. Deterministic in (cfg.seed, corpora, params); the
/// returned genome is the final generation's champion, which elitism carries
/// from whichever generation first produced it.
inline GaRunReport run(const GaConfig& cfg, const Codec& codec, const Corpus& adv,
                       const Corpus& clean) {
    cfg.validate();
    if (adv.empty() || clean.empty()) throw EmptyCorpus("GA corpora must be non-empty");
    if (adv.width() != clean.width() || adv.height() != clean.height()) {
        throw DimensionMismatch("adversarial and clean corpora have different image shapes");
    }
    const auto t0 = std::chrono::steady_clock::now();

    GaRunReport report;
    report.config = cfg;
    report.codec_name = codec.name;

    std::vector<Genome> population = init_population(cfg, codec);
    Rng step_rng(derive_seed(derive_seed(cfg.seed, "ga"), "step"));
    const std::uint64_t eval_seed = ga_eval_seed(cfg.seed);
    std::map<std::string, RawComponents> cache;

    bool frozen_ready = false;
    NormalizationBasis frozen_basis;
    std::array<double, 5> frozen_weights{};

    auto evaluate = [&](const std::vector<Genome>& pop) {
        const auto raw = detail::population_raw_components(pop, adv, clean, eval_seed,
                                                           cfg.filter_params, cfg.threads, cache);
        std::vector<EvaluatedGenome> out;
        out.reserve(pop.size());
        if (cfg.weight_mode == WeightMode::Frozen) {
            if (!frozen_ready) {
                // freeze the first generation's basis and weights; every
                // later generation is scored on the same fitness scale
                frozen_basis = normalization_basis(raw);
                frozen_weights = generation_weights(raw, frozen_basis);
                frozen_ready = true;
            }
            for (std::size_t i = 0; i < pop.size(); ++i) {
                out.push_back({pop[i], score_with_weights(raw[i], frozen_basis, frozen_weights)});
            }
            return out;
        }
        const auto reports = combine(raw);
        for (std::size_t i = 0; i < pop.size(); ++i) out.push_back({pop[i], reports[i]});
        return out;
    };

    double best_so_far = 0.0;
    bool have_best = false;
    int stale = 0;
    std::vector<EvaluatedGenome> evaluated;

    const int generations = std::max(cfg.max_generations, 0);
    for (int g = 1; g <= std::max(generations, 1); ++g) {
        evaluated = evaluate(population);
        detail::sort_evaluated(evaluated);
        const EvaluatedGenome& champion = evaluated.front();

        if (!have_best || champion.fitness.f_v > best_so_far) {
            best_so_far = champion.fitness.f_v;
            have_best = true;
            stale = 0;
        } else {
            ++stale;
        }

        if (generations > 0) {
            double mean = 0.0;
            for (const auto& e : evaluated) mean += e.fitness.f_v;
            mean /= static_cast<double>(evaluated.size());
            report.generations.push_back(
                {g, best_so_far, champion.fitness.f_v, mean, champion.genome.bits});
        }

        const bool last = g >= generations || (cfg.patience > 0 && stale >= cfg.patience);
        if (last) break;
        population = step(evaluated, cfg, step_rng);
    }

    report.final_population = evaluated;
    report.best = evaluated.front().genome;
    report.best_fv = best_so_far;
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace ipts
