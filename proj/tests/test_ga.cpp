#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>

#include "ipts/ga.hpp"
#include "ipts/synth.hpp"

using namespace ipts;

namespace {

// Small paired corpora with a real signal: the "adversarial" side carries
// uniform pixel noise on top of the clean renderings.
struct Fixture {
    Corpus clean;
    Corpus adv;
};

Fixture make_fixture(std::size_t n = 12, int size = 12) {
    Fixture f;
    f.clean = make_synthetic_digits(n, 17, size, size, "clean");
    f.adv = f.clean;
    f.adv.name = "adv";
    Rng rng(99);
    for (auto& s : f.adv.samples) {
        for (double& p : s.image.pixels) {
            p = clamp01(p + rng.uniform(-0.3, 0.3));
        }
        s.image = quantize_roundtrip(s.image);
        s.provenance = Provenance::attacked("noise", 0.3);
    }
    return f;
}

GaConfig small_config() {
    GaConfig cfg;
    cfg.population_size = 8;
    cfg.max_len = 2;
    cfg.max_generations = 5;
    cfg.elite_count = 2;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("init_population layout") {
    const Codec codec = codec_2bit();
    GaConfig cfg = small_config();
    SECTION("deterministic for a fixed seed") {
        const auto a = init_population(cfg, codec);
        const auto b = init_population(cfg, codec);
        REQUIRE(a.size() == 8);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].bits == b[i].bits);
    }
    SECTION("heuristic seeds come first, the rest is random") {
        cfg.heuristic_seeds = {"1111", "0001"};
        const auto pop = init_population(cfg, codec);
        REQUIRE(pop.size() == 8);
        CHECK(pop[0].bits == "1111");
        CHECK(pop[1].bits == "0001");
    }
    SECTION("every genome satisfies the length invariants") {
        cfg.population_size = 24;
        const auto pop = init_population(cfg, codec);
        for (const auto& g : pop) CHECK_NOTHROW(g.validate(cfg.max_len));
    }
    SECTION("too many heuristic seeds") {
        cfg.population_size = 2;
        cfg.elite_count = 1;
        cfg.heuristic_seeds = {"11", "00", "01"};
        CHECK_THROWS_AS(init_population(cfg, codec), TooManySeeds);
    }
    SECTION("config validation") {
        cfg.population_size = 7;
        CHECK_THROWS_AS(init_population(cfg, codec), ConfigError);
        cfg = small_config();
        cfg.elite_count = cfg.population_size;
        CHECK_THROWS_AS(init_population(cfg, codec), ConfigError);
        cfg = small_config();
        cfg.mutation_rate = 1.5;
        CHECK_THROWS_AS(init_population(cfg, codec), ConfigError);
    }
}

TEST_CASE("evaluate_population") {
    const Fixture f = make_fixture();
    const Codec codec = codec_2bit();

    SECTION("duplicate genomes receive equal fitness") {
        std::vector<Genome> pop = {{"1111", codec}, {"0101", codec}, {"1111", codec}};
        const auto evaluated = evaluate_population(pop, f.adv, f.clean, 3);
        CHECK(evaluated[0].fitness.f_v == evaluated[2].fitness.f_v);
        CHECK(evaluated[0].fitness.raw == evaluated[2].fitness.raw);
    }
    SECTION("the all-identity genome has zero h-separation") {
        std::vector<Genome> pop = {{"0000", codec}, {"1111", codec}};
        const auto evaluated = evaluate_population(pop, f.adv, f.clean, 3);
        CHECK(evaluated[0].fitness.raw.f_h == 0.0);
        CHECK(evaluated[0].fitness.raw.f_ed == 0.0);
    }
    SECTION("order independence: permuting the population permutes the reports") {
        std::vector<Genome> pop = {{"11", codec}, {"0101", codec}, {"10", codec}};
        std::vector<Genome> permuted = {pop[2], pop[0], pop[1]};
        const auto a = evaluate_population(pop, f.adv, f.clean, 3);
        const auto b = evaluate_population(permuted, f.adv, f.clean, 3);
        CHECK(a[0].fitness.f_v == b[1].fitness.f_v);
        CHECK(a[1].fitness.f_v == b[2].fitness.f_v);
        CHECK(a[2].fitness.f_v == b[0].fitness.f_v);
    }
    SECTION("threaded evaluation matches serial evaluation") {
        std::vector<Genome> pop = {{"11", codec}, {"0101", codec}, {"10", codec}, {"0011", codec}};
        const auto serial = evaluate_population(pop, f.adv, f.clean, 3, {}, 1);
        const auto threaded = evaluate_population(pop, f.adv, f.clean, 3, {}, 4);
        for (std::size_t i = 0; i < pop.size(); ++i) {
            CHECK(serial[i].fitness.f_v == threaded[i].fitness.f_v);
        }
    }
}

TEST_CASE("step contracts") {
    const Fixture f = make_fixture();
    const Codec codec = codec_2bit();
    GaConfig cfg = small_config();

    auto evaluated_fixture = [&](const std::vector<Genome>& pop) {
        return evaluate_population(pop, f.adv, f.clean, cfg.seed);
    };

    SECTION("no-op step: zero mutation with everything elite") {
        cfg.mutation_rate = 0.0;
        cfg.elite_count = cfg.population_size;  // degenerate, allowed by step()
        const auto pop = init_population(small_config(), codec);
        auto evaluated = evaluated_fixture(pop);
        Rng rng(1);
        const auto next = step(evaluated, cfg, rng);
        std::multiset<std::string> before, after;
        for (const auto& e : evaluated) before.insert(e.genome.bits);
        for (const auto& g : next) after.insert(g.bits);
        CHECK(before == after);
    }
    SECTION("elites survive verbatim even under certain mutation") {
        cfg.mutation_rate = 1.0;
        cfg.elite_count = 2;
        const auto pop = init_population(cfg, codec);
        auto evaluated = evaluated_fixture(pop);
        std::sort(evaluated.begin(), evaluated.end(),
                  [](const EvaluatedGenome& a, const EvaluatedGenome& b) {
                      if (a.fitness.f_v != b.fitness.f_v) return a.fitness.f_v > b.fitness.f_v;
                      return a.genome.bits < b.genome.bits;
                  });
        Rng rng(2);
        const auto next = step(evaluated, cfg, rng);
        CHECK(next[0].bits == evaluated[0].genome.bits);
        CHECK(next[1].bits == evaluated[1].genome.bits);
    }
    SECTION("population size is preserved and genomes stay valid") {
        cfg.mutation_rate = 0.5;
        const auto pop = init_population(cfg, codec);
        auto evaluated = evaluated_fixture(pop);
        Rng rng(3);
        const auto next = step(evaluated, cfg, rng);
        REQUIRE(next.size() == pop.size());
        for (const auto& g : next) CHECK_NOTHROW(g.validate(cfg.max_len));
    }
}

TEST_CASE("two-point crossover is gene-aligned and length-preserving") {
    const Codec codec = codec_2bit();
    const Genome a{"010101", codec};    // 3 genes
    const Genome b{"11111111", codec};  // 4 genes
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const auto [ca, cb] = detail::two_point_crossover(a, b, rng);
        CHECK(ca.bits.size() == 6);
        CHECK(cb.bits.size() == 8);
        // every child gene comes intact from one parent
        for (std::size_t g = 0; g < 3; ++g) {
            const std::string gene = ca.bits.substr(2 * g, 2);
            CHECK((gene == "01" || gene == "11"));
        }
        // the tail beyond the shorter parent is untouched
        CHECK(cb.bits.substr(6) == "11");
    }
}

TEST_CASE("run: whole-loop behavior") {
    const Fixture f = make_fixture();
    const Codec codec = codec_2bit();
    GaConfig cfg = small_config();

    SECTION("deterministic in the seed") {
        const auto a = run(cfg, codec, f.adv, f.clean);
        const auto b = run(cfg, codec, f.adv, f.clean);
        CHECK(a.best.bits == b.best.bits);
        REQUIRE(a.generations.size() == b.generations.size());
        for (std::size_t i = 0; i < a.generations.size(); ++i) {
            CHECK(a.generations[i].best_fv == b.generations[i].best_fv);
            CHECK(a.generations[i].champion_bits == b.generations[i].champion_bits);
        }
    }
    SECTION("requested generation count is reported") {
        const auto report = run(cfg, codec, f.adv, f.clean);
        CHECK(report.generations.size() == 5);
        CHECK(report.final_population.size() == 8);
    }
    SECTION("zero generations degenerate to the evaluated initial population") {
        cfg.max_generations = 0;
        const auto report = run(cfg, codec, f.adv, f.clean);
        CHECK(report.generations.empty());
        const auto pop = init_population(cfg, codec);
        auto evaluated = evaluate_population(pop, f.adv, f.clean, cfg.seed);
        std::sort(evaluated.begin(), evaluated.end(),
                  [](const EvaluatedGenome& a, const EvaluatedGenome& b) {
                      if (a.fitness.f_v != b.fitness.f_v) return a.fitness.f_v > b.fitness.f_v;
                      return a.genome.bits < b.genome.bits;
                  });
        CHECK(report.best.bits == evaluated.front().genome.bits);
    }
    SECTION("best fitness trace is non-decreasing") {
        cfg.max_generations = 8;
        const auto report = run(cfg, codec, f.adv, f.clean);
        for (std::size_t i = 1; i < report.generations.size(); ++i) {
            CHECK(report.generations[i].best_fv >= report.generations[i - 1].best_fv);
        }
    }
    SECTION("frozen weights keep per-genome fitness stable across generations") {
        cfg.weight_mode = WeightMode::Frozen;
        cfg.max_generations = 6;
        const auto report = run(cfg, codec, f.adv, f.clean);
        // stability makes the champion curve itself monotone under elitism
        for (std::size_t i = 1; i < report.generations.size(); ++i) {
            CHECK(report.generations[i].champion_fv >=
                  report.generations[i - 1].champion_fv - 1e-12);
        }
    }
    SECTION("patience stops a stalled run early") {
        cfg.max_generations = 30;
        cfg.patience = 2;
        const auto report = run(cfg, codec, f.adv, f.clean);
        CHECK(report.generations.size() <= 30);
    }
}
