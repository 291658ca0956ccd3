// Command-line front end: dataset synthesis, victim training, adversarial
// corpus generation, sequence evolution, calibration, pooling, detection and
// evaluation, all replayable from a single --seed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipts/attacks.hpp"
#include "ipts/classifier.hpp"
#include "ipts/detector.hpp"
#include "ipts/ga.hpp"
#include "ipts/image_io.hpp"
#include "ipts/parallel.hpp"
#include "ipts/serialize.hpp"
#include "ipts/splits.hpp"
#include "ipts/synth.hpp"

namespace fs = std::filesystem;
using namespace ipts;

namespace {

struct CommonOpts {
    std::uint64_t seed = 0;
    int threads = default_threads();
    std::string out = "out";
    std::string config;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->option_defaults()->always_capture_default();
    cmd->add_option("--seed", opts.seed, "master seed; all randomness derives from it");
    cmd->add_option("--threads", opts.threads, "worker threads for parallel sections");
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--config", opts.config,
                    "flat key=value config file; explicit flags override it");
}

fs::path prepare_out(const CommonOpts& opts) {
    fs::create_directories(opts.out);
    return fs::path(opts.out);
}

/// Echo the effective configuration in a form --config can consume verbatim.
void write_config_echo(const CLI::App* cmd, const fs::path& out_dir) {
    std::ofstream echo(out_dir / "run_config.ini", std::ios::binary);
    echo << "# replay with: ipts " << cmd->get_name() << " --config run_config.ini\n";
    std::istringstream lines(cmd->config_to_str(true, false));
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("config=", 0) == 0) continue;  // never re-echo the config path
        echo << line << '\n';
    }
}

/// Expands `--config FILE` into option tokens before the real parse. The
/// file holds flat key=value lines (the format run_config.ini uses); any key
/// also given explicitly on the command line is skipped, so flags override.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty() || args.front().empty() || args.front()[0] == '-') return args;

    std::string config_path;
    std::vector<std::string> rest = {args.front()};
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (config_path.empty()) return args;

    std::set<std::string> explicit_keys;
    for (const auto& t : rest) {
        if (t.rfind("--", 0) == 0) explicit_keys.insert(t.substr(0, t.find('=')));
    }

    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config file: " + config_path);
    auto unquote = [](std::string v) {
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
        return v;
    };
    std::vector<std::string> expanded = {rest.front()};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        line = line.substr(start);
        if (line[0] == '#' || line[0] == '[') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line is not key=value: " + line);
        }
        const std::string key = line.substr(0, eq);
        const std::string flag = "--" + key;
        if (key == "config" || explicit_keys.contains(flag)) continue;
        const std::string value = line.substr(eq + 1);
        if (!value.empty() && value.front() == '[' && value.back() == ']') {
            // vector form: [a, b, c]
            std::string inner = value.substr(1, value.size() - 2);
            std::size_t pos = 0;
            while (pos < inner.size()) {
                std::size_t comma = inner.find(", ", pos);
                const std::string item =
                    inner.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
                if (!unquote(item).empty()) expanded.push_back(flag + "=" + unquote(item));
                pos = comma == std::string::npos ? inner.size() : comma + 2;
            }
        } else if (!unquote(value).empty() && unquote(value) != "{}") {
            // "{}" is the echo of an empty repeatable option
            expanded.push_back(flag + "=" + unquote(value));
        }
    }
    expanded.insert(expanded.end(), rest.begin() + 1, rest.end());
    return expanded;
}

Corpus subsample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    if (n == 0 || n >= corpus.size()) return corpus;
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "subset"));
    rng.shuffle(order);
    Corpus out;
    out.name = corpus.name;
    out.num_classes = corpus.num_classes;
    out.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.samples.push_back(corpus.samples[order[i]]);
    return out;
}

struct CorpusSource {
    std::string idx_images;
    std::string idx_labels;
    std::string dir;
    std::string dir_labels;  // defaults to labels.tsv inside dir

    void add_flags(CLI::App* cmd, const std::string& prefix, const std::string& what) {
        cmd->add_option("--" + prefix + "images", idx_images, what + ": IDX image file");
        cmd->add_option("--" + prefix + "labels", idx_labels, what + ": IDX label file");
        cmd->add_option("--" + prefix + "dir", dir, what + ": image directory (PGM/PNG)");
        cmd->add_option("--" + prefix + "dir-labels", dir_labels,
                        what + ": labels sidecar for the directory");
    }

    Corpus load(const std::string& name) const {
        if (!idx_images.empty()) {
            if (idx_labels.empty()) throw ConfigError(name + ": IDX images need IDX labels");
            return load_idx(idx_images, idx_labels, name);
        }
        if (!dir.empty()) {
            const std::string labels =
                dir_labels.empty() ? (fs::path(dir) / kLabelsSidecarName).string() : dir_labels;
            return load_image_dir(dir, labels);
        }
        throw ConfigError(name + ": no corpus source given");
    }
};

void write_verdict_csv(const EvalMetrics& metrics, const fs::path& path) {
    std::ofstream csv(path, std::ios::binary);
    csv << "index,id,truth,verdict,h_avg,profile_index,rule\n";
    for (std::size_t i = 0; i < metrics.verdicts.size(); ++i) {
        const auto& v = metrics.verdicts[i];
        csv << i << ',' << v.id << ',' << (v.truth_adversarial ? "adversarial" : "clean") << ','
            << (v.verdict.adversarial ? "adversarial" : "clean") << ','
            << v.verdict.h_avg_observed << ',' << v.verdict.profile_index << ','
            << rule_name(v.verdict.rule_fired) << '\n';
    }
}

RuleMode rule_mode_from_name(const std::string& name) {
    if (name == "range") return RuleMode::RangeOnly;
    if (name == "nearest") return RuleMode::NearestOnly;
    if (name == "either") return RuleMode::Either;
    throw ConfigError("unknown rule mode: " + name);
}

std::string read_genome_bits(const std::string& genome, const std::string& genome_file) {
    if (!genome.empty()) return genome;
    std::ifstream in(genome_file);
    if (!in) throw IoError("cannot open genome file: " + genome_file);
    std::string bits;
    in >> bits;
    return bits;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

struct SynthCmd {
    CommonOpts common;
    std::size_t train_count = 12000;
    std::size_t test_count = 2000;
    int size = 28;

    void run(const CLI::App* cmd) const {
        const fs::path out = prepare_out(common);
        const Corpus train_set =
            make_synthetic_digits(train_count, derive_seed(common.seed, "synth-train"), size, size);
        const Corpus test_set =
            make_synthetic_digits(test_count, derive_seed(common.seed, "synth-test"), size, size);
        save_idx(train_set, (out / "train-images.idx").string(), (out / "train-labels.idx").string());
        save_idx(test_set, (out / "test-images.idx").string(), (out / "test-labels.idx").string());
        write_config_echo(cmd, out);
        std::cout << "wrote " << train_set.size() << " train and " << test_set.size()
                  << " test samples to " << out << "\n";
    }
};

struct TrainCmd {
    CommonOpts common;
    std::string images, labels;
    std::size_t subset = 0;
    TrainConfig train_cfg;

    void run(const CLI::App* cmd) const {
        const fs::path out = prepare_out(common);
        Corpus corpus = load_idx(images, labels, "train");
        corpus = subsample(corpus, subset, common.seed);
        TrainConfig cfg = train_cfg;
        cfg.seed = derive_seed(common.seed, "train");
        TrainReport report;
        const Classifier model = train(corpus, cfg, &report);
        save_classifier(model, (out / "model.bin").string());
        json rj{{"schema", kTrainReportSchema},
                {"arch", cfg.arch},
                {"hidden", model.hidden_dim},
                {"epochs", cfg.epochs},
                {"learning_rate", cfg.learning_rate},
                {"batch_size", cfg.batch_size},
                {"samples", corpus.size()},
                {"train_accuracy", report.train_accuracy},
                {"held_out_accuracy",
                 report.val_accuracy ? json(*report.val_accuracy) : json(nullptr)},
                {"val_count", report.val_count}};
        save_json(rj, (out / "train_report.json").string());
        write_config_echo(cmd, out);
        std::cout << "train accuracy " << report.train_accuracy;
        if (report.val_accuracy) std::cout << ", held-out accuracy " << *report.val_accuracy;
        std::cout << "\nmodel written to " << (out / "model.bin") << "\n";
    }
};

struct AttackGenCmd {
    CommonOpts common;
    std::string model_path;
    CorpusSource source;
    std::string kind = "fgsm";
    AttackSpec spec;
    std::size_t min_count = 250;
    std::size_t limit = 1000;

    void run(const CLI::App* cmd) const {
        const fs::path out = prepare_out(common);
        const Classifier model = load_classifier(model_path);
        Corpus src = source.load("attack-source");
        src = subsample(src, limit, common.seed);
        AttackSpec s = spec;
        s.kind = attack_from_name(kind);
        AttackBuildStats stats;
        const Corpus adv = build_attack_corpus(model, src, s, derive_seed(common.seed, "attack"),
                                               min_count, common.threads, &stats);
        save_corpus_pgm(adv, out.string(), "adv");
        json prov{{"schema", kAttackCorpusSchema},
                  {"attack", to_json(s)},
                  {"stats", to_json(stats)}};
        save_json(prov, (out / "provenance.json").string());
        write_config_echo(cmd, out);
        std::cout << stats.survivors << " survivors of " << stats.source_count
                  << " source samples (destruction rate " << stats.destruction_rate
                  << ") written to " << out << "\n";
    }
};

struct EvolveCmd {
    CommonOpts common;
    CorpusSource adv_source;
    CorpusSource clean_source;
    std::string codec_name = "2bit";
    double train_fraction = 0.75;
    GaConfig ga;
    std::size_t max_len_flag = 0;  // 0 -> codec default (3 genes for 2bit, 4 for 3bit)
    std::string weight_mode = "per-generation";

    void run(const CLI::App* cmd) const {
        const fs::path out = prepare_out(common);
        const Codec codec = codec_by_name(codec_name);
        const Corpus adv = adv_source.load("adversarial");
        const Corpus clean = clean_source.load("clean");

        const SplitManifest split = make_split(adv, clean, train_fraction, common.seed);
        const Corpus adv_train = select_by_ids(adv, split.adv_train, "adv-train");
        const Corpus clean_train = select_by_ids(clean, split.clean_train, "clean-train");

        GaConfig cfg = ga;
        cfg.seed = common.seed;
        cfg.threads = common.threads;
        cfg.max_len = max_len_flag ? max_len_flag : (codec.bits_per_gene == 2 ? 3 : 4);
        if (weight_mode != "frozen" && weight_mode != "per-generation") {
            throw ConfigError("weight-mode must be 'per-generation' or 'frozen'");
        }
        cfg.weight_mode =
            weight_mode == "frozen" ? WeightMode::Frozen : WeightMode::PerGeneration;

        const GaRunReport report = ipts::run(cfg, codec, adv_train, clean_train);

        save_json(to_json(report), (out / "ga_report.json").string());
        save_json(to_json(split), (out / "split.json").string());
        std::ofstream best(out / "best_genome.txt", std::ios::binary);
        best << report.best.bits << "\n";
        best.close();
        std::ofstream csv(out / "fitness.csv", std::ios::binary);
        csv << "generation,best_fv,champion_fv,mean_fv,champion_bits\n";
        for (const auto& g : report.generations) {
            csv << g.generation << ',' << g.best_fv << ',' << g.champion_fv << ',' << g.mean_fv
                << ',' << g.champion_bits << '\n';
        }
        csv.close();
        write_config_echo(cmd, out);
        std::cerr << "wall clock: " << report.wall_clock_seconds << " s\n";
        std::cout << "best genome " << report.best.bits << " ("
                  << decode(report.best).describe() << "), best F_V " << report.best_fv << "\n";
    }
};

struct CalibrateCmd {
    CommonOpts common;
    std::string genome, genome_file;
    std::string codec_name = "2bit";
    CorpusSource adv_source;
    CorpusSource clean_source;
    std::string split_path;
    double k = 2.0;
    std::string attack_tag, dataset_tag;

    void run(const CLI::App* cmd) const {
        const fs::path out = prepare_out(common);
        const Codec codec = codec_by_name(codec_name);
        Genome g{read_genome_bits(genome, genome_file), codec};
        g.validate();
        Corpus adv = adv_source.load("adversarial");
        Corpus clean = clean_source.load("clean");
        if (!split_path.empty()) {
            const SplitManifest split = split_from_json(load_json(split_path));
            adv = select_by_ids(adv, split.adv_train, "adv-train");
            clean = select_by_ids(clean, split.clean_train, "clean-train");
        }
        const DetectorProfile profile = calibrate(g, adv, clean, derive_seed(common.seed, "noise"),
                                                  k, attack_tag, dataset_tag);
        if (profile.zero_separation) {
            std::cerr << "warning: zero separation between adversarial and clean references\n";
        }
        save_json(to_json(profile), (out / "profile.json").string());
        write_config_echo(cmd, out);
        std::cout << "profile written: h_avg range [" << profile.range_lo << ", "
                  << profile.range_hi << "]\n";
    }
};

struct PoolCmd {
    CommonOpts common;
    std::vector<std::string> profile_paths;

    void run(const CLI::App* cmd) const {
        const fs::path out = prepare_out(common);
        SipsPool pool;
        pool.selection_seed = derive_seed(common.seed, "selection");
        for (const auto& path : profile_paths) {
            pool.profiles.push_back(profile_from_json(load_json(path)));
        }
        pool.validate();
        save_json(to_json(pool), (out / "pool.json").string());
        write_config_echo(cmd, out);
        std::cout << "pool of " << pool.profiles.size() << " profiles written\n";
    }
};

struct DetectCmd {
    CommonOpts common;
    std::string pool_path, profile_path;
    std::vector<std::string> images;
    std::string rule = "either";

    void run(const CLI::App*) const {
        SipsPool pool;
        if (!pool_path.empty()) {
            pool = pool_from_json(load_json(pool_path));
        } else if (!profile_path.empty()) {
            pool.profiles.push_back(profile_from_json(load_json(profile_path)));
            pool.selection_seed = derive_seed(common.seed, "selection");
        } else {
            throw ConfigError("detect needs --pool or --profile");
        }
        const RuleMode mode = rule_mode_from_name(rule);
        Rng rng(derive_seed(pool.selection_seed, common.seed));
        json out = json::array();
        for (const auto& path : images) {
            const Image img = load_image(path);
            const DetectionVerdict v = classify_pooled(img, pool, rng, mode);
            out.push_back(json{{"image", path},
                               {"verdict", v.adversarial ? "adversarial" : "clean"},
                               {"h_avg", v.h_avg_observed},
                               {"profile_index", v.profile_index},
                               {"rule", std::string(rule_name(v.rule_fired))},
                               {"diagnostics",
                                {{"ed_to_adv", v.diagnostics.ed_to_adv},
                                 {"ed_to_clean", v.diagnostics.ed_to_clean},
                                 {"ce_to_adv", v.diagnostics.ce_to_adv},
                                 {"ce_to_clean", v.diagnostics.ce_to_clean}}}});
        }
        std::cout << out.dump(2) << "\n";
    }
};

struct EvalCmd {
    CommonOpts common;
    std::string pool_path, profile_path;
    CorpusSource adv_source;
    CorpusSource clean_source;
    std::string split_path;
    std::string rule = "either";

    void run(const CLI::App* cmd) const {
        const fs::path out = prepare_out(common);
        SipsPool pool;
        if (!pool_path.empty()) {
            pool = pool_from_json(load_json(pool_path));
        } else if (!profile_path.empty()) {
            pool.profiles.push_back(profile_from_json(load_json(profile_path)));
            pool.selection_seed = derive_seed(common.seed, "selection");
        } else {
            throw ConfigError("eval needs --pool or --profile");
        }
        Corpus adv = adv_source.load("adversarial");
        Corpus clean = clean_source.load("clean");
        if (!split_path.empty()) {
            const SplitManifest split = split_from_json(load_json(split_path));
            adv = select_by_ids(adv, split.adv_test, "adv-test");
            clean = select_by_ids(clean, split.clean_test, "clean-test");
        }
        Rng rng(derive_seed(pool.selection_seed, common.seed));
        const EvalMetrics metrics = evaluate(pool, adv, clean, rng, rule_mode_from_name(rule));
        save_json(to_json(metrics), (out / "metrics.json").string());
        write_verdict_csv(metrics, out / "verdicts.csv");
        write_config_echo(cmd, out);
        std::cout << "tp " << metrics.tp << " fp " << metrics.fp << " tn " << metrics.tn << " fn "
                  << metrics.fn << "\nprecision " << metrics.precision << " recall "
                  << metrics.recall << " F1 " << metrics.f1 << " accuracy " << metrics.accuracy
                  << "\n";
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evolved image-filter sequences for adversarial input detection"};
    app.require_subcommand(1);

    SynthCmd synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic digit dataset (IDX files)");
    add_common(synth_cmd, synth.common);
    synth_cmd->add_option("--count", synth.train_count, "training samples");
    synth_cmd->add_option("--test-count", synth.test_count, "test samples");
    synth_cmd->add_option("--size", synth.size, "image side length");

    TrainCmd train_cmd_data;
    auto* train_cmd = app.add_subcommand("train", "train the victim classifier");
    add_common(train_cmd, train_cmd_data.common);
    train_cmd->add_option("--images", train_cmd_data.images, "IDX image file")->required();
    train_cmd->add_option("--labels", train_cmd_data.labels, "IDX label file")->required();
    train_cmd->add_option("--subset", train_cmd_data.subset, "train on a seeded subset (0 = all)");
    train_cmd->add_option("--arch", train_cmd_data.train_cfg.arch, "softmax or mlp");
    train_cmd->add_option("--hidden", train_cmd_data.train_cfg.hidden, "mlp hidden width");
    train_cmd->add_option("--epochs", train_cmd_data.train_cfg.epochs, "training epochs");
    train_cmd->add_option("--lr", train_cmd_data.train_cfg.learning_rate, "learning rate");
    train_cmd->add_option("--batch", train_cmd_data.train_cfg.batch_size, "minibatch size");
    train_cmd->add_option("--val-frac", train_cmd_data.train_cfg.val_fraction,
                          "held-out fraction for the accuracy report");

    AttackGenCmd attack_gen;
    auto* attack_cmd = app.add_subcommand("attack-gen", "generate an adversarial corpus");
    add_common(attack_cmd, attack_gen.common);
    attack_cmd->add_option("--model", attack_gen.model_path, "victim model file")->required();
    attack_gen.source.add_flags(attack_cmd, "", "source corpus");
    attack_cmd->add_option("--kind", attack_gen.kind, "fgsm | bim | mbim | pgd");
    attack_cmd->add_option("--epsilon", attack_gen.spec.epsilon, "L-inf budget");
    attack_cmd->add_option("--step", attack_gen.spec.step_size,
                           "per-iteration step (0 = epsilon/4)");
    attack_cmd->add_option("--iterations", attack_gen.spec.iterations, "iterative attack steps");
    attack_cmd->add_option("--momentum", attack_gen.spec.momentum_decay, "MBIM momentum decay");
    attack_cmd->add_flag("--random-start", attack_gen.spec.random_start, "PGD random start");
    attack_cmd->add_option("--min-count", attack_gen.min_count, "required survivor count");
    attack_cmd->add_option("--limit", attack_gen.limit, "source sample cap (0 = all)");

    EvolveCmd evolve;
    auto* evolve_cmd = app.add_subcommand("evolve", "evolve a filter sequence with the GA");
    add_common(evolve_cmd, evolve.common);
    evolve.adv_source.add_flags(evolve_cmd, "adv-", "adversarial corpus");
    evolve.clean_source.add_flags(evolve_cmd, "clean-", "clean corpus");
    evolve_cmd->add_option("--codec", evolve.codec_name, "2bit or 3bit");
    evolve_cmd->add_option("--train-frac", evolve.train_fraction, "training split fraction");
    evolve_cmd->add_option("--pop", evolve.ga.population_size, "population size (even)");
    evolve_cmd->add_option("--max-len", evolve.max_len_flag, "max genes (0 = codec default)");
    evolve_cmd->add_option("--mutation", evolve.ga.mutation_rate, "per-bit mutation probability");
    evolve_cmd->add_option("--elites", evolve.ga.elite_count, "elite individuals kept verbatim");
    evolve_cmd->add_option("--generations", evolve.ga.max_generations, "generation budget");
    evolve_cmd->add_option("--patience", evolve.ga.patience,
                           "stop after this many stale generations (0 = off)");
    evolve_cmd->add_option("--seed-genome", evolve.ga.heuristic_seeds,
                           "heuristic genome bit strings placed in the initial population");
    evolve_cmd->add_option("--weight-mode", evolve.weight_mode, "per-generation or frozen");

    CalibrateCmd calibrate_data;
    auto* cal_cmd = app.add_subcommand("calibrate", "calibrate a detector profile");
    add_common(cal_cmd, calibrate_data.common);
    cal_cmd->add_option("--genome", calibrate_data.genome, "genome bit string");
    cal_cmd->add_option("--genome-file", calibrate_data.genome_file,
                        "file containing the genome bit string");
    cal_cmd->add_option("--codec", calibrate_data.codec_name, "2bit or 3bit");
    calibrate_data.adv_source.add_flags(cal_cmd, "adv-", "adversarial corpus");
    calibrate_data.clean_source.add_flags(cal_cmd, "clean-", "clean corpus");
    cal_cmd->add_option("--split", calibrate_data.split_path,
                        "split manifest; restricts to the training halves");
    cal_cmd->add_option("--k", calibrate_data.k, "band half-width in std units");
    cal_cmd->add_option("--attack-tag", calibrate_data.attack_tag, "attack label for the profile");
    cal_cmd->add_option("--dataset-tag", calibrate_data.dataset_tag, "dataset label");

    PoolCmd pool_data;
    auto* pool_cmd = app.add_subcommand("pool", "merge profiles into a selection pool");
    add_common(pool_cmd, pool_data.common);
    pool_cmd->add_option("--profile", pool_data.profile_paths, "profile JSON files (repeatable)")
        ->required();

    DetectCmd detect_data;
    auto* detect_cmd = app.add_subcommand("detect", "classify images with a pool or profile");
    add_common(detect_cmd, detect_data.common);
    detect_cmd->add_option("--pool", detect_data.pool_path, "pool JSON");
    detect_cmd->add_option("--profile", detect_data.profile_path, "profile JSON");
    detect_cmd->add_option("--image", detect_data.images, "image files (repeatable)")->required();
    detect_cmd->add_option("--rule", detect_data.rule, "range | nearest | either");

    EvalCmd eval_data;
    auto* eval_cmd = app.add_subcommand("eval", "score a pool on held-out corpora");
    add_common(eval_cmd, eval_data.common);
    eval_cmd->add_option("--pool", eval_data.pool_path, "pool JSON");
    eval_cmd->add_option("--profile", eval_data.profile_path, "profile JSON");
    eval_data.adv_source.add_flags(eval_cmd, "adv-", "adversarial corpus");
    eval_data.clean_source.add_flags(eval_cmd, "clean-", "clean corpus");
    eval_cmd->add_option("--split", eval_data.split_path,
                         "split manifest; restricts to the held-out test halves");
    eval_cmd->add_option("--rule", eval_data.rule, "range | nearest | either");

    try {
        std::vector<std::string> args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (synth_cmd->parsed()) synth.run(synth_cmd);
        if (train_cmd->parsed()) train_cmd_data.run(train_cmd);
        if (attack_cmd->parsed()) attack_gen.run(attack_cmd);
        if (evolve_cmd->parsed()) evolve.run(evolve_cmd);
        if (cal_cmd->parsed()) calibrate_data.run(cal_cmd);
        if (pool_cmd->parsed()) pool_data.run(pool_cmd);
        if (detect_cmd->parsed()) detect_data.run(detect_cmd);
        if (eval_cmd->parsed()) eval_data.run(eval_cmd);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
