#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipts/attacks.hpp"
#include "ipts/classifier.hpp"
#include "ipts/detector.hpp"
#include "ipts/error.hpp"
#include "ipts/ga.hpp"

namespace ipts {

using nlohmann::json;

inline constexpr const char* kProfileSchema = "ipts.profile/1";
inline constexpr const char* kPoolSchema = "ipts.pool/1";
inline constexpr const char* kGaReportSchema = "ipts.ga_report/1";
inline constexpr const char* kEvalSchema = "ipts.eval/1";
inline constexpr const char* kAttackCorpusSchema = "ipts.attack_corpus/1";
inline constexpr const char* kTrainReportSchema = "ipts.train_report/1";
inline constexpr const char* kSplitSchema = "ipts.split/1";
inline constexpr const char* kRunConfigSchema = "ipts.run_config/1";
inline constexpr const char* kModelSchema = "ipts.model/1";

inline void check_schema(const json& j, const std::string& expected) {
    if (!j.contains("schema") || j.at("schema").get<std::string>() != expected) {
        throw SchemaMismatch("expected schema '" + expected + "'");
    }
}

inline void save_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output: " + path);
    out << j.dump(2) << '\n';
}

inline json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UnsupportedFormat("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

// ---------------------------------------------------------------------------
// filters / genome
// ---------------------------------------------------------------------------

inline json to_json(const FilterParams& p) {
    return json{{"blur_sigma", p.blur_sigma},
                {"sharpen_amount", p.sharpen_amount},
                {"bilateral_sigma_space", p.bilateral_sigma_space},
                {"bilateral_sigma_range", p.bilateral_sigma_range},
                {"bilateral_radius", p.bilateral_radius},
                {"noise_sigma", p.noise_sigma},
                {"binarize_threshold", p.binarize_threshold},
                {"pixellate_small_block", p.pixellate_small_block},
                {"pixellate_large_block", p.pixellate_large_block},
                {"pixellate_small_limit", p.pixellate_small_limit}};
}

inline FilterParams filter_params_from_json(const json& j) {
    FilterParams p;
    p.blur_sigma = j.at("blur_sigma");
    p.sharpen_amount = j.at("sharpen_amount");
    p.bilateral_sigma_space = j.at("bilateral_sigma_space");
    p.bilateral_sigma_range = j.at("bilateral_sigma_range");
    p.bilateral_radius = j.at("bilateral_radius");
    p.noise_sigma = j.at("noise_sigma");
    p.binarize_threshold = j.at("binarize_threshold");
    p.pixellate_small_block = j.at("pixellate_small_block");
    p.pixellate_large_block = j.at("pixellate_large_block");
    p.pixellate_small_limit = j.at("pixellate_small_limit");
    return p;
}

inline json to_json(const Codec& c) {
    json table = json::array();
    for (IptKind k : c.table) table.push_back(std::string(kind_name(k)));
    return json{{"name", c.name}, {"bits_per_gene", c.bits_per_gene}, {"table", table}};
}

inline Codec codec_from_json(const json& j) {
    Codec c;
    c.name = j.at("name");
    c.bits_per_gene = j.at("bits_per_gene");
    for (const auto& entry : j.at("table")) {
        c.table.push_back(kind_from_name(entry.get<std::string>()));
    }
    c.validate();
    return c;
}

inline json to_json(const Genome& g) {
    return json{{"bits", g.bits}, {"codec", to_json(g.codec)}};
}

inline Genome genome_from_json(const json& j) {
    Genome g;
    g.bits = j.at("bits");
    g.codec = codec_from_json(j.at("codec"));
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// metrics / detector
// ---------------------------------------------------------------------------

inline json to_json(const MetricStats& s) {
    return json{{"h_avg_mean", s.h_avg_mean},
                {"h_avg_std", s.h_avg_std},
                {"mean_histogram", s.mean_histogram}};
}

inline MetricStats metric_stats_from_json(const json& j) {
    MetricStats s;
    s.h_avg_mean = j.at("h_avg_mean");
    s.h_avg_std = j.at("h_avg_std");
    const auto& hist = j.at("mean_histogram");
    if (hist.size() != std::size_t(kHistogramBins)) {
        throw SchemaMismatch("mean_histogram must have 256 bins");
    }
    for (int i = 0; i < kHistogramBins; ++i) s.mean_histogram[i] = hist[i];
    return s;
}

inline json to_json(const DetectorProfile& p) {
    return json{{"schema", kProfileSchema},
                {"genome", to_json(p.genome)},
                {"attack_tag", p.attack_tag},
                {"dataset_tag", p.dataset_tag},
                {"width", p.width},
                {"height", p.height},
                {"h_avg_range", {p.range_lo, p.range_hi}},
                {"range_k", p.range_k},
                {"reference_adv", to_json(p.reference_adv)},
                {"reference_clean", to_json(p.reference_clean)},
                {"noise_seed", p.noise_seed},
                {"zero_separation", p.zero_separation},
                {"filter_params", to_json(p.filter_params)}};
}

inline DetectorProfile profile_from_json(const json& j) {
    check_schema(j, kProfileSchema);
    DetectorProfile p;
    p.genome = genome_from_json(j.at("genome"));
    p.attack_tag = j.at("attack_tag");
    p.dataset_tag = j.at("dataset_tag");
    p.width = j.at("width");
    p.height = j.at("height");
    p.range_lo = j.at("h_avg_range").at(0);
    p.range_hi = j.at("h_avg_range").at(1);
    p.range_k = j.at("range_k");
    p.reference_adv = metric_stats_from_json(j.at("reference_adv"));
    p.reference_clean = metric_stats_from_json(j.at("reference_clean"));
    p.noise_seed = j.at("noise_seed");
    p.zero_separation = j.at("zero_separation");
    p.filter_params = filter_params_from_json(j.at("filter_params"));
    return p;
}

inline json to_json(const SipsPool& pool) {
    json profiles = json::array();
    for (const auto& p : pool.profiles) profiles.push_back(to_json(p));
    return json{{"schema", kPoolSchema},
                {"selection_seed", pool.selection_seed},
                {"profiles", profiles}};
}

inline SipsPool pool_from_json(const json& j) {
    check_schema(j, kPoolSchema);
    SipsPool pool;
    pool.selection_seed = j.at("selection_seed");
    for (const auto& pj : j.at("profiles")) pool.profiles.push_back(profile_from_json(pj));
    pool.validate();
    return pool;
}

inline json to_json(const EvalMetrics& m) {
    return json{{"schema", kEvalSchema},
                {"tp", m.tp},
                {"fp", m.fp},
                {"tn", m.tn},
                {"fn", m.fn},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"accuracy", m.accuracy}};
}

// ---------------------------------------------------------------------------
// GA
// ---------------------------------------------------------------------------

inline json to_json(const RawComponents& r) {
    return json{{"f_h", r.f_h}, {"f_ce", r.f_ce}, {"f_ed", r.f_ed},
                {"f_ce_pd", r.f_ce_pd}, {"f_l", r.f_l}};
}

inline json to_json(const FitnessReport& r) {
    return json{{"raw", to_json(r.raw)},
                {"normalized", r.normalized},
                {"weights", r.weights},
                {"f_v", r.f_v}};
}

inline json to_json(const GaConfig& c) {
    return json{{"population_size", c.population_size},
                {"max_len", c.max_len},
                {"mutation_rate", c.mutation_rate},
                {"elite_count", c.elite_count},
                {"max_generations", c.max_generations},
                {"patience", c.patience},
                {"seed", c.seed},
                {"heuristic_seeds", c.heuristic_seeds},
                {"weight_mode",
                 c.weight_mode == WeightMode::PerGeneration ? "per-generation" : "frozen"},
                {"threads", c.threads},
                {"filter_params", to_json(c.filter_params)}};
}

/// Wall-clock time is deliberately absent: rerunning a seed must reproduce
/// the report byte for byte.
inline json to_json(const GaRunReport& r) {
    json generations = json::array();
    for (const auto& g : r.generations) {
        generations.push_back(json{{"generation", g.generation},
                                   {"best_fv", g.best_fv},
                                   {"champion_fv", g.champion_fv},
                                   {"mean_fv", g.mean_fv},
                                   {"champion_bits", g.champion_bits}});
    }
    json population = json::array();
    for (const auto& e : r.final_population) {
        population.push_back(json{{"bits", e.genome.bits}, {"fitness", to_json(e.fitness)}});
    }
    return json{{"schema", kGaReportSchema},
                {"config", to_json(r.config)},
                {"codec", r.codec_name},
                {"generations", generations},
                {"final_population", population},
                {"best",
                 {{"bits", r.best.bits},
                  {"decoded", decode(r.best).describe()},
                  {"f_v", r.final_population.empty() ? 0.0 : r.final_population.front().fitness.f_v},
                  {"best_fv_seen", r.best_fv}}}};
}

// ---------------------------------------------------------------------------
// attacks
// ---------------------------------------------------------------------------

inline json to_json(const AttackSpec& s) {
    return json{{"kind", std::string(attack_name(s.kind))},
                {"epsilon", s.epsilon},
                {"step_size", s.step_size},
                {"effective_step", s.effective_step()},
                {"iterations", s.iterations},
                {"effective_iterations", s.effective_iterations()},
                {"momentum_decay", s.momentum_decay},
                {"random_start", s.random_start}};
}

inline AttackSpec attack_spec_from_json(const json& j) {
    AttackSpec s;
    s.kind = attack_from_name(j.at("kind").get<std::string>());
    s.epsilon = j.at("epsilon");
    s.step_size = j.at("step_size");
    s.iterations = j.at("iterations");
    s.momentum_decay = j.at("momentum_decay");
    s.random_start = j.at("random_start");
    return s;
}

inline json to_json(const AttackBuildStats& s) {
    return json{{"source_count", s.source_count},
                {"clean_misclassified", s.clean_misclassified},
                {"attack_failed", s.attack_failed},
                {"destroyed_by_quantization", s.destroyed},
                {"epsilon_violations", s.epsilon_violations},
                {"survivors", s.survivors},
                {"destruction_rate", s.destruction_rate}};
}

// ---------------------------------------------------------------------------
// classifier model file
// ---------------------------------------------------------------------------

inline void save_classifier(const Classifier& model, const std::string& path) {
    const json header{{"schema", kModelSchema},
                      {"arch", model.hidden_dim > 0 ? "mlp" : "softmax"},
                      {"input_dim", model.input_dim},
                      {"num_classes", model.num_classes},
                      {"hidden_dim", model.hidden_dim},
                      {"seed", model.seed}};
    save_classifier(model, path, header.dump());
}

inline Classifier load_classifier(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    unsigned char lenb[4];
    in.read(reinterpret_cast<char*>(lenb), 4);
    if (!in) throw TruncatedFile("model file truncated: " + path);
    const std::uint32_t len = (std::uint32_t(lenb[0]) << 24) | (std::uint32_t(lenb[1]) << 16) |
                              (std::uint32_t(lenb[2]) << 8) | std::uint32_t(lenb[3]);
    std::string header(len, '\0');
    in.read(header.data(), len);
    if (!in) throw TruncatedFile("model header truncated: " + path);
    json j;
    try {
        j = json::parse(header);
    } catch (const json::exception&) {
        throw BadMagic("model header is not valid JSON: " + path);
    }
    check_schema(j, kModelSchema);

    Classifier model;
    model.input_dim = j.at("input_dim");
    model.num_classes = j.at("num_classes");
    model.hidden_dim = j.at("hidden_dim");
    model.seed = j.at("seed");
    const std::size_t hidden_w = std::size_t(model.hidden_dim) * model.input_dim;
    const std::size_t hidden_b = model.hidden_dim;
    const std::size_t out_w = std::size_t(model.num_classes) * model.fan_in();
    const std::size_t out_b = model.num_classes;
    auto read_doubles = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw TruncatedFile("model weights truncated: " + path);
    };
    read_doubles(model.w_hidden, hidden_w);
    read_doubles(model.b_hidden, hidden_b);
    read_doubles(model.w_out, out_w);
    read_doubles(model.b_out, out_b);
    return model;
}

}  // namespace ipts
