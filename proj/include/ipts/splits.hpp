#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipts/error.hpp"
#include "ipts/image.hpp"
#include "ipts/rng.hpp"
#include "ipts/serialize.hpp"

namespace ipts {

/// Sample ids for the train/test partition of one experiment, written next to
/// the evolve outputs so calibration and evaluation consume exactly the same
/// samples.
struct SplitManifest {
    std::vector<std::string> adv_train;
    std::vector<std::string> adv_test;
    std::vector<std::string> clean_train;
    std::vector<std::string> clean_test;
};

/// Shuffles the adversarial ids and takes `train_fraction` of them for
/// training; the clean corpus contributes matching train and test sets,
/// disjoint from one another.
inline SplitManifest make_split(const Corpus& adv, const Corpus& clean, double train_fraction,
                                std::uint64_t seed) {
    if (adv.size() < 2) throw EmptyCorpus("split: adversarial corpus needs at least 2 samples");
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw ConfigError("train_fraction must be in (0, 1)");
    }
    std::vector<std::string> adv_ids, clean_ids;
    for (const auto& s : adv.samples) adv_ids.push_back(s.id);
    for (const auto& s : clean.samples) clean_ids.push_back(s.id);

    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(adv_ids);
    rng.shuffle(clean_ids);

    std::size_t train_n = static_cast<std::size_t>(adv.size() * train_fraction);
    train_n = std::clamp<std::size_t>(train_n, 1, adv.size() - 1);
    const std::size_t test_n = adv.size() - train_n;
    if (clean.size() < train_n + test_n) {
        throw InsufficientSamples("clean corpus too small: need " +
                                  std::to_string(train_n + test_n) + ", have " +
                                  std::to_string(clean.size()));
    }

    SplitManifest m;
    m.adv_train.assign(adv_ids.begin(), adv_ids.begin() + train_n);
    m.adv_test.assign(adv_ids.begin() + train_n, adv_ids.end());
    m.clean_train.assign(clean_ids.begin(), clean_ids.begin() + train_n);
    m.clean_test.assign(clean_ids.begin() + train_n, clean_ids.begin() + train_n + test_n);
    return m;
}

/// Selects the named samples, in manifest order.
inline Corpus select_by_ids(const Corpus& corpus, const std::vector<std::string>& ids,
                            const std::string& name) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < corpus.size(); ++i) index[corpus.samples[i].id] = i;
    Corpus out;
    out.name = name;
    out.num_classes = corpus.num_classes;
    out.samples.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = index.find(id);
        if (it == index.end()) {
            throw Error("split manifest names unknown sample '" + id + "' in corpus " +
                        corpus.name);
        }
        out.samples.push_back(corpus.samples[it->second]);
    }
    return out;
}

inline json to_json(const SplitManifest& m) {
    return json{{"schema", kSplitSchema},
                {"adv_train", m.adv_train},
                {"adv_test", m.adv_test},
                {"clean_train", m.clean_train},
                {"clean_test", m.clean_test}};
}

inline SplitManifest split_from_json(const json& j) {
    check_schema(j, kSplitSchema);
    SplitManifest m;
    m.adv_train = j.at("adv_train").get<std::vector<std::string>>();
    m.adv_test = j.at("adv_test").get<std::vector<std::string>>();
    m.clean_train = j.at("clean_train").get<std::vector<std::string>>();
    m.clean_test = j.at("clean_test").get<std::vector<std::string>>();
    return m;
}

}  // namespace ipts
