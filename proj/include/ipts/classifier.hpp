#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipts/error.hpp"
#include "ipts/image.hpp"
#include "ipts/rng.hpp"

namespace ipts {

/// Small differentiable victim model: softmax regression (hidden_dim == 0)
/// or a one-hidden-layer rectifier MLP. All math in double.
struct Classifier {
    int input_dim = 0;
    int num_classes = 0;
    int hidden_dim = 0;  // 0 -> softmax regression
    std::uint64_t seed = 0;

    // hidden layer (empty for softmax regression)
    std::vector<double> w_hidden;  // hidden_dim x input_dim, row-major
    std::vector<double> b_hidden;  // hidden_dim
    // output layer; input is the hidden activation, or the raw input
    std::vector<double> w_out;  // num_classes x fan_in
    std::vector<double> b_out;  // num_classes

    int fan_in() const { return hidden_dim > 0 ? hidden_dim : input_dim; }

    std::vector<double> hidden_pre(std::span<const double> x) const {
        std::vector<double> z(hidden_dim);
        for (int h = 0; h < hidden_dim; ++h) {
            double acc = b_hidden[h];
            const double* row = &w_hidden[std::size_t(h) * input_dim];
            for (int d = 0; d < input_dim; ++d) acc += row[d] * x[d];
            z[h] = acc;
        }
        return z;
    }

    std::vector<double> logits(std::span<const double> x) const {
        std::vector<double> features;
        std::span<const double> in = x;
        if (hidden_dim > 0) {
            features = hidden_pre(x);
            for (double& v : features) v = std::max(v, 0.0);
            in = features;
        }
        std::vector<double> z(num_classes);
        for (int c = 0; c < num_classes; ++c) {
            double acc = b_out[c];
            const double* row = &w_out[std::size_t(c) * fan_in()];
            for (int d = 0; d < fan_in(); ++d) acc += row[d] * in[d];
            z[c] = acc;
        }
        return z;
    }

    /// softmax with max-subtraction; sums to 1 up to rounding
    std::vector<double> probabilities(std::span<const double> x) const {
        std::vector<double> z = logits(x);
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double& v : z) {
            v = std::exp(v - m);
            sum += v;
        }
        for (double& v : z) v /= sum;
        return z;
    }

    int predict(std::span<const double> x) const {
        const std::vector<double> z = logits(x);
        return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    }

    int predict(const Image& img) const { return predict(std::span<const double>(img.pixels)); }

    /// cross-entropy loss, computed as logsumexp(z) - z[y]
    double loss(std::span<const double> x, int y) const {
        const std::vector<double> z = logits(x);
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - m);
        return m + std::log(sum) - z[y];
    }

    /// dLoss/dInput for the true-class cross-entropy; the quantity every
    /// gradient-sign attack consumes.
    std::vector<double> input_gradient(std::span<const double> x, int y) const {
        std::vector<double> p = probabilities(x);
        p[y] -= 1.0;  // dL/dlogits
        std::vector<double> grad(input_dim, 0.0);
        if (hidden_dim == 0) {
            for (int c = 0; c < num_classes; ++c) {
                const double* row = &w_out[std::size_t(c) * input_dim];
                for (int d = 0; d < input_dim; ++d) grad[d] += p[c] * row[d];
            }
            return grad;
        }
        const std::vector<double> z1 = hidden_pre(x);
        std::vector<double> dh(hidden_dim, 0.0);
        for (int c = 0; c < num_classes; ++c) {
            const double* row = &w_out[std::size_t(c) * hidden_dim];
            for (int h = 0; h < hidden_dim; ++h) dh[h] += p[c] * row[h];
        }
        for (int h = 0; h < hidden_dim; ++h) {
            if (z1[h] <= 0.0) continue;  // rectifier gate
            const double* row = &w_hidden[std::size_t(h) * input_dim];
            for (int d = 0; d < input_dim; ++d) grad[d] += dh[h] * row[d];
        }
        return grad;
    }
};

struct TrainConfig {
    std::string arch = "softmax";  // "softmax" or "mlp"
    int hidden = 64;               // mlp only
    double learning_rate = 0.2;
    int epochs = 15;
    int batch_size = 64;
    double val_fraction = 0.1;  // held out from the corpus before training
    std::uint64_t seed = 0;
};

struct TrainReport {
    double train_accuracy = 0.0;
    std::optional<double> val_accuracy;
    std::size_t train_count = 0;
    std::size_t val_count = 0;
};

inline double accuracy(const Classifier& model, const Corpus& corpus) {
    if (corpus.empty()) throw EmptyCorpus("accuracy: corpus is empty");
    std::size_t hits = 0;
    for (const auto& s : corpus.samples) {
        if (model.predict(s.image) == s.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(corpus.size());
}

/// Minibatch SGD on cross-entropy. Deterministic under a fixed seed: the
/// shuffles use the library RNG and accumulation order is fixed.
inline Classifier train(const Corpus& corpus, const TrainConfig& cfg, TrainReport* report = nullptr) {
    if (corpus.empty()) throw EmptyCorpus("train: corpus is empty");
    if (cfg.arch != "softmax" && cfg.arch != "mlp") {
        throw ConfigError("arch must be 'softmax' or 'mlp'");
    }
    corpus.validate();

    Classifier model;
    model.input_dim = corpus.width() * corpus.height();
    model.num_classes = corpus.num_classes;
    model.hidden_dim = cfg.arch == "mlp" ? cfg.hidden : 0;
    model.seed = cfg.seed;

    if (model.hidden_dim > 0) {
        Rng init_rng(derive_seed(cfg.seed, "init"));
        auto xavier = [&](std::vector<double>& w, int fan_in, int fan_out) {
            const double a = std::sqrt(6.0 / (fan_in + fan_out));
            for (double& v : w) v = init_rng.uniform(-a, a);
        };
        model.w_hidden.resize(std::size_t(model.hidden_dim) * model.input_dim);
        model.b_hidden.assign(model.hidden_dim, 0.0);
        xavier(model.w_hidden, model.input_dim, model.hidden_dim);
        model.w_out.resize(std::size_t(model.num_classes) * model.hidden_dim);
        model.b_out.assign(model.num_classes, 0.0);
        xavier(model.w_out, model.hidden_dim, model.num_classes);
    } else {
        // zero init: the softmax-regression objective is convex
        model.w_out.assign(std::size_t(model.num_classes) * model.input_dim, 0.0);
        model.b_out.assign(model.num_classes, 0.0);
    }

    // train/validation split
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_seed(cfg.seed, "val-split"));
    split_rng.shuffle(order);
    std::size_t val_count = static_cast<std::size_t>(corpus.size() * cfg.val_fraction);
    if (val_count >= corpus.size()) val_count = corpus.size() - 1;
    std::vector<std::size_t> train_idx(order.begin(), order.end() - val_count);
    std::vector<std::size_t> val_idx(order.end() - val_count, order.end());

    const int fan_in = model.fan_in();
    std::vector<double> gw_out(model.w_out.size());
    std::vector<double> gb_out(model.b_out.size());
    std::vector<double> gw_hidden(model.w_hidden.size());
    std::vector<double> gb_hidden(model.b_hidden.size());

    Rng order_rng(derive_seed(cfg.seed, "epoch-order"));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(train_idx);
        for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, train_idx.size());
            std::fill(gw_out.begin(), gw_out.end(), 0.0);
            std::fill(gb_out.begin(), gb_out.end(), 0.0);
            std::fill(gw_hidden.begin(), gw_hidden.end(), 0.0);
            std::fill(gb_hidden.begin(), gb_hidden.end(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const auto& s = corpus.samples[train_idx[k]];
                const std::span<const double> x(s.image.pixels);
                std::vector<double> p = model.probabilities(x);
                p[s.label] -= 1.0;
                if (model.hidden_dim == 0) {
                    for (int c = 0; c < model.num_classes; ++c) {
                        double* row = &gw_out[std::size_t(c) * fan_in];
                        for (int d = 0; d < fan_in; ++d) row[d] += p[c] * x[d];
                        gb_out[c] += p[c];
                    }
                } else {
                    const std::vector<double> z1 = model.hidden_pre(x);
                    std::vector<double> a1(z1.size());
                    for (std::size_t h = 0; h < z1.size(); ++h) a1[h] = std::max(z1[h], 0.0);
                    std::vector<double> dh(model.hidden_dim, 0.0);
                    for (int c = 0; c < model.num_classes; ++c) {
                        double* row = &gw_out[std::size_t(c) * fan_in];
                        const double* w_row = &model.w_out[std::size_t(c) * fan_in];
                        for (int h = 0; h < fan_in; ++h) {
                            row[h] += p[c] * a1[h];
                            dh[h] += p[c] * w_row[h];
                        }
                        gb_out[c] += p[c];
                    }
                    for (int h = 0; h < model.hidden_dim; ++h) {
                        if (z1[h] <= 0.0) continue;
                        double* row = &gw_hidden[std::size_t(h) * model.input_dim];
                        for (int d = 0; d < model.input_dim; ++d) row[d] += dh[h] * x[d];
                        gb_hidden[h] += dh[h];
                    }
                }
            }
            const double scale = cfg.learning_rate / static_cast<double>(end - start);
            for (std::size_t i = 0; i < model.w_out.size(); ++i) model.w_out[i] -= scale * gw_out[i];
            for (std::size_t i = 0; i < model.b_out.size(); ++i) model.b_out[i] -= scale * gb_out[i];
            for (std::size_t i = 0; i < model.w_hidden.size(); ++i) {
                model.w_hidden[i] -= scale * gw_hidden[i];
            }
            for (std::size_t i = 0; i < model.b_hidden.size(); ++i) {
                model.b_hidden[i] -= scale * gb_hidden[i];
            }
        }
    }

    if (report) {
        auto subset_accuracy = [&](const std::vector<std::size_t>& idx) {
            std::size_t hits = 0;
            for (std::size_t i : idx) {
                const auto& s = corpus.samples[i];
                if (model.predict(s.image) == s.label) ++hits;
            }
            return idx.empty() ? 0.0 : static_cast<double>(hits) / idx.size();
        };
        report->train_accuracy = subset_accuracy(train_idx);
        report->train_count = train_idx.size();
        report->val_count = val_idx.size();
        if (!val_idx.empty()) report->val_accuracy = subset_accuracy(val_idx);
    }
    return model;
}

/// Compares the analytic input gradient with central finite differences
/// (h = 1e-4). Returns the max per-coordinate error relative to the gradient
/// scale (floored at 1e-6 so near-zero gradients stay comparable).
inline double gradient_check(const Classifier& model, const Image& img, int y) {
    constexpr double kH = 1e-4;
    std::vector<double> x(img.pixels);
    const std::vector<double> analytic = model.input_gradient(x, y);
    double scale = 1e-6;
    for (double g : analytic) scale = std::max(scale, std::abs(g));

    double worst = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double keep = x[d];
        x[d] = keep + kH;
        const double up = model.loss(x, y);
        x[d] = keep - kH;
        const double down = model.loss(x, y);
        x[d] = keep;
        const double fd = (up - down) / (2.0 * kH);
        scale = std::max(scale, std::abs(fd));
        worst = std::max(worst, std::abs(analytic[d] - fd));
    }
    return worst / scale;
}

// ---------------------------------------------------------------------------
// Model file: 4-byte big-endian header length, JSON header, raw doubles
// ---------------------------------------------------------------------------

inline void save_classifier(const Classifier& model, const std::string& path,
                            const std::string& header_json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open model output: " + path);
    const std::uint32_t len = static_cast<std::uint32_t>(header_json.size());
    const unsigned char lenb[4] = {static_cast<unsigned char>(len >> 24),
                                   static_cast<unsigned char>(len >> 16),
                                   static_cast<unsigned char>(len >> 8),
                                   static_cast<unsigned char>(len)};
    out.write(reinterpret_cast<const char*>(lenb), 4);
    out.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
    auto dump = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    dump(model.w_hidden);
    dump(model.b_hidden);
    dump(model.w_out);
    dump(model.b_out);
}

}  // namespace ipts
