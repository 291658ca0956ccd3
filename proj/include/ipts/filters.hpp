#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ipts/error.hpp"
#include "ipts/image.hpp"
#include "ipts/rng.hpp"

namespace ipts {

/// The image-processing techniques a genome can decode into. Thicken exists
/// for custom codecs only; neither default codec encodes it.
enum class IptKind : std::uint8_t {
    DoNothing,
    AdaptiveSmooth,
    BilateralSmooth,
    AdditiveNoise,
    Thinning,
    Pixellate,
    Blur,
    Sharpen,
    Thicken,
};

inline constexpr std::array<IptKind, 9> kAllIptKinds = {
    IptKind::DoNothing, IptKind::AdaptiveSmooth, IptKind::BilateralSmooth,
    IptKind::AdditiveNoise, IptKind::Thinning, IptKind::Pixellate,
    IptKind::Blur, IptKind::Sharpen, IptKind::Thicken,
};

inline std::string_view kind_name(IptKind k) {
    switch (k) {
        case IptKind::DoNothing: return "do_nothing";
        case IptKind::AdaptiveSmooth: return "adaptive_smooth";
        case IptKind::BilateralSmooth: return "bilateral_smooth";
        case IptKind::AdditiveNoise: return "additive_noise";
        case IptKind::Thinning: return "thinning";
        case IptKind::Pixellate: return "pixellate";
        case IptKind::Blur: return "blur";
        case IptKind::Sharpen: return "sharpen";
        case IptKind::Thicken: return "thicken";
    }
    return "unknown";
}

inline IptKind kind_from_name(std::string_view name) {
    for (IptKind k : kAllIptKinds) {
        if (kind_name(k) == name) return k;
    }
    throw ConfigError("unknown filter name: " + std::string(name));
}

/// Fixed per-kind parameters. Every value is echoed into the run config so
/// experiments replay exactly.
struct FilterParams {
    double blur_sigma = 1.0;             // 3x3 Gaussian
    double sharpen_amount = 1.0;         // unsharp-mask gain
    double bilateral_sigma_space = 2.0;  // 5x5 window
    double bilateral_sigma_range = 0.1;
    int bilateral_radius = 2;
    double noise_sigma = 0.05;           // i.i.d. Gaussian, clamped
    double binarize_threshold = 0.5;     // thinning / thickening foreground cut
    int pixellate_small_block = 2;       // images up to pixellate_small_limit px wide
    int pixellate_large_block = 4;
    int pixellate_small_limit = 28;

    bool operator==(const FilterParams&) const = default;
};

/// An ordered filter sequence; the phenotype a genome decodes to.
struct IptSequence {
    std::vector<IptKind> ops;

    std::size_t length() const { return ops.size(); }
    bool operator==(const IptSequence&) const = default;

    std::string describe() const {
        std::string s;
        for (std::size_t i = 0; i < ops.size(); ++i) {
            if (i) s += "+";
            s += kind_name(ops[i]);
        }
        return s;
    }
};

namespace detail {

inline Image convolve3x3(const Image& img, const std::array<double, 9>& k) {
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            int i = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    acc += k[i++] * img.at_clamped(x + dx, y + dy);
                }
            }
            out.at(x, y) = clamp01(acc);
        }
    }
    return out;
}

inline std::array<double, 9> gaussian3x3(double sigma) {
    std::array<double, 9> k{};
    double sum = 0.0;
    int i = 0;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            k[i] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            sum += k[i];
            ++i;
        }
    }
    for (double& v : k) v /= sum;
    return k;
}

inline Image blur(const Image& img, const FilterParams& p) {
    return convolve3x3(img, gaussian3x3(p.blur_sigma));
}

inline Image sharpen(const Image& img, const FilterParams& p) {
    const Image low = blur(img, p);
    Image out(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
        out.pixels[i] = clamp01(img.pixels[i] + p.sharpen_amount * (img.pixels[i] - low.pixels[i]));
    }
    return out;
}

inline Image bilateral_smooth(const Image& img, const FilterParams& p) {
    const int r = p.bilateral_radius;
    const double inv2ss = 1.0 / (2.0 * p.bilateral_sigma_space * p.bilateral_sigma_space);
    const double inv2sr = 1.0 / (2.0 * p.bilateral_sigma_range * p.bilateral_sigma_range);
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double center = img.at(x, y);
            double acc = 0.0, wsum = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const double v = img.at_clamped(x + dx, y + dy);
                    const double d = v - center;
                    const double w = std::exp(-(dx * dx + dy * dy) * inv2ss) * std::exp(-d * d * inv2sr);
                    acc += w * v;
                    wsum += w;
                }
            }
            out.at(x, y) = clamp01(acc / wsum);
        }
    }
    return out;
}

// Gradient-inverse weighted smoothing: neighbors close in intensity dominate,
// so edges survive while flat regions average out. One iteration.
inline Image adaptive_smooth(const Image& img) {
    constexpr double kDelta = 1.0 / 255.0;  // gradient floor
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double center = img.at(x, y);
            double acc = 0.0, wsum = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const double v = img.at_clamped(x + dx, y + dy);
                    const double w = 1.0 / std::max(std::abs(v - center), kDelta);
                    acc += w * v;
                    wsum += w;
                }
            }
            out.at(x, y) = clamp01(0.5 * center + 0.5 * acc / wsum);
        }
    }
    return out;
}

inline Image additive_noise(const Image& img, std::uint64_t seed, const FilterParams& p) {
    Rng rng(seed);
    Image out(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
        out.pixels[i] = clamp01(img.pixels[i] + p.noise_sigma * rng.gaussian());
    }
    return out;
}

inline Image pixellate(const Image& img, const FilterParams& p) {
    const int block = (img.width <= p.pixellate_small_limit) ? p.pixellate_small_block
                                                             : p.pixellate_large_block;
    Image out(img.width, img.height);
    for (int by = 0; by < img.height; by += block) {
        for (int bx = 0; bx < img.width; bx += block) {
            const int x1 = std::min(bx + block, img.width);
            const int y1 = std::min(by + block, img.height);
            double acc = 0.0;
            for (int y = by; y < y1; ++y) {
                for (int x = bx; x < x1; ++x) acc += img.at(x, y);
            }
            const double mean = acc / ((x1 - bx) * (y1 - by));
            for (int y = by; y < y1; ++y) {
                for (int x = bx; x < x1; ++x) out.at(x, y) = mean;
            }
        }
    }
    return out;
}

inline std::vector<std::uint8_t> binarize(const Image& img, double threshold) {
    std::vector<std::uint8_t> b(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) b[i] = img.pixels[i] >= threshold ? 1 : 0;
    return b;
}

// Zhang-Suen thinning on the binarized foreground, run to fixpoint. Pixels
// outside the raster count as background. Returns the skeleton as a 0/1 image.
inline Image thinning(const Image& img, const FilterParams& p) {
    const int w = img.width, h = img.height;
    std::vector<std::uint8_t> fg = binarize(img, p.binarize_threshold);
    auto at = [&](int x, int y) -> int {
        if (x < 0 || x >= w || y < 0 || y >= h) return 0;
        return fg[std::size_t(y) * w + x];
    };
    std::vector<std::size_t> to_delete;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            to_delete.clear();
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (!at(x, y)) continue;
                    // clockwise from north: p2..p9
                    const int p2 = at(x, y - 1), p3 = at(x + 1, y - 1), p4 = at(x + 1, y);
                    const int p5 = at(x + 1, y + 1), p6 = at(x, y + 1), p7 = at(x - 1, y + 1);
                    const int p8 = at(x - 1, y), p9 = at(x - 1, y - 1);
                    const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                    if (b < 2 || b > 6) continue;
                    const int seqv[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
                    int a = 0;
                    for (int i = 0; i < 8; ++i) {
                        if (seqv[i] == 0 && seqv[i + 1] == 1) ++a;
                    }
                    if (a != 1) continue;
                    const bool cond = pass == 0 ? (p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0)
                                                : (p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0);
                    if (cond) to_delete.push_back(std::size_t(y) * w + x);
                }
            }
            for (std::size_t i : to_delete) fg[i] = 0;
            if (!to_delete.empty()) changed = true;
        }
    }
    Image out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i) out.pixels[i] = fg[i] ? 1.0 : 0.0;
    return out;
}

// Morphological dilation of the binarized foreground with a 3x3 cross.
inline Image thicken(const Image& img, const FilterParams& p) {
    const int w = img.width, h = img.height;
    const std::vector<std::uint8_t> fg = binarize(img, p.binarize_threshold);
    auto at = [&](int x, int y) -> int {
        if (x < 0 || x >= w || y < 0 || y >= h) return 0;
        return fg[std::size_t(y) * w + x];
    };
    Image out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int v = at(x, y) | at(x - 1, y) | at(x + 1, y) | at(x, y - 1) | at(x, y + 1);
            out.at(x, y) = v ? 1.0 : 0.0;
        }
    }
    return out;
}

}  // namespace detail

/// Applies a single filter. Same output shape, intensities in [0, 1].
/// AdditiveNoise is a pure function of (img, seed); other kinds ignore seed.
inline Image apply_op(const Image& img, IptKind op, std::uint64_t seed,
                      const FilterParams& params = {}) {
    switch (op) {
        case IptKind::DoNothing: return img;
        case IptKind::AdaptiveSmooth: return detail::adaptive_smooth(img);
        case IptKind::BilateralSmooth: return detail::bilateral_smooth(img, params);
        case IptKind::AdditiveNoise: return detail::additive_noise(img, seed, params);
        case IptKind::Thinning: return detail::thinning(img, params);
        case IptKind::Pixellate: return detail::pixellate(img, params);
        case IptKind::Blur: return detail::blur(img, params);
        case IptKind::Sharpen: return detail::sharpen(img, params);
        case IptKind::Thicken: return detail::thicken(img, params);
    }
    throw ConfigError("unknown filter kind");
}

/// Left-to-right composition of apply_op. Stochastic ops at position i draw
/// their sub-seed from (seed, i), so the whole pipeline is a pure function of
/// (image, sequence, seed).
inline Image apply_sequence(const Image& img, const IptSequence& seq, std::uint64_t seed,
                            const FilterParams& params = {}) {
    Image cur = img;
    for (std::size_t i = 0; i < seq.ops.size(); ++i) {
        cur = apply_op(cur, seq.ops[i], derive_seed(seed, i), params);
    }
    return cur;
}

}  // namespace ipts
