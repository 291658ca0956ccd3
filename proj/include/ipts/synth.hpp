#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "ipts/image.hpp"
#include "ipts/rng.hpp"

namespace ipts {

namespace detail {

// 5x7 digit glyphs, one row per string.
inline const std::array<std::array<const char*, 7>, 10>& digit_font() {
    static const std::array<std::array<const char*, 7>, 10> font = {{
        {"01110", "10001", "10011", "10101", "11001", "10001", "01110"},  // 0
        {"00100", "01100", "00100", "00100", "00100", "00100", "01110"},  // 1
        {"01110", "10001", "00001", "00010", "00100", "01000", "11111"},  // 2
        {"11111", "00010", "00100", "00010", "00001", "10001", "01110"},  // 3
        {"00010", "00110", "01010", "10010", "11111", "00010", "00010"},  // 4
        {"11111", "10000", "11110", "00001", "00001", "10001", "01110"},  // 5
        {"00110", "01000", "10000", "11110", "10001", "10001", "01110"},  // 6
        {"11111", "00001", "00010", "00100", "01000", "01000", "01000"},  // 7
        {"01110", "10001", "10001", "01110", "10001", "10001", "01110"},  // 8
        {"01110", "10001", "10001", "01111", "00001", "00010", "01100"},  // 9
    }};
    return font;
}

inline double glyph_bilinear(int digit, double u, double v) {
    const auto& rows = digit_font()[digit];
    auto texel = [&](int iu, int iv) -> double {
        if (iu < 0 || iu >= 5 || iv < 0 || iv >= 7) return 0.0;
        return rows[iv][iu] == '1' ? 1.0 : 0.0;
    };
    const int iu = static_cast<int>(std::floor(u));
    const int iv = static_cast<int>(std::floor(v));
    const double fu = u - iu, fv = v - iv;
    return texel(iu, iv) * (1 - fu) * (1 - fv) + texel(iu + 1, iv) * fu * (1 - fv) +
           texel(iu, iv + 1) * (1 - fu) * fv + texel(iu + 1, iv + 1) * fu * fv;
}

}  // namespace detail

/// One rendered digit: the glyph is scaled, rotated and shifted with seeded
/// jitter, lit with a random amplitude, and snapped to the 8-bit grid like
/// any file-backed dataset would be. The background stays exactly zero, as
/// in scanned-digit datasets; difficulty comes from the geometric jitter.
inline Image render_digit(int digit, int width, int height, Rng& rng) {
    const double scale = rng.uniform(2.6, 3.4);
    const double theta = rng.uniform(-0.22, 0.22);
    const double tx = rng.uniform(-2.5, 2.5);
    const double ty = rng.uniform(-2.5, 2.5);
    const double amp = rng.uniform(0.75, 1.0);

    const double cx = width / 2.0 + tx;
    const double cy = height / 2.0 + ty;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);

    Image img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            // inverse transform into glyph space (glyph center at (2.5, 3.5))
            const double dx = (x + 0.5 - cx), dy = (y + 0.5 - cy);
            const double gx = (cos_t * dx + sin_t * dy) / scale + 2.5;
            const double gy = (-sin_t * dx + cos_t * dy) / scale + 3.5;
            img.at(x, y) = clamp01(amp * detail::glyph_bilinear(digit, gx - 0.5, gy - 0.5));
        }
    }
    return quantize_roundtrip(img);
}

/// Deterministic stand-in dataset: balanced classes of jittered digit
/// renderings, 28x28 by default. Used by demos and tests whenever no real
/// IDX dataset is on disk.
inline Corpus make_synthetic_digits(std::size_t count, std::uint64_t seed, int width = 28,
                                    int height = 28, const std::string& name = "synthetic") {
    Corpus corpus;
    corpus.name = name;
    corpus.num_classes = 10;
    corpus.samples.reserve(count);
    Rng rng(derive_seed(seed, "synth"));
    for (std::size_t i = 0; i < count; ++i) {
        LabeledSample s;
        s.label = static_cast<int>(i % 10);
        s.image = render_digit(s.label, width, height, rng);
        s.id = std::to_string(i);
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

}  // namespace ipts
