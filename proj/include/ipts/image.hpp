#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ipts/error.hpp"

namespace ipts {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

/// Grayscale raster, row-major, intensities as reals in [0, 1]. All
/// processing works on this representation; 8-bit quantization happens only
/// at file I/O and in quantize_roundtrip().
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    std::size_t size() const { return pixels.size(); }

    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    /// clamp-to-edge access, used by all convolutions
    double at_clamped(int x, int y) const {
        if (x < 0) x = 0;
        if (x >= width) x = width - 1;
        if (y < 0) y = 0;
        if (y >= height) y = height - 1;
        return at(x, y);
    }

    bool same_shape(const Image& o) const { return width == o.width && height == o.height; }

    bool operator==(const Image& o) const = default;
};

/// BT.601 luma. Inputs are clamped to [0, 1] before combination, so the
/// result is always a valid intensity.
inline double to_grayscale(double r, double g, double b) {
    return 0.299 * clamp01(r) + 0.587 * clamp01(g) + 0.114 * clamp01(b);
}

/// Snaps every intensity to the 8-bit grid: round(i*255)/255. Models writing
/// the image to an 8-bit file and reading it back; idempotent.
inline Image quantize_roundtrip(const Image& img) {
    Image out = img;
    for (double& p : out.pixels) {
        p = std::round(clamp01(p) * 255.0) / 255.0;
    }
    return out;
}

/// Where a sample came from: the clean dataset or an attack run.
struct Provenance {
    std::string attack;    // empty for clean samples
    double epsilon = 0.0;  // perturbation budget used, 0 for clean

    bool is_attack() const { return !attack.empty(); }

    static Provenance clean() { return {}; }
    static Provenance attacked(std::string name, double eps) {
        return Provenance{std::move(name), eps};
    }

    bool operator==(const Provenance&) const = default;
};

struct LabeledSample {
    Image image;
    int label = 0;
    Provenance provenance;
    std::string id;  // filename or record index, for split manifests
};

/// Ordered list of samples sharing one image shape.
struct Corpus {
    std::string name;
    int num_classes = 0;
    std::vector<LabeledSample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    int width() const { return samples.empty() ? 0 : samples.front().image.width; }
    int height() const { return samples.empty() ? 0 : samples.front().image.height; }

    /// Checks the shape and label invariants, throwing on violation.
    void validate() const {
        for (const auto& s : samples) {
            if (!s.image.same_shape(samples.front().image)) {
                throw MixedDimensions("corpus '" + name + "': images have differing dimensions");
            }
            if (s.label < 0 || s.label >= num_classes) {
                throw Error("corpus '" + name + "': label " + std::to_string(s.label) +
                            " outside [0, " + std::to_string(num_classes) + ")");
            }
        }
    }
};

}  // namespace ipts
