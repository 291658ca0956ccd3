#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "ipts/error.hpp"
#include "ipts/image.hpp"

namespace ipts {

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

struct ByteReader {
    const std::vector<unsigned char>& bytes;
    std::size_t pos = 0;
    std::string source;

    std::uint32_t u32_be() {
        if (pos + 4 > bytes.size()) throw TruncatedFile("unexpected end of file: " + source);
        std::uint32_t v = (std::uint32_t(bytes[pos]) << 24) | (std::uint32_t(bytes[pos + 1]) << 16) |
                          (std::uint32_t(bytes[pos + 2]) << 8) | std::uint32_t(bytes[pos + 3]);
        pos += 4;
        return v;
    }

    const unsigned char* take(std::size_t n) {
        if (pos + n > bytes.size()) throw TruncatedFile("unexpected end of file: " + source);
        const unsigned char* p = bytes.data() + pos;
        pos += n;
        return p;
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// IDX (big-endian; magic 0x00000803 for image files, 0x00000801 for labels)
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Loads a paired IDX image/label file set. Byte intensities map to b/255.
inline Corpus load_idx(const std::string& image_path, const std::string& label_path,
                       const std::string& name = "idx") {
    const auto img_bytes = detail::read_file_bytes(image_path);
    const auto lab_bytes = detail::read_file_bytes(label_path);
    detail::ByteReader ir{img_bytes, 0, image_path};
    detail::ByteReader lr{lab_bytes, 0, label_path};

    const std::uint32_t img_magic = ir.u32_be();
    if (img_magic != kIdxImagesMagic) {
        throw BadMagic("bad IDX image magic in " + image_path);
    }
    const std::uint32_t n_images = ir.u32_be();
    const std::uint32_t rows = ir.u32_be();
    const std::uint32_t cols = ir.u32_be();

    const std::uint32_t lab_magic = lr.u32_be();
    if (lab_magic != kIdxLabelsMagic) {
        throw BadMagic("bad IDX label magic in " + label_path);
    }
    const std::uint32_t n_labels = lr.u32_be();
    if (n_images != n_labels) {
        throw LengthMismatch("IDX image count " + std::to_string(n_images) +
                             " != label count " + std::to_string(n_labels));
    }

    Corpus corpus;
    corpus.name = name;
    corpus.samples.reserve(n_images);
    const std::size_t npix = std::size_t(rows) * cols;
    int max_label = -1;
    for (std::uint32_t i = 0; i < n_images; ++i) {
        const unsigned char* px = ir.take(npix);
        const unsigned char* lb = lr.take(1);
        LabeledSample s;
        s.image.width = static_cast<int>(cols);
        s.image.height = static_cast<int>(rows);
        s.image.pixels.resize(npix);
        for (std::size_t k = 0; k < npix; ++k) s.image.pixels[k] = px[k] / 255.0;
        s.label = *lb;
        s.id = std::to_string(i);
        max_label = std::max(max_label, s.label);
        corpus.samples.push_back(std::move(s));
    }
    corpus.num_classes = max_label + 1;
    return corpus;
}

/// Writes a corpus as an IDX image/label file pair (intensities quantized to
/// 8 bits).
inline void save_idx(const Corpus& corpus, const std::string& image_path,
                     const std::string& label_path) {
    std::ofstream img(image_path, std::ios::binary);
    std::ofstream lab(label_path, std::ios::binary);
    if (!img || !lab) throw IoError("cannot open IDX output files");
    auto put_u32 = [](std::ofstream& out, std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    put_u32(img, kIdxImagesMagic);
    put_u32(img, static_cast<std::uint32_t>(corpus.size()));
    put_u32(img, static_cast<std::uint32_t>(corpus.height()));
    put_u32(img, static_cast<std::uint32_t>(corpus.width()));
    put_u32(lab, kIdxLabelsMagic);
    put_u32(lab, static_cast<std::uint32_t>(corpus.size()));
    for (const auto& s : corpus.samples) {
        for (double p : s.image.pixels) {
            const unsigned char b = static_cast<unsigned char>(std::lround(clamp01(p) * 255.0));
            img.put(static_cast<char>(b));
        }
        lab.put(static_cast<char>(static_cast<unsigned char>(s.label)));
    }
}

// ---------------------------------------------------------------------------
// PGM (binary P5, maxval 255) — the bit-exact interchange format
// ---------------------------------------------------------------------------

namespace detail {

inline int pgm_token(ByteReader& r) {
    // skip whitespace and '#' comments, then parse a decimal token
    while (true) {
        if (r.pos >= r.bytes.size()) throw TruncatedFile("PGM header truncated: " + r.source);
        const unsigned char c = r.bytes[r.pos];
        if (c == '#') {
            while (r.pos < r.bytes.size() && r.bytes[r.pos] != '\n') ++r.pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++r.pos;
        } else {
            break;
        }
    }
    int v = 0;
    bool any = false;
    while (r.pos < r.bytes.size() && r.bytes[r.pos] >= '0' && r.bytes[r.pos] <= '9') {
        v = v * 10 + (r.bytes[r.pos] - '0');
        ++r.pos;
        any = true;
    }
    if (!any) throw UnsupportedFormat("malformed PGM header: " + r.source);
    return v;
}

}  // namespace detail

inline Image load_pgm(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw UnsupportedFormat("not a binary PGM (P5) file: " + path);
    }
    detail::ByteReader r{bytes, 2, path};
    const int w = detail::pgm_token(r);
    const int h = detail::pgm_token(r);
    const int maxval = detail::pgm_token(r);
    if (maxval != 255) throw UnsupportedFormat("PGM maxval must be 255: " + path);
    ++r.pos;  // single whitespace byte after maxval
    const unsigned char* px = r.take(std::size_t(w) * h);
    Image img(w, h);
    for (std::size_t k = 0; k < img.size(); ++k) img.pixels[k] = px[k] / 255.0;
    return img;
}

inline void save_pgm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open PGM output: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double p : img.pixels) {
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(clamp01(p) * 255.0))));
    }
}

// ---------------------------------------------------------------------------
// PNG (read-only: 8-bit grayscale or RGB, non-interlaced)
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<unsigned char> zlib_inflate(const std::vector<unsigned char>& in,
                                               const std::string& source) {
    std::vector<unsigned char> out;
    out.resize(std::max<std::size_t>(in.size() * 4, 1024));
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw IoError("zlib init failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::size_t written = 0;
    int ret = Z_OK;
    do {
        if (written == out.size()) out.resize(out.size() * 2);
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw UnsupportedFormat("corrupt PNG stream: " + source);
        }
        written = out.size() - zs.avail_out;
    } while (ret != Z_STREAM_END);
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace detail

inline Image load_png(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (bytes.size() < 8 || !std::equal(sig, sig + 8, bytes.begin())) {
        throw UnsupportedFormat("not a PNG file: " + path);
    }
    detail::ByteReader r{bytes, 8, path};
    int width = 0, height = 0, bit_depth = 0, color_type = 0;
    std::vector<unsigned char> idat;
    bool saw_ihdr = false, saw_iend = false;
    while (!saw_iend) {
        const std::uint32_t len = r.u32_be();
        const unsigned char* type = r.take(4);
        const std::string chunk(reinterpret_cast<const char*>(type), 4);
        const unsigned char* data = r.take(len);
        r.take(4);  // CRC, unchecked
        if (chunk == "IHDR") {
            width = (data[0] << 24) | (data[1] << 16) | (data[2] << 8) | data[3];
            height = (data[4] << 24) | (data[5] << 16) | (data[6] << 8) | data[7];
            bit_depth = data[8];
            color_type = data[9];
            const int interlace = data[12];
            if (bit_depth != 8 || (color_type != 0 && color_type != 2) || interlace != 0) {
                throw UnsupportedFormat("PNG must be 8-bit gray or RGB, non-interlaced: " + path);
            }
            saw_ihdr = true;
        } else if (chunk == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (chunk == "IEND") {
            saw_iend = true;
        }
        // ancillary chunks are skipped
    }
    if (!saw_ihdr || width <= 0 || height <= 0) throw UnsupportedFormat("PNG missing IHDR: " + path);

    const int channels = (color_type == 2) ? 3 : 1;
    const std::size_t stride = std::size_t(width) * channels;
    const auto raw = detail::zlib_inflate(idat, path);
    if (raw.size() < (stride + 1) * height) throw TruncatedFile("PNG pixel data truncated: " + path);

    // undo per-scanline filters
    std::vector<unsigned char> prev(stride, 0), cur(stride, 0);
    Image img(width, height);
    std::size_t pos = 0;
    for (int y = 0; y < height; ++y) {
        const unsigned char filter = raw[pos++];
        for (std::size_t i = 0; i < stride; ++i) {
            const int x = raw[pos + i];
            const int a = (i >= std::size_t(channels)) ? cur[i - channels] : 0;
            const int b = prev[i];
            const int c = (i >= std::size_t(channels)) ? prev[i - channels] : 0;
            int v = 0;
            switch (filter) {
                case 0: v = x; break;
                case 1: v = x + a; break;
                case 2: v = x + b; break;
                case 3: v = x + (a + b) / 2; break;
                case 4: v = x + detail::paeth(a, b, c); break;
                default: throw UnsupportedFormat("unknown PNG filter type: " + path);
            }
            cur[i] = static_cast<unsigned char>(v & 0xff);
        }
        pos += stride;
        for (int x = 0; x < width; ++x) {
            if (channels == 1) {
                img.at(x, y) = cur[x] / 255.0;
            } else {
                img.at(x, y) = to_grayscale(cur[3 * x] / 255.0, cur[3 * x + 1] / 255.0,
                                            cur[3 * x + 2] / 255.0);
            }
        }
        std::swap(prev, cur);
    }
    return img;
}

// ---------------------------------------------------------------------------
// Directory corpora (PGM/PNG files + labels sidecar or per-class subdirs)
// ---------------------------------------------------------------------------

inline constexpr const char* kLabelsSidecarName = "labels.tsv";

/// Parses a `filename<TAB>label` sidecar.
inline std::map<std::string, int> load_labels_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open labels file: " + path);
    std::map<std::string, int> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw UnsupportedFormat("labels line missing tab: " + line);
        try {
            labels[line.substr(0, tab)] = std::stoi(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw UnsupportedFormat("labels line has a non-numeric label: " + line);
        }
    }
    return labels;
}

inline void save_labels_sidecar(const std::map<std::string, int>& labels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open labels output: " + path);
    for (const auto& [name, label] : labels) out << name << '\t' << label << '\n';
}

namespace detail {

inline bool has_image_extension(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".pgm" || ext == ".png";
}

inline Image load_any_image(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".pgm") return load_pgm(p.string());
    if (ext == ".png") return load_png(p.string());
    throw UnsupportedFormat("unsupported image extension: " + p.string());
}

}  // namespace detail

/// Loads a single image file, dispatching on the extension (.pgm / .png).
inline Image load_image(const std::string& path) {
    return detail::load_any_image(std::filesystem::path(path));
}

/// Loads every PGM/PNG image in a directory, in lexicographic filename order.
/// Labels come from a `filename<TAB>label` sidecar when `label_file` is
/// non-empty, otherwise from integer-named per-class subdirectories.
inline Corpus load_image_dir(const std::string& dir, const std::string& label_file = "",
                             Provenance provenance = Provenance::clean()) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);

    Corpus corpus;
    corpus.name = fs::path(dir).filename().string();
    std::vector<std::pair<std::string, int>> entries;  // relative name -> label

    if (!label_file.empty()) {
        const auto labels = load_labels_sidecar(label_file);
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.is_regular_file() && detail::has_image_extension(e.path())) {
                names.push_back(e.path().filename().string());
            }
        }
        std::sort(names.begin(), names.end());
        for (const auto& n : names) {
            const auto it = labels.find(n);
            if (it == labels.end()) throw MissingLabel("no label for file: " + n);
            entries.emplace_back(n, it->second);
        }
    } else {
        for (const auto& e : fs::directory_iterator(dir)) {
            if (!e.is_directory()) continue;
            const std::string cls = e.path().filename().string();
            int label = 0;
            try {
                std::size_t used = 0;
                label = std::stoi(cls, &used);
                if (used != cls.size()) continue;
            } catch (const std::exception&) {
                continue;  // non-numeric directory: not a class
            }
            for (const auto& f : fs::directory_iterator(e.path())) {
                if (f.is_regular_file() && detail::has_image_extension(f.path())) {
                    entries.emplace_back(cls + "/" + f.path().filename().string(), label);
                }
            }
        }
        std::sort(entries.begin(), entries.end());
        if (entries.empty()) throw MissingLabel("no labeled images found under: " + dir);
    }

    int max_label = -1;
    for (const auto& [rel, label] : entries) {
        LabeledSample s;
        s.image = detail::load_any_image(fs::path(dir) / rel);
        s.label = label;
        s.provenance = provenance;
        s.id = rel;
        if (!corpus.samples.empty() && !s.image.same_shape(corpus.samples.front().image)) {
            throw MixedDimensions("image " + rel + " has different dimensions than the rest");
        }
        max_label = std::max(max_label, label);
        corpus.samples.push_back(std::move(s));
    }
    corpus.num_classes = max_label + 1;
    return corpus;
}

/// Writes a corpus as zero-padded PGM files plus a labels sidecar, so other
/// tools can consume generated corpora.
inline void save_corpus_pgm(const Corpus& corpus, const std::string& dir,
                            const std::string& prefix = "img") {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::map<std::string, int> labels;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "_%05zu.pgm", i);
        const std::string name = prefix + buf;
        save_pgm(corpus.samples[i].image, (fs::path(dir) / name).string());
        labels[name] = corpus.samples[i].label;
    }
    save_labels_sidecar(labels, (fs::path(dir) / kLabelsSidecarName).string());
}

}  // namespace ipts
