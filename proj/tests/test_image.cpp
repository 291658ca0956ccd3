#include <catch_amalgamated.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ipts/image.hpp"
#include "ipts/image_io.hpp"
#include "ipts/rng.hpp"

using namespace ipts;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ipts_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

std::vector<unsigned char> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                      unsigned char fill) {
    std::vector<unsigned char> v;
    push_u32(v, 0x00000803);
    push_u32(v, n);
    push_u32(v, rows);
    push_u32(v, cols);
    for (std::uint32_t i = 0; i < n * rows * cols; ++i) v.push_back(fill);
    return v;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels) {
    std::vector<unsigned char> v;
    push_u32(v, 0x00000801);
    push_u32(v, static_cast<std::uint32_t>(labels.size()));
    v.insert(v.end(), labels.begin(), labels.end());
    return v;
}

// Minimal second IDX reader, written independently of the library parser, to
// cross-check record layout on real dataset files.
int reference_first_label(const std::string& label_path) {
    std::ifstream in(label_path, std::ios::binary);
    in.seekg(8);
    return in.get();
}

// PIL-generated fixtures.
// gray 4x3, pixels row-major: 0,51,102,153, 204,255,10,20, 30,40,50,60
static const unsigned char kGrayPng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44,
    0x52, 0x00, 0x00, 0x00, 0x04, 0x00, 0x00, 0x00, 0x03, 0x08, 0x00, 0x00, 0x00, 0x00, 0x91,
    0x9f, 0xf1, 0x1a, 0x00, 0x00, 0x00, 0x17, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x64,
    0x30, 0x36, 0x36, 0x66, 0x38, 0xf3, 0x9f, 0x4b, 0x84, 0x51, 0x8e, 0x8b, 0x8b, 0x0b, 0x00,
    0x17, 0xe5, 0x02, 0xc1, 0x1d, 0xf6, 0xbc, 0x39, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e,
    0x44, 0xae, 0x42, 0x60, 0x82};
// rgb 2x2: (255,0,0) (0,255,0) / (0,0,255) (255,255,255)
static const unsigned char kRgbPng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44,
    0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0x08, 0x02, 0x00, 0x00, 0x00, 0xfd,
    0xd4, 0x9a, 0x73, 0x00, 0x00, 0x00, 0x16, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8,
    0xcf, 0xc0, 0xc0, 0xf0, 0x9f, 0x81, 0x91, 0x81, 0xe1, 0xff, 0xff, 0xff, 0x0c, 0x00, 0x1e,
    0xf6, 0x04, 0xfd, 0x09, 0xed, 0x34, 0x3e, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44,
    0xae, 0x42, 0x60, 0x82};
// 1-bit palette png; unsupported by design
static const unsigned char kPalettePng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44,
    0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0x01, 0x03, 0x00, 0x00, 0x00, 0x48,
    0x78, 0x9f, 0x67, 0x00, 0x00, 0x00, 0x03, 0x50, 0x4c, 0x54, 0x45, 0x00, 0x00, 0x00, 0xa7,
    0x7a, 0x3d, 0xda, 0x00, 0x00, 0x00, 0x0c, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x70,
    0x60, 0x38, 0x00, 0x00, 0x01, 0x84, 0x01, 0x01, 0x0a, 0x7f, 0x90, 0x50, 0x00, 0x00, 0x00,
    0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

}  // namespace

TEST_CASE("to_grayscale basics") {
    CHECK(to_grayscale(1, 1, 1) == Catch::Approx(1.0));
    CHECK(to_grayscale(0, 0, 0) == 0.0);
    CHECK(to_grayscale(1, 0, 0) == Catch::Approx(0.299));
    // out-of-range inputs are clamped first
    CHECK(to_grayscale(2.0, -1.0, 0.0) == Catch::Approx(0.299));
}

TEST_CASE("to_grayscale is monotone per channel and stays in [0,1]") {
    Rng rng(42);
    for (int i = 0; i < 200; ++i) {
        const double r = rng.uniform(), g = rng.uniform(), b = rng.uniform();
        const double base = to_grayscale(r, g, b);
        CHECK(base >= 0.0);
        CHECK(base <= 1.0);
        const double d = rng.uniform() * (1.0 - r);
        CHECK(to_grayscale(r + d, g, b) >= base);
    }
}

TEST_CASE("quantize_roundtrip") {
    SECTION("fixed point on the 1/255 grid") {
        Image img(3, 1);
        img.pixels = {0.0, 128.0 / 255.0, 1.0};
        CHECK(quantize_roundtrip(img) == img);
    }
    SECTION("rounding rule") {
        Image img(1, 1);
        img.pixels = {0.5001};
        CHECK(quantize_roundtrip(img).pixels[0] == 128.0 / 255.0);
    }
    SECTION("idempotent") {
        Rng rng(3);
        Image img(9, 7);
        for (double& p : img.pixels) p = rng.uniform();
        const Image once = quantize_roundtrip(img);
        CHECK(quantize_roundtrip(once) == once);
    }
    SECTION("perturbations below half a quantization step vanish") {
        // a grid-aligned image nudged by less than 1/510 per pixel snaps back
        Rng rng(4);
        Image clean(8, 8);
        for (double& p : clean.pixels) {
            p = static_cast<double>(rng.below(256)) / 255.0;
        }
        Image attacked = clean;
        for (std::size_t i = 0; i < attacked.pixels.size(); ++i) {
            const double eps = (1.0 / 510.0) * 0.9;
            double v = attacked.pixels[i] + (rng.bernoulli(0.5) ? eps : -eps);
            attacked.pixels[i] = clamp01(v);
        }
        // clamping at the ends keeps |delta| <= eps, so rounding restores clean
        CHECK(quantize_roundtrip(attacked) == quantize_roundtrip(clean));
    }
}

TEST_CASE("load_idx parses the record layout") {
    const auto dir = temp_dir("idx");
    write_bytes(dir / "img", idx_images(2, 28, 28, 128));
    write_bytes(dir / "lab", idx_labels({3, 7}));
    const Corpus c = load_idx((dir / "img").string(), (dir / "lab").string());
    REQUIRE(c.size() == 2);
    CHECK(c.width() == 28);
    CHECK(c.height() == 28);
    CHECK(c.samples[0].label == 3);
    CHECK(c.samples[1].label == 7);
    CHECK(c.samples[0].image.pixels[0] == 128.0 / 255.0);
}

TEST_CASE("load_idx error paths") {
    const auto dir = temp_dir("idx_err");
    SECTION("empty file is truncated") {
        write_bytes(dir / "img", {});
        write_bytes(dir / "lab", idx_labels({1}));
        CHECK_THROWS_AS(load_idx((dir / "img").string(), (dir / "lab").string()), TruncatedFile);
    }
    SECTION("wrong magic") {
        auto img = idx_images(1, 2, 2, 0);
        img[3] = 0x99;
        write_bytes(dir / "img", img);
        write_bytes(dir / "lab", idx_labels({1}));
        CHECK_THROWS_AS(load_idx((dir / "img").string(), (dir / "lab").string()), BadMagic);
    }
    SECTION("count mismatch") {
        write_bytes(dir / "img", idx_images(2, 2, 2, 0));
        write_bytes(dir / "lab", idx_labels({1}));
        CHECK_THROWS_AS(load_idx((dir / "img").string(), (dir / "lab").string()), LengthMismatch);
    }
    SECTION("pixel data truncated") {
        auto img = idx_images(2, 2, 2, 0);
        img.resize(img.size() - 3);
        write_bytes(dir / "img", img);
        write_bytes(dir / "lab", idx_labels({1, 2}));
        CHECK_THROWS_AS(load_idx((dir / "img").string(), (dir / "lab").string()), TruncatedFile);
    }
}

TEST_CASE("real MNIST first label matches an independent reader", "[mnist]") {
    const char* env = std::getenv("IPTS_MNIST_DIR");
    if (!env) {
        SKIP("IPTS_MNIST_DIR not set");
    }
    const fs::path dir(env);
    const auto images = dir / "train-images-idx3-ubyte";
    const auto labels = dir / "train-labels-idx1-ubyte";
    if (!fs::exists(images) || !fs::exists(labels)) {
        SKIP("MNIST training files not present");
    }
    const Corpus c = load_idx(images.string(), labels.string());
    REQUIRE(c.size() == 60000);
    CHECK(c.samples[0].label == reference_first_label(labels.string()));
}

TEST_CASE("PGM round-trip is identity on the 1/255 grid") {
    const auto dir = temp_dir("pgm");
    Rng rng(11);
    Image img(13, 5);
    for (double& p : img.pixels) p = rng.uniform();
    const Image grid = quantize_roundtrip(img);
    save_pgm(grid, (dir / "a.pgm").string());
    const Image back = load_pgm((dir / "a.pgm").string());
    CHECK(back == grid);
}

TEST_CASE("PGM constant-value scaling") {
    const auto dir = temp_dir("pgm_const");
    std::vector<unsigned char> bytes = {'P', '5', '\n', '3', ' ', '2', '\n',
                                        '2', '5', '5', '\n'};
    for (int i = 0; i < 6; ++i) bytes.push_back(128);
    write_bytes(dir / "c.pgm", bytes);
    const Image img = load_pgm((dir / "c.pgm").string());
    REQUIRE(img.width == 3);
    REQUIRE(img.height == 2);
    for (double p : img.pixels) CHECK(p == 128.0 / 255.0);
}

TEST_CASE("PGM rejects other formats") {
    const auto dir = temp_dir("pgm_bad");
    write_bytes(dir / "p2.pgm", {'P', '2', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n', '0'});
    CHECK_THROWS_AS(load_pgm((dir / "p2.pgm").string()), UnsupportedFormat);

    write_bytes(dir / "short.pgm",
                {'P', '5', '\n', '4', ' ', '4', '\n', '2', '5', '5', '\n', 1, 2, 3});
    CHECK_THROWS_AS(load_pgm((dir / "short.pgm").string()), TruncatedFile);
}

TEST_CASE("PNG decoding") {
    const auto dir = temp_dir("png");
    SECTION("8-bit grayscale") {
        write_bytes(dir / "g.png", {kGrayPng, kGrayPng + sizeof(kGrayPng)});
        const Image img = load_png((dir / "g.png").string());
        REQUIRE(img.width == 4);
        REQUIRE(img.height == 3);
        const std::vector<int> expected = {0, 51, 102, 153, 204, 255, 10, 20, 30, 40, 50, 60};
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(img.pixels[i] == Catch::Approx(expected[i] / 255.0));
        }
    }
    SECTION("RGB converts through BT.601 luma") {
        write_bytes(dir / "c.png", {kRgbPng, kRgbPng + sizeof(kRgbPng)});
        const Image img = load_png((dir / "c.png").string());
        REQUIRE(img.width == 2);
        REQUIRE(img.height == 2);
        CHECK(img.pixels[0] == Catch::Approx(0.299));
        CHECK(img.pixels[1] == Catch::Approx(0.587));
        CHECK(img.pixels[2] == Catch::Approx(0.114));
        CHECK(img.pixels[3] == Catch::Approx(1.0));
    }
    SECTION("palette PNG rejected") {
        write_bytes(dir / "p.png", {kPalettePng, kPalettePng + sizeof(kPalettePng)});
        CHECK_THROWS_AS(load_png((dir / "p.png").string()), UnsupportedFormat);
    }
    SECTION("truncated PNG rejected") {
        std::vector<unsigned char> cut(kGrayPng, kGrayPng + sizeof(kGrayPng) - 20);
        write_bytes(dir / "cut.png", cut);
        CHECK_THROWS_AS(load_png((dir / "cut.png").string()), IoError);
    }
}

TEST_CASE("load_image_dir with sidecar labels") {
    const auto dir = temp_dir("dir_sidecar");
    Image a(28, 28, 0.25), b(28, 28, 0.5), c(28, 28, 0.75);
    save_pgm(a, (dir / "b_second.pgm").string());
    save_pgm(b, (dir / "a_first.pgm").string());
    save_pgm(c, (dir / "c_third.pgm").string());
    std::ofstream labels(dir / "labels.tsv");
    labels << "a_first.pgm\t1\nb_second.pgm\t2\nc_third.pgm\t3\n";
    labels.close();
    const Corpus corpus = load_image_dir(dir.string(), (dir / "labels.tsv").string());
    REQUIRE(corpus.size() == 3);
    // lexicographic filename order, not creation order
    CHECK(corpus.samples[0].id == "a_first.pgm");
    CHECK(corpus.samples[0].label == 1);
    CHECK(corpus.samples[1].id == "b_second.pgm");
    CHECK(corpus.samples[2].id == "c_third.pgm");
    CHECK(corpus.num_classes == 4);
}

TEST_CASE("load_image_dir error paths") {
    SECTION("mixed dimensions") {
        const auto dir = temp_dir("dir_mixed");
        save_pgm(Image(28, 28, 0.1), (dir / "a.pgm").string());
        save_pgm(Image(32, 32, 0.1), (dir / "b.pgm").string());
        std::ofstream labels(dir / "labels.tsv");
        labels << "a.pgm\t0\nb.pgm\t1\n";
        labels.close();
        CHECK_THROWS_AS(load_image_dir(dir.string(), (dir / "labels.tsv").string()),
                        MixedDimensions);
    }
    SECTION("missing label") {
        const auto dir = temp_dir("dir_missing");
        save_pgm(Image(8, 8, 0.1), (dir / "a.pgm").string());
        save_pgm(Image(8, 8, 0.1), (dir / "b.pgm").string());
        std::ofstream labels(dir / "labels.tsv");
        labels << "a.pgm\t0\n";
        labels.close();
        CHECK_THROWS_AS(load_image_dir(dir.string(), (dir / "labels.tsv").string()), MissingLabel);
    }
}

TEST_CASE("load_image_dir with per-class subdirectories") {
    const auto dir = temp_dir("dir_classes");
    fs::create_directories(dir / "0");
    fs::create_directories(dir / "7");
    save_pgm(Image(8, 8, 0.2), (dir / "0" / "x.pgm").string());
    save_pgm(Image(8, 8, 0.4), (dir / "7" / "y.pgm").string());
    const Corpus corpus = load_image_dir(dir.string());
    REQUIRE(corpus.size() == 2);
    CHECK(corpus.samples[0].label == 0);
    CHECK(corpus.samples[1].label == 7);
    CHECK(corpus.num_classes == 8);
}

TEST_CASE("save_corpus_pgm round-trips through load_image_dir") {
    const auto dir = temp_dir("corpus_rt");
    Corpus corpus;
    corpus.name = "rt";
    corpus.num_classes = 10;
    Rng rng(5);
    for (int i = 0; i < 4; ++i) {
        LabeledSample s;
        s.image = Image(6, 6);
        for (double& p : s.image.pixels) p = rng.uniform();
        s.image = quantize_roundtrip(s.image);
        s.label = i % 10;
        s.id = std::to_string(i);
        corpus.samples.push_back(std::move(s));
    }
    save_corpus_pgm(corpus, dir.string(), "adv");
    const Corpus back =
        load_image_dir(dir.string(), (dir / kLabelsSidecarName).string());
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(back.samples[i].image == corpus.samples[i].image);
        CHECK(back.samples[i].label == corpus.samples[i].label);
    }
}
