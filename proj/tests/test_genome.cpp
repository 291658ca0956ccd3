#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "ipts/genome.hpp"

using namespace ipts;

namespace {

// all bit strings of the given gene count under a codec
std::vector<std::string> all_bit_strings(const Codec& codec, std::size_t genes) {
    const std::size_t total_bits = genes * codec.bits_per_gene;
    std::vector<std::string> out;
    for (std::size_t v = 0; v < (std::size_t(1) << total_bits); ++v) {
        std::string bits(total_bits, '0');
        for (std::size_t b = 0; b < total_bits; ++b) {
            if ((v >> (total_bits - 1 - b)) & 1) bits[b] = '1';
        }
        out.push_back(bits);
    }
    return out;
}

}  // namespace

TEST_CASE("default codec tables") {
    const Codec c2 = codec_2bit();
    c2.validate();
    CHECK(decode({"00", c2}).ops == std::vector<IptKind>{IptKind::DoNothing});
    CHECK(decode({"01", c2}).ops == std::vector<IptKind>{IptKind::AdaptiveSmooth});
    CHECK(decode({"10", c2}).ops == std::vector<IptKind>{IptKind::BilateralSmooth});
    CHECK(decode({"11", c2}).ops == std::vector<IptKind>{IptKind::AdditiveNoise});

    const Codec c3 = codec_3bit();
    c3.validate();
    CHECK(decode({"100", c3}).ops == std::vector<IptKind>{IptKind::Thinning});
    CHECK(decode({"101", c3}).ops == std::vector<IptKind>{IptKind::Pixellate});
    CHECK(decode({"110", c3}).ops == std::vector<IptKind>{IptKind::Blur});
    CHECK(decode({"111", c3}).ops == std::vector<IptKind>{IptKind::Sharpen});
}

TEST_CASE("decoding known sequences") {
    // two noise steps then an identity gene
    const IptSequence s = decode({"111100", codec_2bit()});
    CHECK(s.ops == std::vector<IptKind>{IptKind::AdditiveNoise, IptKind::AdditiveNoise,
                                        IptKind::DoNothing});
    // sharpen twice, blur, then bilateral smooth
    const IptSequence t = decode({"111111110010", codec_3bit()});
    CHECK(t.ops == std::vector<IptKind>{IptKind::Sharpen, IptKind::Sharpen, IptKind::Blur,
                                        IptKind::BilateralSmooth});
}

TEST_CASE("encode maps ops back to bit patterns") {
    IptSequence s;
    s.ops = {IptKind::AdditiveNoise};
    CHECK(encode(s, codec_2bit()).bits == "11");

    IptSequence bad;
    bad.ops = {IptKind::Thinning};
    CHECK_THROWS_AS(encode(bad, codec_2bit()), UnencodableOp);
}

TEST_CASE("decode rejects bad lengths") {
    CHECK_THROWS_AS(decode({"0", codec_2bit()}), BadLength);
    CHECK_THROWS_AS(decode({"011", codec_2bit()}), BadLength);
    CHECK_THROWS_AS(decode({"", codec_2bit()}), BadLength);
    CHECK_THROWS_AS(decode({"01x1", codec_2bit()}), BadLength);
}

TEST_CASE("encode/decode are mutually inverse, exhaustively to 4 genes") {
    for (const Codec& codec : {codec_2bit(), codec_3bit()}) {
        for (std::size_t genes = 1; genes <= 4; ++genes) {
            for (const std::string& bits : all_bit_strings(codec, genes)) {
                const Genome g{bits, codec};
                const IptSequence seq = decode(g);
                REQUIRE(seq.length() == genes);
                REQUIRE(encode(seq, codec).bits == bits);
            }
        }
    }
}

TEST_CASE("random_genome determinism and support") {
    const Codec codec = codec_2bit();
    Rng a(123), b(123);
    for (int i = 0; i < 20; ++i) {
        CHECK(random_genome(codec, 3, a).bits == random_genome(codec, 3, b).bits);
    }
    Rng c(9);
    std::set<std::string> seen;
    for (int i = 0; i < 64; ++i) seen.insert(random_genome(codec, 1, c).bits);
    CHECK(seen == std::set<std::string>{"00", "01", "10", "11"});
}

TEST_CASE("random_genome draws lengths uniformly") {
    const Codec codec = codec_2bit();
    const std::size_t max_len = 3;
    const int draws = 10000;
    Rng rng(2024);
    std::map<std::size_t, int> counts;
    for (int i = 0; i < draws; ++i) {
        ++counts[decode(random_genome(codec, max_len, rng)).length()];
    }
    // binomial 5-sigma band around draws/3: sigma = sqrt(n p (1-p)) ~ 47.1
    const double expectation = draws / 3.0;
    const double sigma = std::sqrt(draws * (1.0 / 3.0) * (2.0 / 3.0));
    for (std::size_t len = 1; len <= max_len; ++len) {
        INFO("length " << len);
        CHECK(std::abs(counts[len] - expectation) <= 5.0 * sigma);
    }
}

TEST_CASE("genome validation enforces the gene-count cap") {
    const Genome g{"010101", codec_2bit()};
    CHECK_NOTHROW(g.validate(3));
    CHECK_THROWS_AS(g.validate(2), BadLength);
}
