#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ipts/error.hpp"
#include "ipts/filters.hpp"
#include "ipts/rng.hpp"

namespace ipts {

/// Bijective map from fixed-width bit patterns to filter kinds. Pattern index
/// is the binary value of the gene, so table[0b01] is the op encoded by "01".
struct Codec {
    int bits_per_gene = 2;
    std::vector<IptKind> table;  // size == 2^bits_per_gene
    std::string name;            // "2bit", "3bit", or custom

    std::size_t patterns() const { return std::size_t(1) << bits_per_gene; }

    void validate() const {
        if (bits_per_gene < 1 || bits_per_gene > 8) {
            throw ConfigError("codec bits_per_gene out of range");
        }
        if (table.size() != patterns()) {
            throw ConfigError("codec table must cover all " + std::to_string(patterns()) +
                              " patterns");
        }
        for (std::size_t i = 0; i < table.size(); ++i) {
            for (std::size_t j = i + 1; j < table.size(); ++j) {
                if (table[i] == table[j]) {
                    throw ConfigError("codec table is not a bijection");
                }
            }
        }
    }

    bool operator==(const Codec&) const = default;
};

/// 00 -> DoNothing, 01 -> AdaptiveSmooth, 10 -> BilateralSmooth,
/// 11 -> AdditiveNoise.
inline Codec codec_2bit() {
    return Codec{2,
                 {IptKind::DoNothing, IptKind::AdaptiveSmooth, IptKind::BilateralSmooth,
                  IptKind::AdditiveNoise},
                 "2bit"};
}

/// The 2-bit table extended with 100 -> Thinning, 101 -> Pixellate,
/// 110 -> Blur, 111 -> Sharpen.
inline Codec codec_3bit() {
    return Codec{3,
                 {IptKind::DoNothing, IptKind::AdaptiveSmooth, IptKind::BilateralSmooth,
                  IptKind::AdditiveNoise, IptKind::Thinning, IptKind::Pixellate, IptKind::Blur,
                  IptKind::Sharpen},
                 "3bit"};
}

inline Codec codec_by_name(const std::string& name) {
    if (name == "2bit") return codec_2bit();
    if (name == "3bit") return codec_3bit();
    throw ConfigError("unknown codec: " + name);
}

/// A fixed-width bit string over a codec. Serialized as the ASCII bit string.
struct Genome {
    std::string bits;  // '0'/'1' characters
    Codec codec;

    std::size_t gene_count() const { return bits.size() / codec.bits_per_gene; }

    void validate(std::size_t max_len = 0) const {
        for (char c : bits) {
            if (c != '0' && c != '1') throw BadLength("genome contains non-bit character");
        }
        if (bits.empty() || bits.size() % codec.bits_per_gene != 0) {
            throw BadLength("genome length " + std::to_string(bits.size()) +
                            " is not a positive multiple of " +
                            std::to_string(codec.bits_per_gene));
        }
        if (max_len > 0 && gene_count() > max_len) {
            throw BadLength("genome has " + std::to_string(gene_count()) +
                            " genes, limit is " + std::to_string(max_len));
        }
    }
};

/// Gene-by-gene decoding, left to right. DoNothing genes are kept: they are
/// exact identity ops and keeping them aligns sequence positions with genes.
inline IptSequence decode(const Genome& g) {
    g.validate();
    IptSequence seq;
    const int bpg = g.codec.bits_per_gene;
    seq.ops.reserve(g.gene_count());
    for (std::size_t i = 0; i + bpg <= g.bits.size(); i += bpg) {
        std::size_t pattern = 0;
        for (int b = 0; b < bpg; ++b) {
            pattern = (pattern << 1) | (g.bits[i + b] == '1' ? 1u : 0u);
        }
        seq.ops.push_back(g.codec.table[pattern]);
    }
    return seq;
}

/// Inverse of decode. Throws UnencodableOp if the codec has no pattern for a
/// kind (e.g. Thinning under the 2-bit codec).
inline Genome encode(const IptSequence& seq, const Codec& codec) {
    Genome g;
    g.codec = codec;
    for (IptKind op : seq.ops) {
        std::size_t pattern = codec.table.size();
        for (std::size_t i = 0; i < codec.table.size(); ++i) {
            if (codec.table[i] == op) {
                pattern = i;
                break;
            }
        }
        if (pattern == codec.table.size()) {
            throw UnencodableOp(std::string(kind_name(op)) + " is not encodable by codec " +
                                codec.name);
        }
        for (int b = codec.bits_per_gene - 1; b >= 0; --b) {
            g.bits += ((pattern >> b) & 1) ? '1' : '0';
        }
    }
    if (g.bits.empty()) throw BadLength("cannot encode an empty sequence");
    return g;
}

/// Uniform random genome: gene count uniform in [1, max_len], bits uniform.
inline Genome random_genome(const Codec& codec, std::size_t max_len, Rng& rng) {
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    const std::size_t genes = 1 + rng.below(max_len);
    Genome g;
    g.codec = codec;
    g.bits.reserve(genes * codec.bits_per_gene);
    for (std::size_t i = 0; i < genes * codec.bits_per_gene; ++i) {
        g.bits += rng.bernoulli(0.5) ? '1' : '0';
    }
    return g;
}

}  // namespace ipts
