#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pptkit/corpusio.hpp"

namespace pptkit {

/// Uniform source: every token i.i.d. over [0, vocab.size). Its per-step
/// entropy is ln(vocab.size) by construction.
Corpus generate_random_corpus(VocabSpec vocab, std::size_t n_sequences, std::size_t length, std::uint64_t seed,
                              unsigned threads = 0);

/// k-shuffle Dyck: k independent 1-Dyck bracket strings interleaved into one stream.
struct DyckSpec {
    std::uint32_t k = 64;
    /// (open, close) ids per channel; empty means channel c uses (2c, 2c + 1).
    std::vector<std::pair<Token, Token>> brackets;
    std::uint32_t max_depth = 16;
    double close_bias = 0.5;
    /// Trailing positions in which only closes are emitted while any channel is
    /// open. 0 disables the window; closing is then driven solely by the
    /// remaining-length constraint.
    std::uint32_t tail_window = 0;
    std::uint64_t seed = 0;

    /// (open, close) for channel c, applying the default mapping when unset.
    std::pair<Token, Token> channel_ids(std::uint32_t c) const;
    /// Throws DomainError on duplicate ids, ids outside vocab, or bad parameters.
    void validate(VocabSpec vocab) const;
};

/// One fixed-length k-shuffle Dyck record.
///
/// At each position a channel is chosen uniformly among those that may legally
/// emit. A channel at depth 0 opens, one at max_depth closes, otherwise it
/// closes with probability close_bias. Whenever the total open depth reaches
/// the number of remaining positions (or the tail window is active) only
/// closes are allowed, so even-length records end fully balanced.
TokenSequence generate_dyck_sequence(const DyckSpec& spec, std::size_t length, std::uint64_t stream_seed);

Corpus generate_dyck_corpus(const DyckSpec& spec, VocabSpec vocab, std::size_t n_sequences, std::size_t length,
                            unsigned threads = 0);

} // namespace pptkit
