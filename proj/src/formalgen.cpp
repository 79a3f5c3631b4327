#include "pptkit/formalgen.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "pptkit/parallel.hpp"
#include "pptkit/rng.hpp"

namespace pptkit {

Corpus generate_random_corpus(VocabSpec vocab, std::size_t n_sequences, std::size_t length, std::uint64_t seed,
                              unsigned threads) {
    if (vocab.size < 1) throw DomainError("vocab size must be >= 1");
    if (length < 1) throw DomainError("sequence length must be >= 1");
    Corpus corpus = Corpus::zeros(vocab, static_cast<std::uint32_t>(length), n_sequences);
    parallel_for(n_sequences, threads, [&](std::size_t i) {
        CounterRng rng(derive_seed(seed, "random", i));
        for (Token& t : corpus.record(i)) t = static_cast<Token>(rng.below(vocab.size));
    });
    return corpus;
}

std::pair<Token, Token> DyckSpec::channel_ids(std::uint32_t c) const {
    if (brackets.empty()) return {2 * c, 2 * c + 1};
    return brackets.at(c);
}

void DyckSpec::validate(VocabSpec vocab) const {
    if (k < 1) throw DomainError("dyck channel count k must be >= 1");
    if (max_depth < 1) throw DomainError("dyck max depth must be >= 1");
    if (!(close_bias > 0.0 && close_bias < 1.0)) throw DomainError("dyck close bias must lie in (0, 1)");
    if (!brackets.empty() && brackets.size() != k) {
        throw DomainError("dyck bracket table has " + std::to_string(brackets.size()) + " entries for k=" +
                          std::to_string(k));
    }
    std::set<Token> seen;
    for (std::uint32_t c = 0; c < k; ++c) {
        const auto [open, close] = channel_ids(c);
        for (Token t : {open, close}) {
            if (!vocab.contains(t)) {
                throw DomainError("dyck token id " + std::to_string(t) + " outside vocab of size " +
                                  std::to_string(vocab.size));
            }
            if (!seen.insert(t).second) throw DomainError("dyck token id " + std::to_string(t) + " used twice");
        }
    }
}

TokenSequence generate_dyck_sequence(const DyckSpec& spec, std::size_t length, std::uint64_t stream_seed) {
    if (length < 2) throw DomainError("dyck sequence length must be >= 2");
    if (spec.k > length) {
        throw DomainError("k=" + std::to_string(spec.k) + " channels cannot fit in length " + std::to_string(length));
    }

    CounterRng rng(stream_seed);
    std::vector<std::uint32_t> depth(spec.k, 0);
    std::vector<std::uint32_t> open_channels; // channels with depth > 0
    std::vector<std::size_t> slot(spec.k, 0); // index of a channel inside open_channels
    std::uint64_t total_depth = 0;

    auto mark_open = [&](std::uint32_t c) {
        slot[c] = open_channels.size();
        open_channels.push_back(c);
    };
    auto mark_closed = [&](std::uint32_t c) {
        const std::uint32_t moved = open_channels.back();
        open_channels[slot[c]] = moved;
        slot[moved] = slot[c];
        open_channels.pop_back();
    };

    TokenSequence out(length);
    for (std::size_t t = 0; t < length; ++t) {
        const std::size_t remaining = length - t;
        const bool in_tail = spec.tail_window > 0 && remaining <= spec.tail_window;
        const bool must_close = total_depth > 0 && (total_depth >= remaining || in_tail);

        std::uint32_t c;
        bool close;
        if (must_close) {
            c = open_channels[rng.below(open_channels.size())];
            close = true;
        } else {
            c = static_cast<std::uint32_t>(rng.below(spec.k));
            if (depth[c] == 0) {
                close = false;
            } else if (depth[c] >= spec.max_depth) {
                close = true;
            } else {
                close = rng.bernoulli(spec.close_bias);
            }
        }

        const auto [open_id, close_id] = spec.channel_ids(c);
        if (close) {
            out[t] = close_id;
            --total_depth;
            if (--depth[c] == 0) mark_closed(c);
        } else {
            out[t] = open_id;
            ++total_depth;
            if (depth[c]++ == 0) mark_open(c);
        }
    }
    return out;
}

Corpus generate_dyck_corpus(const DyckSpec& spec, VocabSpec vocab, std::size_t n_sequences, std::size_t length,
                            unsigned threads) {
    spec.validate(vocab);
    Corpus corpus = Corpus::zeros(vocab, static_cast<std::uint32_t>(length), n_sequences);
    parallel_for(n_sequences, threads, [&](std::size_t i) {
        const auto seq = generate_dyck_sequence(spec, length, derive_seed(spec.seed, "dyck", i));
        std::copy(seq.begin(), seq.end(), corpus.record(i).begin());
    });
    return corpus;
}

} // namespace pptkit
