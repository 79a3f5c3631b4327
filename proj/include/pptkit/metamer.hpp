#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "pptkit/corpusio.hpp"
#include "pptkit/rng.hpp"

namespace pptkit {

/// Empirical categorical distribution over keys, stored sorted by key with
/// cumulative counts for sampling.
template <class Key>
class Categorical {
public:
    Categorical() = default;
    explicit Categorical(const std::unordered_map<Key, std::uint64_t>& counts) {
        std::vector<std::pair<Key, std::uint64_t>> sorted(counts.begin(), counts.end());
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [key, n] : sorted) push_back(key, n);
    }

    /// Keys must arrive in strictly increasing order.
    void push_back(Key key, std::uint64_t count) {
        keys_.push_back(key);
        cumulative_.push_back(total() + count);
    }

    bool empty() const noexcept { return keys_.empty(); }
    std::size_t size() const noexcept { return keys_.size(); }
    std::uint64_t total() const noexcept { return cumulative_.empty() ? 0 : cumulative_.back(); }
    const std::vector<Key>& keys() const noexcept { return keys_; }
    std::uint64_t count_at(std::size_t i) const noexcept {
        return cumulative_[i] - (i == 0 ? 0 : cumulative_[i - 1]);
    }
    std::uint64_t count(Key key) const {
        const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
        return (it == keys_.end() || *it != key) ? 0 : count_at(static_cast<std::size_t>(it - keys_.begin()));
    }
    double probability(Key key) const {
        return total() == 0 ? 0.0 : static_cast<double>(count(key)) / static_cast<double>(total());
    }

    Key sample(CounterRng& rng) const {
        const std::uint64_t u = rng.below(total());
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return keys_[static_cast<std::size_t>(it - cumulative_.begin())];
    }

    friend bool operator==(const Categorical&, const Categorical&) = default;

private:
    std::vector<Key> keys_;
    std::vector<std::uint64_t> cumulative_;
};

/// (a, b) packed so that key order equals lexicographic pair order.
constexpr std::uint64_t pair_key(Token a, Token b) noexcept { return (std::uint64_t{a} << 32) | b; }
constexpr Token pair_first(std::uint64_t key) noexcept { return static_cast<Token>(key >> 32); }
constexpr Token pair_second(std::uint64_t key) noexcept { return static_cast<Token>(key & 0xffffffffu); }

/// Raw-count unigram/bigram/trigram model with hard back-off. Lower orders
/// are always fitted alongside the top order.
struct NgramModel {
    int order = 0;
    VocabSpec vocab{};
    Categorical<Token> unigram;
    Categorical<Token> start_tokens;              ///< first token of each record (order >= 2)
    Categorical<std::uint64_t> start_bigrams;     ///< first two tokens of each record (order 3)
    std::unordered_map<Token, Categorical<Token>> bigram;
    std::unordered_map<std::uint64_t, Categorical<Token>> trigram;

    const Categorical<Token>* bigram_context(Token prev) const {
        const auto it = bigram.find(prev);
        return it == bigram.end() ? nullptr : &it->second;
    }
    const Categorical<Token>* trigram_context(Token a, Token b) const {
        const auto it = trigram.find(pair_key(a, b));
        return it == trigram.end() ? nullptr : &it->second;
    }

    friend bool operator==(const NgramModel&, const NgramModel&) = default;
};

/// Counts n-grams within records only; contexts never span a record boundary.
NgramModel fit_ngram(const Corpus& corpus, int order, unsigned threads = 0);

/// How often each order produced a token while sampling.
struct BackoffStats {
    std::uint64_t start = 0;    ///< tokens taken from the start tables
    std::uint64_t trigram = 0;
    std::uint64_t bigram = 0;   ///< includes back-offs from an unseen trigram context
    std::uint64_t unigram = 0;  ///< includes back-offs from an unseen bigram context
    std::uint64_t trigram_to_bigram = 0;
    std::uint64_t bigram_to_unigram = 0;

    BackoffStats& operator+=(const BackoffStats& o);
};

struct MetamerCorpus {
    Corpus corpus;
    BackoffStats stats;
};

/// Samples records autoregressively from the model, starting from an observed
/// start bigram (order 3), start token (order 2) or unigram draw (order 1).
/// Unseen contexts back off one order at a time down to the unigram table.
MetamerCorpus sample_metamer(const NgramModel& model, std::size_t n_sequences, std::size_t length,
                             std::uint64_t seed, unsigned threads = 0);

/// Uniform draw of `count` records without replacement, kept in source order.
Corpus uniform_subset(const Corpus& corpus, std::size_t count, std::uint64_t seed);

inline constexpr std::string_view kNgramMagic = "PPTNGRM1";
inline constexpr std::uint16_t kNgramVersion = 1;

/// Sorted, length-prefixed table dump; the header carries an FNV-1a hash of
/// the payload.
void write_ngram(const NgramModel& model, std::ostream& sink);
NgramModel read_ngram(std::istream& source);
void save_ngram(const NgramModel& model, const std::filesystem::path& path);
NgramModel load_ngram(const std::filesystem::path& path);
std::uint64_t ngram_content_hash(const NgramModel& model);

} // namespace pptkit
