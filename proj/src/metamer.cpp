#include "pptkit/metamer.hpp"

#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "pptkit/detail/bytes.hpp"
#include "pptkit/parallel.hpp"

namespace pptkit {

namespace {

using TokenCounts = std::unordered_map<Token, std::uint64_t>;

struct CountShard {
    TokenCounts unigram;
    TokenCounts start_tokens;
    std::unordered_map<std::uint64_t, std::uint64_t> start_bigrams;
    std::unordered_map<Token, TokenCounts> bigram;
    std::unordered_map<std::uint64_t, TokenCounts> trigram;

    void merge(CountShard&& o) {
        auto add = [](auto& dst, const auto& src) {
            for (const auto& [k, n] : src) dst[k] += n;
        };
        add(unigram, o.unigram);
        add(start_tokens, o.start_tokens);
        add(start_bigrams, o.start_bigrams);
        for (auto& [ctx, table] : o.bigram) add(bigram[ctx], table);
        for (auto& [ctx, table] : o.trigram) add(trigram[ctx], table);
    }
};

// --- serialization helpers -------------------------------------------------

void put_table(std::string& out, const Categorical<Token>& table) {
    detail::put_le(out, static_cast<std::uint32_t>(table.size()));
    for (std::size_t i = 0; i < table.size(); ++i) {
        detail::put_le(out, table.keys()[i]);
        detail::put_le(out, table.count_at(i));
    }
}

template <class Map>
std::vector<typename Map::key_type> sorted_keys(const Map& m) {
    std::vector<typename Map::key_type> keys;
    keys.reserve(m.size());
    for (const auto& kv : m) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    return keys;
}

std::string encode_payload(const NgramModel& m) {
    std::string out;
    put_table(out, m.unigram);
    if (m.order >= 2) {
        put_table(out, m.start_tokens);
        const auto contexts = sorted_keys(m.bigram);
        detail::put_le(out, static_cast<std::uint32_t>(contexts.size()));
        for (Token ctx : contexts) {
            detail::put_le(out, ctx);
            put_table(out, m.bigram.at(ctx));
        }
    }
    if (m.order >= 3) {
        detail::put_le(out, static_cast<std::uint32_t>(m.start_bigrams.size()));
        for (std::size_t i = 0; i < m.start_bigrams.size(); ++i) {
            const auto key = m.start_bigrams.keys()[i];
            detail::put_le(out, pair_first(key));
            detail::put_le(out, pair_second(key));
            detail::put_le(out, m.start_bigrams.count_at(i));
        }
        const auto contexts = sorted_keys(m.trigram);
        detail::put_le(out, static_cast<std::uint32_t>(contexts.size()));
        for (auto ctx : contexts) {
            detail::put_le(out, pair_first(ctx));
            detail::put_le(out, pair_second(ctx));
            put_table(out, m.trigram.at(ctx));
        }
    }
    return out;
}

class PayloadCursor {
public:
    explicit PayloadCursor(const std::string& bytes) : bytes_(bytes) {}

    template <class T>
    T take() {
        if (pos_ + sizeof(T) > bytes_.size()) {
            throw TruncationError("n-gram payload ends early", kHeaderBytes + pos_);
        }
        const T v = detail::get_le<T>(reinterpret_cast<const unsigned char*>(bytes_.data()) + pos_);
        pos_ += sizeof(T);
        return v;
    }

    bool done() const noexcept { return pos_ == bytes_.size(); }

    static constexpr std::size_t kHeaderBytes = 8 + 2 + 1 + 4 + 8 + 8;

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

template <class Key>
void push_sorted(Categorical<Key>& table, Key key, std::uint64_t count) {
    if (!table.empty() && !(table.keys().back() < key)) throw FormatError("n-gram table keys are not sorted");
    if (count == 0) throw FormatError("n-gram table holds a zero count");
    table.push_back(key, count);
}

Categorical<Token> take_table(PayloadCursor& in, VocabSpec vocab) {
    Categorical<Token> table;
    const auto n = in.take<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto token = in.take<std::uint32_t>();
        if (!vocab.contains(token)) throw FormatError("n-gram token outside vocab");
        push_sorted(table, token, in.take<std::uint64_t>());
    }
    return table;
}

} // namespace

BackoffStats& BackoffStats::operator+=(const BackoffStats& o) {
    start += o.start;
    trigram += o.trigram;
    bigram += o.bigram;
    unigram += o.unigram;
    trigram_to_bigram += o.trigram_to_bigram;
    bigram_to_unigram += o.bigram_to_unigram;
    return *this;
}

NgramModel fit_ngram(const Corpus& corpus, int order, unsigned threads) {
    if (order < 1 || order > 3) throw DomainError("n-gram order must be 1, 2 or 3");
    if (corpus.empty()) throw DomainError("cannot fit an n-gram model on an empty corpus");

    if (threads == 0) threads = default_threads();
    const std::size_t n_shards = std::min<std::size_t>(threads, corpus.size());
    std::vector<CountShard> shards(n_shards);
    parallel_for(n_shards, threads, [&](std::size_t s) {
        CountShard& shard = shards[s];
        const std::size_t begin = corpus.size() * s / n_shards;
        const std::size_t end = corpus.size() * (s + 1) / n_shards;
        for (std::size_t r = begin; r < end; ++r) {
            const auto rec = corpus.record(r);
            for (std::size_t t = 0; t < rec.size(); ++t) {
                ++shard.unigram[rec[t]];
                if (order >= 2 && t >= 1) ++shard.bigram[rec[t - 1]][rec[t]];
                if (order >= 3 && t >= 2) ++shard.trigram[pair_key(rec[t - 2], rec[t - 1])][rec[t]];
            }
            if (order >= 2) ++shard.start_tokens[rec[0]];
            if (order >= 3 && rec.size() >= 2) ++shard.start_bigrams[pair_key(rec[0], rec[1])];
        }
    });
    for (std::size_t s = 1; s < n_shards; ++s) shards[0].merge(std::move(shards[s]));
    const CountShard& counts = shards[0];

    NgramModel model;
    model.order = order;
    model.vocab = corpus.vocab();
    model.unigram = Categorical<Token>(counts.unigram);
    model.start_tokens = Categorical<Token>(counts.start_tokens);
    model.start_bigrams = Categorical<std::uint64_t>(counts.start_bigrams);
    for (const auto& [ctx, table] : counts.bigram) model.bigram.emplace(ctx, Categorical<Token>(table));
    for (const auto& [ctx, table] : counts.trigram) model.trigram.emplace(ctx, Categorical<Token>(table));
    return model;
}

MetamerCorpus sample_metamer(const NgramModel& model, std::size_t n_sequences, std::size_t length,
                             std::uint64_t seed, unsigned threads) {
    if (model.order < 1 || model.order > 3) throw DomainError("n-gram model has no valid order");
    if (model.unigram.empty()) throw DomainError("n-gram model has an empty unigram table");
    if (length < static_cast<std::size_t>(model.order)) {
        throw DomainError("metamer length " + std::to_string(length) + " is shorter than the model order");
    }
    if (model.order == 3 && model.start_bigrams.empty()) throw DomainError("n-gram model has no start bigrams");
    if (model.order == 2 && model.start_tokens.empty()) throw DomainError("n-gram model has no start tokens");

    MetamerCorpus out{Corpus::zeros(model.vocab, static_cast<std::uint32_t>(length), n_sequences), {}};
    std::vector<BackoffStats> per_record(n_sequences);
    parallel_for(n_sequences, threads, [&](std::size_t i) {
        CounterRng rng(derive_seed(seed, "metamer", i));
        BackoffStats& stats = per_record[i];
        auto rec = out.corpus.record(i);
        std::size_t t = 0;
        if (model.order == 3) {
            const auto start = model.start_bigrams.sample(rng);
            rec[0] = pair_first(start);
            rec[1] = pair_second(start);
            t = 2;
            stats.start += 2;
        } else if (model.order == 2) {
            rec[0] = model.start_tokens.sample(rng);
            t = 1;
            stats.start += 1;
        }
        for (; t < length; ++t) {
            if (model.order >= 3) {
                if (const auto* tri = model.trigram_context(rec[t - 2], rec[t - 1])) {
                    rec[t] = tri->sample(rng);
                    ++stats.trigram;
                    continue;
                }
                ++stats.trigram_to_bigram;
            }
            if (model.order >= 2) {
                if (const auto* bi = model.bigram_context(rec[t - 1])) {
                    rec[t] = bi->sample(rng);
                    ++stats.bigram;
                    continue;
                }
                ++stats.bigram_to_unigram;
            }
            rec[t] = model.unigram.sample(rng);
            ++stats.unigram;
        }
    });
    for (const auto& s : per_record) out.stats += s;
    return out;
}

Corpus uniform_subset(const Corpus& corpus, std::size_t count, std::uint64_t seed) {
    if (count > corpus.size()) {
        throw DomainError("subset of " + std::to_string(count) + " records requested from " +
                          std::to_string(corpus.size()));
    }
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(derive_seed(seed, "subset", 0));
    for (std::size_t i = 0; i < count; ++i) {
        std::swap(order[i], order[i + rng.below(order.size() - i)]);
    }
    order.resize(count);
    std::sort(order.begin(), order.end());
    Corpus out(corpus.vocab(), corpus.record_length());
    for (std::size_t r : order) out.append(corpus.record(r));
    return out;
}

// --- serialization ---------------------------------------------------------

std::uint64_t ngram_content_hash(const NgramModel& model) { return detail::fnv1a(encode_payload(model)); }

void write_ngram(const NgramModel& model, std::ostream& sink) {
    if (model.order < 1 || model.order > 3) throw DomainError("n-gram model has no valid order");
    const std::string payload = encode_payload(model);
    std::string out(kNgramMagic);
    detail::put_le(out, kNgramVersion);
    detail::put_le(out, static_cast<std::uint8_t>(model.order));
    detail::put_le(out, model.vocab.size);
    detail::put_le(out, static_cast<std::uint64_t>(payload.size()));
    detail::put_le(out, detail::fnv1a(payload));
    out += payload;
    detail::write_all(sink, out);
}

NgramModel read_ngram(std::istream& source) {
    unsigned char raw[PayloadCursor::kHeaderBytes];
    detail::read_exact(source, raw, sizeof raw, 0, "n-gram header");
    detail::check_magic(std::string_view(reinterpret_cast<const char*>(raw), 8), kNgramMagic);
    const auto version = detail::get_le<std::uint16_t>(raw + 8);
    if (version != kNgramVersion) throw FormatError("unsupported n-gram version " + std::to_string(version));

    NgramModel model;
    model.order = raw[10];
    if (model.order < 1 || model.order > 3) throw FormatError("n-gram order " + std::to_string(model.order));
    model.vocab.size = detail::get_le<std::uint32_t>(raw + 11);
    const auto payload_bytes = detail::get_le<std::uint64_t>(raw + 15);
    const auto expected_hash = detail::get_le<std::uint64_t>(raw + 23);

    std::string payload(payload_bytes, '\0');
    detail::read_exact(source, payload.data(), payload.size(), sizeof raw, "n-gram payload");
    if (detail::fnv1a(payload) != expected_hash) throw FormatError("n-gram payload hash mismatch");

    PayloadCursor in(payload);
    model.unigram = take_table(in, model.vocab);
    if (model.order >= 2) {
        model.start_tokens = take_table(in, model.vocab);
        const auto contexts = in.take<std::uint32_t>();
        for (std::uint32_t i = 0; i < contexts; ++i) {
            const auto ctx = in.take<std::uint32_t>();
            if (!model.bigram.emplace(ctx, take_table(in, model.vocab)).second) {
                throw FormatError("duplicate bigram context");
            }
        }
    }
    if (model.order >= 3) {
        const auto starts = in.take<std::uint32_t>();
        for (std::uint32_t i = 0; i < starts; ++i) {
            const auto a = in.take<std::uint32_t>();
            const auto b = in.take<std::uint32_t>();
            push_sorted(model.start_bigrams, pair_key(a, b), in.take<std::uint64_t>());
        }
        const auto contexts = in.take<std::uint32_t>();
        for (std::uint32_t i = 0; i < contexts; ++i) {
            const auto a = in.take<std::uint32_t>();
            const auto b = in.take<std::uint32_t>();
            if (!model.trigram.emplace(pair_key(a, b), take_table(in, model.vocab)).second) {
                throw FormatError("duplicate trigram context");
            }
        }
    }
    if (!in.done()) throw FormatError("trailing bytes after n-gram payload");
    return model;
}

void save_ngram(const NgramModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_ngram(model, out);
}

NgramModel load_ngram(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    NgramModel model = read_ngram(in);
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("trailing bytes after n-gram payload in '" + path.string() + "'");
    }
    return model;
}

} // namespace pptkit
