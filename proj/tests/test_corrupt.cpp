#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "pptkit/corrupt.hpp"
#include "pptkit/formalgen.hpp"

using namespace pptkit;

namespace {

Corpus source(std::size_t n = 200, std::uint32_t len = 256, std::uint64_t seed = 1) {
    return generate_random_corpus(VocabSpec{1000}, n, len, seed);
}

CorruptionSpec spec_for(Protocol p, double rate, std::uint64_t seed = 3) {
    CorruptionSpec s;
    s.protocol = p;
    s.rate = rate;
    s.seed = seed;
    return s;
}

constexpr Protocol kAll[] = {Protocol::sample_level, Protocol::token_permutation, Protocol::span_corruption,
                             Protocol::token_level};

/// No unmasked position differs from the input.
bool mask_truthful(const Corpus& in, const CorruptionResult& r) {
    for (std::size_t i = 0; i < in.size(); ++i) {
        for (std::size_t p = 0; p < in.record_length(); ++p) {
            if (!r.mask.test(i, p) && in.record(i)[p] != r.corpus.record(i)[p]) return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("protocol names parse in long and short forms") {
    CHECK(parse_protocol("sample_level") == Protocol::sample_level);
    CHECK(parse_protocol("sample") == Protocol::sample_level);
    CHECK(parse_protocol("permutation") == Protocol::token_permutation);
    CHECK(parse_protocol("token_permutation") == Protocol::token_permutation);
    CHECK(parse_protocol("span") == Protocol::span_corruption);
    CHECK(parse_protocol("token") == Protocol::token_level);
    for (Protocol p : kAll) CHECK(parse_protocol(to_string(p)) == p);
    CHECK_THROWS_AS(parse_protocol("shuffle"), DomainError);
}

TEST_CASE("rate zero is the identity for every protocol") {
    const Corpus in = source();
    for (Protocol p : kAll) {
        const auto r = corrupt(in, spec_for(p, 0.0));
        CHECK(r.corpus == in);
        CHECK(r.mask.covered_total() == 0);
    }
}

TEST_CASE("sample level at rate one replaces every record") {
    const Corpus in = source(50);
    const auto r = corrupt(in, spec_for(Protocol::sample_level, 1.0));
    CHECK(r.mask.covered_total() == in.token_count());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < in.token_count(); ++i) changed += in.tokens()[i] != r.corpus.tokens()[i];
    CHECK(changed > in.token_count() * 9 / 10);
}

TEST_CASE("sample level rate 0.3 over 10k records lies within 3 sigma") {
    const Corpus in = generate_random_corpus(VocabSpec{50}, 10000, 8, 4);
    const auto r = corrupt(in, spec_for(Protocol::sample_level, 0.3));
    std::size_t replaced = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const auto c = r.mask.covered(i);
        CHECK((c == 0 || c == 8));
        replaced += c == 8;
    }
    CHECK(std::abs(static_cast<double>(replaced) / 10000.0 - 0.3) <= 0.015);
}

TEST_CASE("permutation selects ceil(p L / w) windows and preserves window multisets") {
    CHECK(permutation_window_count(0.30, 2048, 32) == 20);
    CHECK(permutation_window_count(0.0, 2048, 32) == 0);
    CHECK(permutation_window_count(1.0, 2048, 32) == 64);
    CHECK_THROWS_AS(permutation_window_count(1.0, 100, 32), InfeasibleRateError); // 96 eligible positions

    Corpus in(VocabSpec{2048}, 2048);
    TokenSequence rec(2048);
    for (std::size_t i = 0; i < rec.size(); ++i) rec[i] = static_cast<Token>(i);
    in.append(rec);
    in.append(rec);
    const auto r = corrupt(in, spec_for(Protocol::token_permutation, 0.30));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(r.mask.covered(i) == 640);
        for (std::size_t w = 0; w < 64; ++w) {
            const bool first = r.mask.test(i, w * 32);
            auto out = r.corpus.record(i).subspan(w * 32, 32);
            std::vector<Token> sorted(out.begin(), out.end());
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t k = 0; k < 32; ++k) {
                CHECK(r.mask.test(i, w * 32 + k) == first);
                CHECK(sorted[k] == w * 32 + k);
            }
        }
    }
    CHECK(mask_truthful(in, r));
}

TEST_CASE("permutation of one window keeps its multiset") {
    Corpus in(VocabSpec{10}, 4);
    in.append(std::vector<Token>{5, 6, 7, 8});
    CorruptionSpec s = spec_for(Protocol::token_permutation, 1.0);
    s.window_size = 4;
    const auto r = corrupt(in, s);
    std::vector<Token> out(r.corpus.record(0).begin(), r.corpus.record(0).end());
    std::sort(out.begin(), out.end());
    CHECK(out == std::vector<Token>{5, 6, 7, 8});
    CHECK(r.mask.covered(0) == 4);
}

TEST_CASE("trailing partial window is never selected") {
    Corpus in = source(20, 100);
    CorruptionSpec s = spec_for(Protocol::token_permutation, 0.9);
    const auto r = corrupt(in, s);
    for (std::size_t i = 0; i < in.size(); ++i) {
        for (std::size_t p = 96; p < 100; ++p) CHECK_FALSE(r.mask.test(i, p));
        CHECK(r.mask.covered(i) == 96);
    }
}

TEST_CASE("span coverage lies in [pL, pL + span_max] and the mask matches the bookkeeping") {
    const Corpus in = source(300, 2048, 8);
    const auto r = corrupt(in, spec_for(Protocol::span_corruption, 0.3));
    for (std::size_t i = 0; i < in.size(); ++i) {
        const auto c = r.mask.covered(i);
        CHECK(c >= 614.4);
        CHECK(c <= 614.4 + 20);
        CHECK(c == r.covered[i]);
    }
    CHECK(mask_truthful(in, r));
}

TEST_CASE("span validation") {
    CorruptionSpec s = spec_for(Protocol::span_corruption, 0.3);
    s.span_min = 10;
    s.span_max = 5;
    CHECK_THROWS_AS(s.validate(2048), DomainError);
    s.span_min = 5;
    s.span_max = 30;
    CHECK_THROWS_AS(s.validate(16), DomainError);
    s.rate = 1.5;
    CHECK_THROWS_AS(s.validate(2048), DomainError);
}

TEST_CASE("protocol-specific entry points reject a mismatched spec") {
    const Corpus in = source(2, 64);
    CHECK_THROWS_AS(corrupt_span(in, spec_for(Protocol::sample_level, 0.1)), DomainError);
    CHECK_THROWS_AS(corrupt_sample_level(in, spec_for(Protocol::token_level, 0.1)), DomainError);
}

TEST_CASE("token level rate concentrates near p") {
    const Corpus in = source(100, 1000);
    const auto r = corrupt(in, spec_for(Protocol::token_level, 0.5));
    const double rate = static_cast<double>(r.mask.covered_total()) / static_cast<double>(in.token_count());
    CHECK(std::abs(rate - 0.5) < 3 * std::sqrt(0.25 / 100000.0));
    CHECK(mask_truthful(in, r));
}

TEST_CASE("mask truthfulness, shape preservation and determinism hold for every protocol") {
    const Corpus in = source(64, 300, 5);
    for (Protocol p : kAll) {
        for (double rate : {0.1, 0.5, 0.9}) {
            const auto a = corrupt(in, spec_for(p, rate), 1);
            const auto b = corrupt(in, spec_for(p, rate), 6);
            CHECK(a.corpus == b.corpus);
            CHECK(a.mask == b.mask);
            CHECK(a.corpus.size() == in.size());
            CHECK(a.corpus.record_length() == in.record_length());
            CHECK(a.mask.size() == in.size());
            CHECK(mask_truthful(in, a));
        }
    }
}

TEST_CASE("records are corrupted independently of their neighbours") {
    const Corpus in = source(10, 128, 9);
    Corpus prefix(in.vocab(), in.record_length());
    for (std::size_t i = 0; i < 4; ++i) prefix.append(in.record(i));
    for (Protocol p : kAll) {
        const auto whole = corrupt(in, spec_for(p, 0.4));
        const auto part = corrupt(prefix, spec_for(p, 0.4));
        for (std::size_t i = 0; i < 4; ++i) CHECK(std::ranges::equal(whole.corpus.record(i), part.corpus.record(i)));
    }
}
