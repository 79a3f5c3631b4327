#include "pptkit/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pptkit/parallel.hpp"
#include "pptkit/rng.hpp"

namespace pptkit {

namespace {

CorruptionResult shaped_like(const Corpus& input) {
    return {input, NoiseMask(input.record_length(), input.size()), std::vector<std::uint32_t>(input.size(), 0)};
}

void require_protocol(const CorruptionSpec& spec, Protocol expected) {
    if (spec.protocol != expected) {
        throw DomainError("corruption spec protocol is " + std::string(to_string(spec.protocol)) + ", expected " +
                          std::string(to_string(expected)));
    }
}

Token uniform_token(CounterRng& rng, VocabSpec vocab) { return static_cast<Token>(rng.below(vocab.size)); }

} // namespace

std::string_view to_string(Protocol p) {
    switch (p) {
    case Protocol::sample_level: return "sample_level";
    case Protocol::token_permutation: return "token_permutation";
    case Protocol::span_corruption: return "span_corruption";
    case Protocol::token_level: return "token_level";
    }
    return "unknown";
}

Protocol parse_protocol(std::string_view name) {
    if (name == "sample_level" || name == "sample") return Protocol::sample_level;
    if (name == "token_permutation" || name == "permutation") return Protocol::token_permutation;
    if (name == "span_corruption" || name == "span") return Protocol::span_corruption;
    if (name == "token_level" || name == "token") return Protocol::token_level;
    throw DomainError("unknown corruption protocol '" + std::string(name) + "'");
}

void CorruptionSpec::validate(std::uint32_t record_length) const {
    if (!(rate >= 0.0 && rate <= 1.0)) throw DomainError("corruption rate must lie in [0, 1]");
    if (window_size < 1) throw DomainError("window size must be >= 1");
    if (protocol == Protocol::span_corruption) {
        if (span_min < 1 || span_min > span_max) throw DomainError("span lengths need 1 <= span_min <= span_max");
        if (span_max > record_length) {
            throw DomainError("span_max " + std::to_string(span_max) + " exceeds record length " +
                              std::to_string(record_length));
        }
    }
}

std::uint32_t coverage_target(double rate, std::uint32_t record_length) {
    const long double exact = static_cast<long double>(rate) * record_length;
    // Absorb representation error so that e.g. 0.5 * 2048 stays 1024.
    const long double target = std::ceil(exact - 1e-9L * std::max<long double>(1.0L, exact));
    return static_cast<std::uint32_t>(std::max<long double>(0.0L, target));
}

std::uint32_t permutation_window_count(double rate, std::uint32_t record_length, std::uint32_t window_size) {
    const std::uint32_t target = coverage_target(rate, record_length);
    const std::uint32_t windows = (target + window_size - 1) / window_size;
    const std::uint32_t eligible = record_length / window_size;
    if (windows > eligible) {
        throw InfeasibleRateError("rate " + std::to_string(rate) + " needs " + std::to_string(windows) +
                                  " windows of " + std::to_string(window_size) + " but only " +
                                  std::to_string(eligible) + " full windows fit in " +
                                  std::to_string(record_length) + " tokens");
    }
    return windows;
}

CorruptionResult corrupt_sample_level(const Corpus& input, const CorruptionSpec& spec, unsigned threads) {
    require_protocol(spec, Protocol::sample_level);
    spec.validate(input.record_length());
    CorruptionResult out = shaped_like(input);
    parallel_for(input.size(), threads, [&](std::size_t r) {
        CounterRng rng(derive_seed(spec.seed, "sample", r));
        if (!rng.bernoulli(spec.rate)) return;
        for (Token& t : out.corpus.record(r)) t = uniform_token(rng, input.vocab());
        out.mask.set_record(r, true);
        out.covered[r] = input.record_length();
    });
    return out;
}

CorruptionResult corrupt_token_permutation(const Corpus& input, const CorruptionSpec& spec, unsigned threads) {
    require_protocol(spec, Protocol::token_permutation);
    spec.validate(input.record_length());
    const std::uint32_t length = input.record_length();
    const std::uint32_t ws = spec.window_size;
    CorruptionResult out = shaped_like(input);
    if (input.empty()) return out;
    const std::uint32_t selected = permutation_window_count(spec.rate, length, ws);
    const std::uint32_t eligible = length / ws;

    parallel_for(input.size(), threads, [&](std::size_t r) {
        CounterRng rng(derive_seed(spec.seed, "permute", r));
        std::vector<std::uint32_t> windows(eligible);
        std::iota(windows.begin(), windows.end(), 0u);
        // Partial Fisher-Yates: the first `selected` slots are a uniform draw
        // without replacement.
        for (std::uint32_t i = 0; i < selected; ++i) {
            const auto j = i + static_cast<std::uint32_t>(rng.below(eligible - i));
            std::swap(windows[i], windows[j]);
        }
        auto record = out.corpus.record(r);
        for (std::uint32_t i = 0; i < selected; ++i) {
            const std::size_t begin = std::size_t{windows[i]} * ws;
            for (std::uint32_t a = ws - 1; a > 0; --a) {
                const auto b = static_cast<std::uint32_t>(rng.below(a + 1));
                std::swap(record[begin + a], record[begin + b]);
            }
            for (std::uint32_t p = 0; p < ws; ++p) out.mask.set(r, begin + p);
        }
        out.covered[r] = selected * ws;
    });
    return out;
}

CorruptionResult corrupt_span(const Corpus& input, const CorruptionSpec& spec, unsigned threads) {
    require_protocol(spec, Protocol::span_corruption);
    CorruptionResult out = shaped_like(input);
    if (input.empty()) return out;
    spec.validate(input.record_length());
    const std::uint32_t length = input.record_length();
    const std::uint32_t target = coverage_target(spec.rate, length);

    parallel_for(input.size(), threads, [&](std::size_t r) {
        CounterRng rng(derive_seed(spec.seed, "span", r));
        std::vector<bool> in_union(length, false);
        std::uint32_t covered = 0;
        while (covered < target) {
            const auto span = static_cast<std::uint32_t>(rng.between(spec.span_min, spec.span_max));
            const auto start = static_cast<std::uint32_t>(rng.below(length - span + 1));
            for (std::uint32_t p = start; p < start + span; ++p) {
                if (!in_union[p]) {
                    in_union[p] = true;
                    ++covered;
                }
            }
        }
        auto record = out.corpus.record(r);
        for (std::uint32_t p = 0; p < length; ++p) {
            if (!in_union[p]) continue;
            record[p] = uniform_token(rng, input.vocab());
            out.mask.set(r, p);
        }
        out.covered[r] = covered;
    });
    return out;
}

CorruptionResult corrupt_token_level(const Corpus& input, const CorruptionSpec& spec, unsigned threads) {
    require_protocol(spec, Protocol::token_level);
    spec.validate(input.record_length());
    CorruptionResult out = shaped_like(input);
    parallel_for(input.size(), threads, [&](std::size_t r) {
        CounterRng rng(derive_seed(spec.seed, "token", r));
        auto record = out.corpus.record(r);
        std::uint32_t covered = 0;
        for (std::size_t p = 0; p < record.size(); ++p) {
            if (!rng.bernoulli(spec.rate)) continue;
            record[p] = uniform_token(rng, input.vocab());
            out.mask.set(r, p);
            ++covered;
        }
        out.covered[r] = covered;
    });
    return out;
}

CorruptionResult corrupt(const Corpus& input, const CorruptionSpec& spec, unsigned threads) {
    switch (spec.protocol) {
    case Protocol::sample_level: return corrupt_sample_level(input, spec, threads);
    case Protocol::token_permutation: return corrupt_token_permutation(input, spec, threads);
    case Protocol::span_corruption: return corrupt_span(input, spec, threads);
    case Protocol::token_level: return corrupt_token_level(input, spec, threads);
    }
    throw DomainError("unknown corruption protocol");
}

} // namespace pptkit
