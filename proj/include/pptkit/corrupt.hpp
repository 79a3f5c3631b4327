#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pptkit/corpusio.hpp"

namespace pptkit {

enum class Protocol {
    sample_level,      ///< whole record replaced with probability p
    token_permutation, ///< shuffle tokens inside randomly chosen fixed windows
    span_corruption,   ///< replace the union of random spans
    token_level,       ///< replace each position independently with probability p
};

std::string_view to_string(Protocol p);
/// Accepts the canonical names and the short forms "sample", "permutation", "span", "token".
Protocol parse_protocol(std::string_view name);

struct CorruptionSpec {
    Protocol protocol = Protocol::sample_level;
    double rate = 0.0;
    std::uint32_t window_size = 32;
    std::uint32_t span_min = 5;
    std::uint32_t span_max = 20;
    std::uint64_t seed = 0;

    /// Throws DomainError when a field is out of range for records of `record_length`.
    void validate(std::uint32_t record_length) const;
};

struct CorruptionResult {
    Corpus corpus;
    NoiseMask mask;
    /// Positions each record's sampling loop believed it covered (windows for
    /// permutation, the span union for span corruption, whole records for
    /// sample level, replaced positions for token level).
    std::vector<std::uint32_t> covered;
};

class InfeasibleRateError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Number of windows the permutation protocol selects: the first count whose
/// coverage reaches rate * record_length.
std::uint32_t permutation_window_count(double rate, std::uint32_t record_length, std::uint32_t window_size);

/// Coverage target rate * record_length expressed as an integer position count
/// (the smallest integer >= the target).
std::uint32_t coverage_target(double rate, std::uint32_t record_length);

CorruptionResult corrupt_sample_level(const Corpus& input, const CorruptionSpec& spec, unsigned threads = 0);
CorruptionResult corrupt_token_permutation(const Corpus& input, const CorruptionSpec& spec, unsigned threads = 0);
CorruptionResult corrupt_span(const Corpus& input, const CorruptionSpec& spec, unsigned threads = 0);
CorruptionResult corrupt_token_level(const Corpus& input, const CorruptionSpec& spec, unsigned threads = 0);

/// Dispatches on spec.protocol.
CorruptionResult corrupt(const Corpus& input, const CorruptionSpec& spec, unsigned threads = 0);

} // namespace pptkit
