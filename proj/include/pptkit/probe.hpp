#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pptkit/corpusio.hpp"

namespace pptkit {

using AttentionMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Causal attention weights for every (sequence, layer, head) plus the noise
/// mask of each probe sequence. Storage is sequence-major, then layer, head,
/// query row, key column.
class AttentionDump {
public:
    AttentionDump() = default;
    AttentionDump(std::uint16_t n_layers, std::uint16_t n_heads, std::uint32_t seq_len, std::size_t n_sequences);

    std::uint16_t n_layers() const noexcept { return n_layers_; }
    std::uint16_t n_heads() const noexcept { return n_heads_; }
    std::uint32_t seq_len() const noexcept { return seq_len_; }
    std::size_t n_sequences() const noexcept { return mask_.size(); }

    const NoiseMask& mask() const noexcept { return mask_; }
    NoiseMask& mask() noexcept { return mask_; }

    Eigen::Map<const AttentionMatrix> attention(std::size_t seq, std::size_t layer, std::size_t head) const;
    Eigen::Map<AttentionMatrix> attention(std::size_t seq, std::size_t layer, std::size_t head);

    std::span<const float> weights() const noexcept { return weights_; }

    /// Same (layers, heads, seq_len) and identical masks.
    bool same_probe(const AttentionDump& other) const;

    friend bool operator==(const AttentionDump&, const AttentionDump&) = default;

private:
    std::size_t offset(std::size_t seq, std::size_t layer, std::size_t head) const;

    std::uint16_t n_layers_ = 0;
    std::uint16_t n_heads_ = 0;
    std::uint32_t seq_len_ = 0;
    NoiseMask mask_;
    std::vector<float> weights_;
};

class EmptyProbeError : public DomainError {
public:
    using DomainError::DomainError;
};

/// A row is negative, attends to the future, or does not sum to 1.
class NormalizationError : public DomainError {
public:
    using DomainError::DomainError;
};

class ContrastError : public DomainError {
public:
    using DomainError::DomainError;
};

inline constexpr double kRowSumTolerance = 1e-3;

/// Throws NormalizationError naming (sequence, layer, head, query) for the
/// first malformed row.
void validate_dump(const AttentionDump& dump, double tolerance = kRowSumTolerance);

enum class QueryAveraging {
    pooled,       ///< one average over all noisy queries of all sequences
    per_sequence, ///< average per sequence, then mean over sequences with noisy queries
};

struct ProbeResult {
    Eigen::MatrixXd r_noise;     ///< layers x heads
    Eigen::VectorXd layer_mean;  ///< mean over heads
    std::optional<Eigen::MatrixXd> delta;
    std::uint64_t noisy_queries = 0;
};

/// Mean over noisy queries q of the attention mass q puts on noisy keys k <= q.
ProbeResult compute_r_noise(const AttentionDump& dump, QueryAveraging averaging = QueryAveraging::pooled,
                            unsigned threads = 0);

/// r_noise(a) - r_noise(b) per head; both dumps must share the probe inputs.
ProbeResult compute_delta(const AttentionDump& a, const AttentionDump& b,
                          QueryAveraging averaging = QueryAveraging::pooled, unsigned threads = 0);

/// Mean of per-pair deltas over seed-paired dumps (a[i], b[i]). r_noise and
/// layer_mean in the result are the averages over the `a` side.
ProbeResult average_delta(std::span<const AttentionDump> a, std::span<const AttentionDump> b,
                          QueryAveraging averaging = QueryAveraging::pooled, unsigned threads = 0);

struct RankedHead {
    std::size_t layer = 0;
    std::size_t head = 0;
    double delta = 0.0;

    friend bool operator==(const RankedHead&, const RankedHead&) = default;
};

struct HeadRanking {
    std::vector<RankedHead> heads;
    bool clipped = false; ///< top_k exceeded the head count
};

inline constexpr std::size_t kDefaultTopK = 20;

/// Heads in ascending delta order, ties by (layer, head).
HeadRanking rank_heads(const Eigen::MatrixXd& delta, std::size_t top_k = kDefaultTopK);
HeadRanking rank_heads(const ProbeResult& result, std::size_t top_k = kDefaultTopK);

// --- checkpoint series ------------------------------------------------------

struct ManifestEntry {
    std::uint64_t step = 0;
    std::filesystem::path dump;
};

/// Lines of `step<TAB or space>path`; '#' starts a comment. Relative paths are
/// resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

struct TrajectoryPoint {
    std::uint64_t step = 0;
    Eigen::VectorXd layer_mean;
};

std::vector<TrajectoryPoint> probe_trajectory(std::span<const ManifestEntry> entries,
                                              QueryAveraging averaging = QueryAveraging::pooled,
                                              unsigned threads = 0);

// --- dump files -------------------------------------------------------------

inline constexpr std::string_view kDumpMagic = "ATTNDMP1";
inline constexpr std::uint16_t kDumpVersion = 1;
/// magic(8) + version(2) + layers(2) + heads(2) + seq_len(4) + sequences(4)
inline constexpr std::size_t kDumpHeaderBytes = 22;

void write_dump(const AttentionDump& dump, std::ostream& sink);
AttentionDump read_dump(std::istream& source);
void save_dump(const AttentionDump& dump, const std::filesystem::path& path);
/// Loads and validates row normalization.
AttentionDump load_dump(const std::filesystem::path& path);

} // namespace pptkit
