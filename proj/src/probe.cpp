#include "pptkit/probe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pptkit/detail/bytes.hpp"
#include "pptkit/parallel.hpp"

namespace pptkit {

AttentionDump::AttentionDump(std::uint16_t n_layers, std::uint16_t n_heads, std::uint32_t seq_len,
                             std::size_t n_sequences)
    : n_layers_(n_layers), n_heads_(n_heads), seq_len_(seq_len), mask_(seq_len, n_sequences),
      weights_(n_sequences * n_layers * n_heads * std::size_t{seq_len} * seq_len, 0.0f) {}

std::size_t AttentionDump::offset(std::size_t seq, std::size_t layer, std::size_t head) const {
    if (seq >= n_sequences() || layer >= n_layers_ || head >= n_heads_) {
        throw DomainError("attention index (" + std::to_string(seq) + ", " + std::to_string(layer) + ", " +
                          std::to_string(head) + ") out of range");
    }
    const std::size_t block = std::size_t{seq_len_} * seq_len_;
    return ((seq * n_layers_ + layer) * n_heads_ + head) * block;
}

Eigen::Map<const AttentionMatrix> AttentionDump::attention(std::size_t seq, std::size_t layer,
                                                           std::size_t head) const {
    return {weights_.data() + offset(seq, layer, head), seq_len_, seq_len_};
}

Eigen::Map<AttentionMatrix> AttentionDump::attention(std::size_t seq, std::size_t layer, std::size_t head) {
    return {weights_.data() + offset(seq, layer, head), seq_len_, seq_len_};
}

bool AttentionDump::same_probe(const AttentionDump& other) const {
    return n_layers_ == other.n_layers_ && n_heads_ == other.n_heads_ && seq_len_ == other.seq_len_ &&
           mask_ == other.mask_;
}

void validate_dump(const AttentionDump& dump, double tolerance) {
    const std::size_t len = dump.seq_len();
    for (std::size_t s = 0; s < dump.n_sequences(); ++s) {
        for (std::size_t l = 0; l < dump.n_layers(); ++l) {
            for (std::size_t h = 0; h < dump.n_heads(); ++h) {
                const auto a = dump.attention(s, l, h);
                for (std::size_t q = 0; q < len; ++q) {
                    double sum = 0.0;
                    bool ok = true;
                    for (std::size_t k = 0; k < len; ++k) {
                        const float w = a(q, k);
                        if (!std::isfinite(w) || w < 0.0f || (k > q && w != 0.0f)) ok = false;
                        if (k <= q) sum += w;
                    }
                    if (!ok || std::abs(sum - 1.0) > tolerance) {
                        std::ostringstream msg;
                        msg << "attention row (sequence " << s << ", layer " << l << ", head " << h << ", query "
                            << q << ") is not a causal distribution (prefix sum " << sum << ")";
                        throw NormalizationError(msg.str());
                    }
                }
            }
        }
    }
}

ProbeResult compute_r_noise(const AttentionDump& dump, QueryAveraging averaging, unsigned threads) {
    validate_dump(dump);
    const std::size_t len = dump.seq_len();
    const std::size_t n_seq = dump.n_sequences();

    std::vector<std::vector<std::size_t>> noisy(n_seq);
    std::uint64_t noisy_queries = 0;
    std::size_t sequences_with_noise = 0;
    for (std::size_t s = 0; s < n_seq; ++s) {
        for (std::size_t p = 0; p < len; ++p) {
            if (dump.mask().test(s, p)) noisy[s].push_back(p);
        }
        noisy_queries += noisy[s].size();
        if (!noisy[s].empty()) ++sequences_with_noise;
    }
    if (noisy_queries == 0) throw EmptyProbeError("probe dump has no noisy query positions");

    ProbeResult result;
    result.noisy_queries = noisy_queries;
    result.r_noise = Eigen::MatrixXd::Zero(dump.n_layers(), dump.n_heads());
    const std::size_t n_heads = dump.n_heads();
    parallel_for(std::size_t{dump.n_layers()} * n_heads, threads, [&](std::size_t lh) {
        const std::size_t l = lh / n_heads;
        const std::size_t h = lh % n_heads;
        double pooled = 0.0;
        double mean_of_sequences = 0.0;
        for (std::size_t s = 0; s < n_seq; ++s) {
            if (noisy[s].empty()) continue;
            const auto a = dump.attention(s, l, h);
            double seq_sum = 0.0;
            // noisy[s] is sorted, so the noisy keys of query q are a prefix of it.
            for (std::size_t qi = 0; qi < noisy[s].size(); ++qi) {
                const std::size_t q = noisy[s][qi];
                double mass = 0.0;
                for (std::size_t ki = 0; ki <= qi; ++ki) mass += a(q, noisy[s][ki]);
                seq_sum += mass;
            }
            pooled += seq_sum;
            mean_of_sequences += seq_sum / static_cast<double>(noisy[s].size());
        }
        result.r_noise(l, h) = averaging == QueryAveraging::pooled
                                   ? pooled / static_cast<double>(noisy_queries)
                                   : mean_of_sequences / static_cast<double>(sequences_with_noise);
    });
    result.layer_mean = result.r_noise.rowwise().mean();
    return result;
}

ProbeResult compute_delta(const AttentionDump& a, const AttentionDump& b, QueryAveraging averaging,
                          unsigned threads) {
    if (a.n_layers() != b.n_layers() || a.n_heads() != b.n_heads() || a.seq_len() != b.seq_len()) {
        throw ContrastError("contrasted dumps differ in shape");
    }
    if (!a.same_probe(b)) throw ContrastError("contrasted dumps were taken on different probe masks");
    ProbeResult ra = compute_r_noise(a, averaging, threads);
    const ProbeResult rb = compute_r_noise(b, averaging, threads);
    ra.delta = ra.r_noise - rb.r_noise;
    return ra;
}

ProbeResult average_delta(std::span<const AttentionDump> a, std::span<const AttentionDump> b,
                          QueryAveraging averaging, unsigned threads) {
    if (a.empty() || a.size() != b.size()) throw ContrastError("need equally many non-empty dumps on both sides");
    ProbeResult sum = compute_delta(a[0], b[0], averaging, threads);
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (a[i].n_layers() != a[0].n_layers() || a[i].n_heads() != a[0].n_heads()) {
            throw ContrastError("seed pairs differ in layer/head shape");
        }
        const ProbeResult next = compute_delta(a[i], b[i], averaging, threads);
        sum.r_noise += next.r_noise;
        *sum.delta += *next.delta;
        sum.noisy_queries += next.noisy_queries;
    }
    const double n = static_cast<double>(a.size());
    sum.r_noise /= n;
    *sum.delta /= n;
    sum.layer_mean = sum.r_noise.rowwise().mean();
    return sum;
}

HeadRanking rank_heads(const Eigen::MatrixXd& delta, std::size_t top_k) {
    HeadRanking out;
    for (Eigen::Index l = 0; l < delta.rows(); ++l) {
        for (Eigen::Index h = 0; h < delta.cols(); ++h) {
            out.heads.push_back({static_cast<std::size_t>(l), static_cast<std::size_t>(h), delta(l, h)});
        }
    }
    std::stable_sort(out.heads.begin(), out.heads.end(),
                     [](const RankedHead& x, const RankedHead& y) { return x.delta < y.delta; });
    if (top_k > out.heads.size()) {
        out.clipped = true;
    } else {
        out.heads.resize(top_k);
    }
    return out;
}

HeadRanking rank_heads(const ProbeResult& result, std::size_t top_k) {
    if (!result.delta) throw DomainError("head ranking needs a delta; contrast two dumps first");
    return rank_heads(*result.delta, top_k);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open manifest '" + manifest.string() + "'");
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        ManifestEntry e;
        std::string path;
        if (!(fields >> e.step)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw FormatError("manifest line " + std::to_string(line_no) + ": expected 'step path'");
        }
        if (!(fields >> path)) throw FormatError("manifest line " + std::to_string(line_no) + ": missing dump path");
        e.dump = path;
        if (e.dump.is_relative()) e.dump = manifest.parent_path() / e.dump;
        entries.push_back(std::move(e));
    }
    std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) { return x.step < y.step; });
    return entries;
}

std::vector<TrajectoryPoint> probe_trajectory(std::span<const ManifestEntry> entries, QueryAveraging averaging,
                                              unsigned threads) {
    std::vector<TrajectoryPoint> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        const ProbeResult r = compute_r_noise(load_dump(e.dump), averaging, threads);
        out.push_back({e.step, r.layer_mean});
    }
    return out;
}

void write_dump(const AttentionDump& dump, std::ostream& sink) {
    std::string header(kDumpMagic);
    detail::put_le(header, kDumpVersion);
    detail::put_le(header, dump.n_layers());
    detail::put_le(header, dump.n_heads());
    detail::put_le(header, dump.seq_len());
    detail::put_le(header, static_cast<std::uint32_t>(dump.n_sequences()));
    detail::write_all(sink, header);

    std::string block;
    for (std::size_t s = 0; s < dump.n_sequences(); ++s) {
        block.clear();
        const auto bits = dump.mask().record_bytes(s);
        block.append(reinterpret_cast<const char*>(bits.data()), bits.size());
        for (std::size_t l = 0; l < dump.n_layers(); ++l) {
            for (std::size_t h = 0; h < dump.n_heads(); ++h) {
                const auto a = dump.attention(s, l, h);
                for (Eigen::Index i = 0; i < a.size(); ++i) detail::put_f32(block, a.data()[i]);
            }
        }
        detail::write_all(sink, block);
    }
}

AttentionDump read_dump(std::istream& source) {
    unsigned char raw[kDumpHeaderBytes];
    detail::read_exact(source, raw, sizeof raw, 0, "attention dump header");
    detail::check_magic(std::string_view(reinterpret_cast<const char*>(raw), 8), kDumpMagic);
    const auto version = detail::get_le<std::uint16_t>(raw + 8);
    if (version != kDumpVersion) throw FormatError("unsupported attention dump version " + std::to_string(version));
    const auto layers = detail::get_le<std::uint16_t>(raw + 10);
    const auto heads = detail::get_le<std::uint16_t>(raw + 12);
    const auto len = detail::get_le<std::uint32_t>(raw + 14);
    const auto n_seq = detail::get_le<std::uint32_t>(raw + 18);

    AttentionDump dump(layers, heads, len, n_seq);
    const std::size_t mask_bytes = dump.mask().bytes_per_record();
    const std::size_t block_floats = std::size_t{layers} * heads * len * len;
    std::vector<unsigned char> buffer(mask_bytes + 4 * block_floats);
    std::uint64_t offset = kDumpHeaderBytes;
    for (std::size_t s = 0; s < n_seq; ++s) {
        detail::read_exact(source, buffer.data(), buffer.size(), offset, "attention dump sequence");
        offset += buffer.size();
        auto bits = dump.mask().record_bytes(s);
        std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(mask_bytes), bits.begin());
        if (len % 8 != 0 && (bits.back() >> (len % 8)) != 0) {
            throw FormatError("attention dump mask for sequence " + std::to_string(s) + " has bits past seq_len");
        }
        float* dst = layers && heads ? dump.attention(s, 0, 0).data() : nullptr;
        for (std::size_t i = 0; i < block_floats; ++i) {
            dst[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(buffer.data() + mask_bytes + 4 * i));
        }
    }
    return dump;
}

void save_dump(const AttentionDump& dump, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_dump(dump, out);
}

AttentionDump load_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    AttentionDump dump = read_dump(in);
    validate_dump(dump);
    return dump;
}

} // namespace pptkit
