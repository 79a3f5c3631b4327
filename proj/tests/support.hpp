// Independent oracles and fixtures shared by the unit and acceptance tests.
// Nothing here calls the library routine it is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "pptkit/corpusio.hpp"
#include "pptkit/metamer.hpp"
#include "pptkit/probe.hpp"
#include "pptkit/rnngen.hpp"

namespace testing {

using namespace pptkit;

inline std::filesystem::path golden_dir() { return PPTKIT_GOLDEN_DIR; }

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name) {
        static std::uint64_t serial = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("pptkit-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(serial++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// --- rnngen -----------------------------------------------------------------

/// Largest eigenvalue modulus by a full dense eigensolve.
inline double dense_spectral_radius(const Eigen::MatrixXd& w) {
    if (w.rows() == 1) return std::abs(w(0, 0));
    Eigen::EigenSolver<Eigen::MatrixXd> solver(w, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Per-step categorical probabilities of the recurrence evaluated with plain
/// loops over the realized tokens. probs[t - 1] is the distribution of x_t.
inline std::vector<std::vector<double>> straight_line_probs(const RnnGenerator<double>& g, double tau,
                                                            const std::vector<Token>& tokens) {
    const std::size_t H = static_cast<std::size_t>(g.recurrent.rows());
    const std::size_t V = static_cast<std::size_t>(g.output.rows());
    std::vector<double> h(H, 0.0);
    std::vector<std::vector<double>> out;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
        std::vector<double> next(H, 0.0);
        for (std::size_t i = 0; i < H; ++i) {
            double acc = g.input(i, tokens[t - 1]) + g.hidden_bias(i);
            for (std::size_t j = 0; j < H; ++j) acc += g.recurrent(i, j) * h[j];
            next[i] = acc;
        }
        h = next;
        std::vector<double> z(V);
        double peak = -INFINITY;
        for (std::size_t v = 0; v < V; ++v) {
            double acc = g.output_bias(v);
            for (std::size_t j = 0; j < H; ++j) acc += g.output(v, j) * h[j];
            z[v] = acc / tau;
            peak = std::max(peak, z[v]);
        }
        double norm = 0.0;
        for (double& x : z) norm += (x = std::exp(x - peak));
        for (double& x : z) x /= norm;
        out.push_back(std::move(z));
    }
    return out;
}

// --- formalgen --------------------------------------------------------------

struct StackReport {
    bool prefix_valid = true;
    std::vector<long> final_depth;
};

/// Per-channel counters: open increments, close decrements, never below zero.
inline StackReport stack_oracle(const std::vector<Token>& seq, std::uint32_t k) {
    StackReport r;
    r.final_depth.assign(k, 0);
    for (Token t : seq) {
        const std::uint32_t c = t / 2;
        if (c >= k) {
            r.prefix_valid = false;
            continue;
        }
        r.final_depth[c] += (t % 2 == 0) ? 1 : -1;
        if (r.final_depth[c] < 0) r.prefix_valid = false;
    }
    return r;
}

// --- metamer ----------------------------------------------------------------

struct TvReport {
    double weighted = 0.0; ///< visit-weighted mean TV over the chosen contexts
    double max = 0.0;
    std::uint64_t min_visits = 0;
    std::size_t contexts = 0;
};

/// TV between the empirical next-token frequencies of `sample` and the fitted
/// trigram tables, over the `top` most frequent fitted contexts.
inline TvReport trigram_tv(const NgramModel& model, const Corpus& sample, std::size_t top) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> ranked;
    for (const auto& [key, table] : model.trigram) ranked.emplace_back(table.total(), key);
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    ranked.resize(std::min(top, ranked.size()));

    std::unordered_map<std::uint64_t, std::map<Token, std::uint64_t>> seen;
    for (const auto& [n, key] : ranked) seen[key];
    for (std::size_t r = 0; r < sample.size(); ++r) {
        const auto rec = sample.record(r);
        for (std::size_t t = 2; t < rec.size(); ++t) {
            const auto it = seen.find((std::uint64_t{rec[t - 2]} << 32) | rec[t - 1]);
            if (it != seen.end()) ++it->second[rec[t]];
        }
    }

    TvReport out;
    out.contexts = ranked.size();
    out.min_visits = ~std::uint64_t{0};
    double weighted = 0.0, visits_total = 0.0;
    for (const auto& [n, key] : ranked) {
        const auto& emp = seen[key];
        std::uint64_t visits = 0;
        for (const auto& [t, c] : emp) visits += c;
        out.min_visits = std::min(out.min_visits, visits);
        const auto& table = model.trigram.at(key);
        std::map<Token, double> diff;
        for (std::size_t i = 0; i < table.size(); ++i) {
            diff[table.keys()[i]] -= static_cast<double>(table.count_at(i)) / static_cast<double>(table.total());
        }
        for (const auto& [t, c] : emp) diff[t] += visits ? static_cast<double>(c) / static_cast<double>(visits) : 0.0;
        double tv = 0.0;
        for (const auto& [t, d] : diff) tv += std::abs(d);
        tv /= 2.0;
        out.max = std::max(out.max, tv);
        weighted += tv * static_cast<double>(visits);
        visits_total += static_cast<double>(visits);
    }
    out.weighted = visits_total > 0 ? weighted / visits_total : 1.0;
    return out;
}

// --- probe ------------------------------------------------------------------

/// r_noise of one head straight from the flat weight array.
inline double brute_r_noise(const AttentionDump& d, std::size_t layer, std::size_t head, bool per_sequence = false) {
    const std::size_t L = d.seq_len();
    const auto w = d.weights();
    double pooled = 0.0, per_seq_sum = 0.0;
    std::size_t queries = 0, seqs = 0;
    for (std::size_t s = 0; s < d.n_sequences(); ++s) {
        const std::size_t base = ((s * d.n_layers() + layer) * d.n_heads() + head) * L * L;
        double seq_mass = 0.0;
        std::size_t seq_queries = 0;
        for (std::size_t q = 0; q < L; ++q) {
            if (!d.mask().test(s, q)) continue;
            double mass = 0.0;
            for (std::size_t k = 0; k <= q; ++k) {
                if (d.mask().test(s, k)) mass += w[base + q * L + k];
            }
            seq_mass += mass;
            ++seq_queries;
        }
        pooled += seq_mass;
        queries += seq_queries;
        if (seq_queries) {
            per_seq_sum += seq_mass / static_cast<double>(seq_queries);
            ++seqs;
        }
    }
    return per_sequence ? per_seq_sum / static_cast<double>(seqs) : pooled / static_cast<double>(queries);
}

/// Random causal dump with row-normalized weights and at least one noisy position.
inline AttentionDump random_dump(std::mt19937_64& rng, std::uint16_t layers, std::uint16_t heads, std::uint32_t len,
                                 std::size_t n_seq, double noise = 0.5) {
    AttentionDump d(layers, heads, len, n_seq);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t s = 0; s < n_seq; ++s) {
        for (std::uint32_t p = 0; p < len; ++p) d.mask().set(s, p, u(rng) < noise);
    }
    d.mask().set(0, len - 1, true);
    for (std::size_t s = 0; s < n_seq; ++s) {
        for (std::size_t l = 0; l < layers; ++l) {
            for (std::size_t h = 0; h < heads; ++h) {
                auto a = d.attention(s, l, h);
                for (std::uint32_t q = 0; q < len; ++q) {
                    double total = 0.0;
                    std::vector<double> row(q + 1);
                    for (auto& x : row) total += (x = u(rng) + 1e-3);
                    for (std::uint32_t k = 0; k <= q; ++k) a(q, k) = static_cast<float>(row[k] / total);
                }
            }
        }
    }
    return d;
}

/// Causal dump whose weights are k / 2^m with rows summing to exactly 1.
inline AttentionDump dyadic_dump(std::mt19937_64& rng, std::uint16_t layers, std::uint16_t heads, std::uint32_t len,
                                 std::size_t n_seq) {
    AttentionDump d(layers, heads, len, n_seq);
    constexpr std::uint32_t kUnits = 1024;
    for (std::size_t s = 0; s < n_seq; ++s) {
        for (std::size_t l = 0; l < layers; ++l) {
            for (std::size_t h = 0; h < heads; ++h) {
                auto a = d.attention(s, l, h);
                for (std::uint32_t q = 0; q < len; ++q) {
                    std::uint32_t left = kUnits;
                    for (std::uint32_t k = 0; k < q; ++k) {
                        const std::uint32_t take = static_cast<std::uint32_t>(rng() % (left + 1));
                        a(q, k) = static_cast<float>(take) / kUnits;
                        left -= take;
                    }
                    a(q, q) = static_cast<float>(left) / kUnits;
                }
            }
        }
    }
    return d;
}

// --- golden fixtures --------------------------------------------------------

inline Corpus golden_corpus() {
    Corpus c(VocabSpec{16}, 4);
    c.append(std::vector<Token>{1, 2, 3, 4});
    c.append(std::vector<Token>{15, 0, 7, 7});
    c.append(std::vector<Token>{9, 10, 11, 12});
    return c;
}

inline NoiseMask golden_mask() {
    NoiseMask m(10, 2);
    for (std::size_t p : {0, 3, 9}) m.set(0, p);
    for (std::size_t p : {1, 2, 8}) m.set(1, p);
    return m;
}

inline AttentionDump golden_dump() {
    AttentionDump d(1, 2, 3, 2);
    d.mask().set(0, 1);
    d.mask().set(0, 2);
    d.mask().set(1, 0);
    const float rows[2][2][3][3] = {
        {{{1, 0, 0}, {0.5f, 0.5f, 0}, {0.25f, 0.25f, 0.5f}}, {{1, 0, 0}, {0.75f, 0.25f, 0}, {0, 0.5f, 0.5f}}},
        {{{1, 0, 0}, {0.125f, 0.875f, 0}, {0.5f, 0.25f, 0.25f}}, {{1, 0, 0}, {1, 0, 0}, {0.25f, 0.5f, 0.25f}}},
    };
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t h = 0; h < 2; ++h)
            for (std::size_t q = 0; q < 3; ++q)
                for (std::size_t k = 0; k < 3; ++k) d.attention(s, 0, h)(q, k) = rows[s][h][q][k];
    return d;
}

/// Source corpus of the golden n-gram model.
inline Corpus golden_ngram_source() {
    Corpus c(VocabSpec{8}, 6);
    c.append(std::vector<Token>{0, 1, 2, 0, 1, 3});
    c.append(std::vector<Token>{0, 1, 2, 5, 1, 2});
    c.append(std::vector<Token>{7, 1, 2, 0, 1, 2});
    return c;
}

} // namespace testing
