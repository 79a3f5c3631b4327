#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pptkit/corpusio.hpp"
#include "pptkit/error.hpp"
#include "pptkit/parallel.hpp"
#include "pptkit/rng.hpp"

namespace pptkit {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Configuration of the frozen RNN ensemble.
struct EnsembleSpec {
    std::uint32_t generators = 1000; ///< M
    std::uint32_t hidden = 64;       ///< H
    std::uint32_t vocab = 50304;     ///< V
    double temperature = 1.0;        ///< tau
    double spectral_target = 0.9;    ///< rho
    std::uint64_t master_seed = 0;

    void validate() const {
        if (generators < 1) throw DomainError("generator count must be >= 1");
        if (hidden < 1) throw DomainError("hidden size must be >= 1");
        if (vocab < 1) throw DomainError("vocab size must be >= 1");
        if (!(temperature > 0.0) || !std::isfinite(temperature)) {
            throw DomainError("temperature must be > 0, got " + std::to_string(temperature));
        }
        if (!(spectral_target > 0.0 && spectral_target < 1.0)) {
            throw DomainError("spectral target must lie in (0, 1), got " + std::to_string(spectral_target));
        }
    }
};

class DegenerateSpectrumError : public DomainError {
public:
    using DomainError::DomainError;
};

struct PowerIterationOptions {
    double tolerance = 1e-8; ///< relative change between successive estimates
    int max_iterations = 1000;
    int krylov_window = 8;   ///< vectors used for the Ritz estimate at each step
};

struct SpectralEstimate {
    double radius = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest Ritz-value modulus of W on span{x, Wx, ..., W^{m-1}x} (x unit norm).
template <class Derived, class Vec>
double ritz_radius(const Eigen::MatrixBase<Derived>& w, const Vec& x, int window) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = w.rows();
    const Eigen::Index m = std::min<Eigen::Index>(n, std::max(1, window));
    MatrixX<Scalar> basis(n, m);
    basis.col(0) = x;
    Eigen::Index dim = 1;
    for (; dim < m; ++dim) {
        VectorX<Scalar> next = w * basis.col(dim - 1);
        const Scalar scale = next.norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index j = 0; j < dim; ++j) next -= basis.col(j).dot(next) * basis.col(j);
        }
        const Scalar rest = next.norm();
        if (rest <= Scalar(1e-12) * std::max(scale, Scalar(1e-300))) break; // invariant subspace
        basis.col(dim) = next / rest;
    }
    const auto q = basis.leftCols(dim);
    const Eigen::MatrixXd projected = (q.transpose() * (w * q)).template cast<double>();
    if (dim == 1) return std::abs(projected(0, 0));
    Eigen::EigenSolver<Eigen::MatrixXd> solver(projected, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Spectral radius of a square matrix by power iteration from a seeded
/// Gaussian start vector.
///
/// A real matrix whose dominant eigenvalues form a complex pair (or a cluster
/// of nearly equal moduli) never settles to a single direction, so each
/// iterate x is expanded into a short Krylov window and the radius is read off
/// the Rayleigh-Ritz projection onto it. Once x lies in the dominant invariant
/// subspace that projection is exact.
template <class Derived>
SpectralEstimate estimate_spectral_radius(const Eigen::MatrixBase<Derived>& w, std::uint64_t seed,
                                          const PowerIterationOptions& options = {}) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = w.rows();
    if (n < 1 || w.cols() != n) throw DomainError("spectral radius needs a non-empty square matrix");

    CounterRng rng(seed);
    VectorX<Scalar> x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = static_cast<Scalar>(rng.gaussian());
    x.normalize();

    SpectralEstimate out;
    double previous = -1.0;
    int stable = 0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        out.iterations = it;
        const VectorX<Scalar> y = w * x;
        const Scalar ny = y.norm();
        if (ny == Scalar(0)) {
            out.radius = 0.0;
            out.converged = true;
            return out;
        }
        const double estimate = ritz_radius(w, x, options.krylov_window);
        x = y / ny;
        out.radius = estimate;
        if (previous >= 0.0 && std::abs(estimate - previous) <= options.tolerance * std::abs(estimate)) {
            if (++stable >= 2) {
                out.converged = true;
                return out;
            }
        } else {
            stable = 0;
        }
        previous = estimate;
    }
    return out;
}

/// Returns W * (target / estimated radius). Throws DegenerateSpectrumError
/// when the estimate is below 1e-12.
template <class Derived>
MatrixX<typename Derived::Scalar> spectral_rescale(const Eigen::MatrixBase<Derived>& w, double target,
                                                   std::uint64_t seed, const PowerIterationOptions& options = {}) {
    using Scalar = typename Derived::Scalar;
    if (!(target > 0.0)) throw DomainError("spectral target must be > 0");
    const SpectralEstimate est = estimate_spectral_radius(w, seed, options);
    if (est.radius < 1e-12) {
        throw DegenerateSpectrumError("estimated spectral radius " + std::to_string(est.radius) +
                                      " is too small to rescale");
    }
    return w * static_cast<Scalar>(target / est.radius);
}

/// One frozen generator: h_t = A e_{x_{t-1}} + W h_{t-1} + b, logits = C h_t + d.
template <class Scalar = double>
struct RnnGenerator {
    MatrixX<Scalar> input;      ///< A, H x V
    MatrixX<Scalar> recurrent;  ///< W, H x H
    VectorX<Scalar> hidden_bias; ///< b, H
    MatrixX<Scalar> output;     ///< C, V x H
    VectorX<Scalar> output_bias; ///< d, V
    std::uint64_t seed = 0;

    Eigen::Index hidden_size() const noexcept { return recurrent.rows(); }
    Eigen::Index vocab_size() const noexcept { return output.rows(); }
};

inline std::uint64_t generator_seed(const EnsembleSpec& spec, std::uint64_t index) {
    return derive_seed(spec.master_seed, "generator", index);
}

/// Samples generator `index` of the ensemble. Draw order is A, W (before
/// rescaling), C, each row-major; biases start at zero.
template <class Scalar = double>
RnnGenerator<Scalar> init_generator(const EnsembleSpec& spec, std::uint32_t index) {
    spec.validate();
    if (index >= spec.generators) {
        throw DomainError("generator index " + std::to_string(index) + " outside ensemble of " +
                          std::to_string(spec.generators));
    }
    const Eigen::Index h = spec.hidden;
    const Eigen::Index v = spec.vocab;
    RnnGenerator<Scalar> gen;
    gen.seed = generator_seed(spec, index);
    CounterRng rng(gen.seed);

    auto fill = [&rng](MatrixX<Scalar>& m, Eigen::Index rows, Eigen::Index cols, double std_dev) {
        m.resize(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = static_cast<Scalar>(std_dev * rng.gaussian());
    };
    fill(gen.input, h, v, 1.0 / std::sqrt(static_cast<double>(v)));
    MatrixX<Scalar> raw_recurrent;
    fill(raw_recurrent, h, h, 1.0 / std::sqrt(static_cast<double>(h)));
    fill(gen.output, v, h, 1.0 / std::sqrt(static_cast<double>(h)));
    gen.hidden_bias = VectorX<Scalar>::Zero(h);
    gen.output_bias = VectorX<Scalar>::Zero(v);

    gen.recurrent = spectral_rescale(raw_recurrent, spec.spectral_target, derive_seed(gen.seed, "power", 0));
    return gen;
}

/// Softmax of logits / temperature, computed stably.
template <class Derived>
VectorX<typename Derived::Scalar> tempered_softmax(const Eigen::MatrixBase<Derived>& logits, double temperature) {
    using Scalar = typename Derived::Scalar;
    const Scalar inv_t = static_cast<Scalar>(1.0 / temperature);
    const Scalar peak = logits.maxCoeff();
    VectorX<Scalar> p = ((logits.array() - peak) * inv_t).exp().matrix();
    p /= p.sum();
    return p;
}

/// Shannon entropy in nats.
template <class Derived>
double entropy(const Eigen::MatrixBase<Derived>& probs) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const double p = static_cast<double>(probs(i));
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

struct NoStepObserver {
    template <class Vec>
    void operator()(std::size_t, const Vec&) const noexcept {}
};

/// Autoregressive sample of `length` tokens. x_0 is uniform; every later token
/// is drawn from softmax(logits / temperature). `observe(t, probs)` sees the
/// distribution each x_t (t >= 1) was drawn from.
template <class Scalar, class Observer = NoStepObserver>
TokenSequence generate_sequence(const RnnGenerator<Scalar>& gen, double temperature, std::size_t length,
                                std::uint64_t seed, Observer&& observe = {}) {
    if (!(temperature > 0.0)) throw DomainError("temperature must be > 0");
    if (length < 1) throw DomainError("sequence length must be >= 1");
    const Eigen::Index v = gen.vocab_size();
    CounterRng rng(seed);

    TokenSequence out(length);
    out[0] = static_cast<Token>(rng.below(static_cast<std::uint64_t>(v)));
    VectorX<Scalar> h = VectorX<Scalar>::Zero(gen.hidden_size());
    VectorX<Scalar> logits(v);
    for (std::size_t t = 1; t < length; ++t) {
        h = gen.input.col(out[t - 1]) + gen.recurrent * h + gen.hidden_bias;
        logits.noalias() = gen.output * h;
        logits += gen.output_bias;
        const VectorX<Scalar> probs = tempered_softmax(logits, temperature);
        observe(t, probs);

        const double u = rng.uniform();
        double cumulative = 0.0;
        Eigen::Index pick = v - 1;
        for (Eigen::Index i = 0; i < v; ++i) {
            cumulative += static_cast<double>(probs(i));
            if (u < cumulative) {
                pick = i;
                break;
            }
        }
        out[t] = static_cast<Token>(pick);
    }
    return out;
}

/// Generator used for sequence i: uniform over [0, M), keyed by (seed, "choose", i).
inline std::uint32_t choose_generator(const EnsembleSpec& spec, std::uint64_t sequence_index) {
    CounterRng rng(derive_seed(spec.master_seed, "choose", sequence_index));
    return static_cast<std::uint32_t>(rng.below(spec.generators));
}

inline std::uint64_t sequence_seed(const EnsembleSpec& spec, std::uint64_t sequence_index) {
    return derive_seed(spec.master_seed, "sample", sequence_index);
}

struct RnnCorpus {
    Corpus corpus;
    std::vector<std::uint32_t> generator_of; ///< chosen generator per sequence
};

/// Samples n_sequences of `length` tokens from the ensemble. Sequences sharing
/// a generator are produced together so each generator is built once; output
/// order is by sequence index regardless of thread count.
template <class Scalar = double>
RnnCorpus generate_corpus(const EnsembleSpec& spec, std::size_t n_sequences, std::size_t length,
                          unsigned threads = 0) {
    spec.validate();
    if (n_sequences < 1) throw DomainError("need at least one sequence");
    if (length < 1) throw DomainError("sequence length must be >= 1");

    RnnCorpus out;
    out.generator_of.resize(n_sequences);
    std::map<std::uint32_t, std::vector<std::size_t>> by_generator;
    for (std::size_t i = 0; i < n_sequences; ++i) {
        out.generator_of[i] = choose_generator(spec, i);
        by_generator[out.generator_of[i]].push_back(i);
    }
    std::vector<const std::pair<const std::uint32_t, std::vector<std::size_t>>*> groups;
    for (const auto& g : by_generator) groups.push_back(&g);

    out.corpus = Corpus::zeros(VocabSpec{spec.vocab}, static_cast<std::uint32_t>(length), n_sequences);
    parallel_for(groups.size(), threads, [&](std::size_t gi) {
        const auto& [g, members] = *groups[gi];
        const auto gen = init_generator<Scalar>(spec, g);
        for (std::size_t i : members) {
            const auto seq = generate_sequence(gen, spec.temperature, length, sequence_seed(spec, i));
            std::copy(seq.begin(), seq.end(), out.corpus.record(i).begin());
        }
    });
    return out;
}

} // namespace pptkit
