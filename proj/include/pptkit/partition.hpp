#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pptkit/error.hpp"

namespace pptkit {

/// One document scored by an external reference model (mean next-token
/// cross-entropy, nats/token; higher means noisier).
struct ScoredDocument {
    std::string doc_id;
    std::uint64_t token_count = 0;
    double score = 0.0;

    friend bool operator==(const ScoredDocument&, const ScoredDocument&) = default;
};

/// Parses `doc_id \t token_count \t score` lines. Blank lines are skipped.
std::vector<ScoredDocument> read_scored_documents(std::istream& in);
std::vector<ScoredDocument> load_scored_documents(const std::filesystem::path& path);

/// Nearest-rank percentile rank: ceil(pct / 100 * n), at least 1.
std::size_t nearest_rank(double pct, std::size_t n);

struct Partition {
    std::vector<ScoredDocument> clean;  ///< bottom of the ranking, ascending score
    std::vector<ScoredDocument> noisy;  ///< top of the ranking, descending score
    std::size_t middle_count = 0;
    double low_cutoff = 0.0;
    double high_cutoff = 0.0;
    std::size_t low_rank = 0;
    std::size_t high_rank = 0;
};

inline constexpr double kDefaultLowPercentile = 33.0;
inline constexpr double kDefaultHighPercentile = 67.0;

/// Ranks documents by (score, doc_id, token_count). The first low_rank
/// documents form the clean set; documents from position high_rank - 1 on form
/// the noisy set. Both sets are listed extremes first.
Partition partition_by_percentile(std::span<const ScoredDocument> docs, double low_pct = kDefaultLowPercentile,
                                  double high_pct = kDefaultHighPercentile);

class InsufficientTokensError : public DomainError {
public:
    InsufficientTokensError(std::uint64_t available, std::uint64_t budget)
        : DomainError("subset holds " + std::to_string(available) + " tokens, short of budget " +
                      std::to_string(budget) + " by " + std::to_string(budget - available)),
          shortfall_(budget - available) {}

    std::uint64_t shortfall() const noexcept { return shortfall_; }

private:
    std::uint64_t shortfall_;
};

struct BudgetSelection {
    std::vector<ScoredDocument> selected;
    std::uint64_t realized_tokens = 0;
};

inline constexpr std::uint64_t kPaperSubsetBudget = 660'000'000;

/// Takes documents in the given order until the running token total first
/// reaches the budget.
BudgetSelection accumulate_budget(std::span<const ScoredDocument> ordered, std::uint64_t token_budget);

} // namespace pptkit
