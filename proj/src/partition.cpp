#include "pptkit/partition.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <tuple>

namespace pptkit {

namespace {

bool rank_less(const ScoredDocument& a, const ScoredDocument& b) {
    return std::tie(a.score, a.doc_id, a.token_count) < std::tie(b.score, b.doc_id, b.token_count);
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

} // namespace

std::vector<ScoredDocument> read_scored_documents(std::istream& in) {
    std::vector<ScoredDocument> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        const std::string where = "score file line " + std::to_string(line_no);
        if (fields.size() != 3) throw FormatError(where + ": expected 3 tab-separated fields");

        ScoredDocument doc;
        doc.doc_id = fields[0];
        const auto& count = fields[1];
        const auto [end, ec] = std::from_chars(count.data(), count.data() + count.size(), doc.token_count);
        if (ec != std::errc{} || end != count.data() + count.size()) {
            throw FormatError(where + ": bad token count '" + count + "'");
        }
        try {
            std::size_t used = 0;
            doc.score = std::stod(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw FormatError(where + ": bad score '" + fields[2] + "'");
        }
        if (doc.token_count < 1) throw DomainError(where + ": token count must be >= 1");
        if (!std::isfinite(doc.score)) throw DomainError(where + ": score must be finite");
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<ScoredDocument> load_scored_documents(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return read_scored_documents(in);
}

std::size_t nearest_rank(double pct, std::size_t n) {
    const long double exact = static_cast<long double>(pct) / 100.0L * static_cast<long double>(n);
    const auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9L * std::max<long double>(1.0L, exact)));
    return std::clamp<std::size_t>(rank, 1, n);
}

Partition partition_by_percentile(std::span<const ScoredDocument> docs, double low_pct, double high_pct) {
    if (docs.empty()) throw DomainError("cannot partition an empty document list");
    if (!(low_pct > 0.0 && low_pct < high_pct && high_pct < 100.0)) {
        throw DomainError("percentiles need 0 < low < high < 100");
    }
    std::vector<ScoredDocument> ranked(docs.begin(), docs.end());
    std::sort(ranked.begin(), ranked.end(), rank_less);
    const std::size_t n = ranked.size();

    Partition out;
    out.low_rank = nearest_rank(low_pct, n);
    out.high_rank = nearest_rank(high_pct, n);
    out.low_cutoff = ranked[out.low_rank - 1].score;
    out.high_cutoff = ranked[out.high_rank - 1].score;

    const std::size_t noisy_begin = std::max(out.high_rank - 1, out.low_rank);
    out.clean.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(out.low_rank));
    out.noisy.assign(ranked.rbegin(), ranked.rbegin() + static_cast<std::ptrdiff_t>(n - noisy_begin));
    out.middle_count = noisy_begin - out.low_rank;
    return out;
}

BudgetSelection accumulate_budget(std::span<const ScoredDocument> ordered, std::uint64_t token_budget) {
    if (token_budget < 1) throw DomainError("token budget must be >= 1");
    BudgetSelection out;
    for (const auto& doc : ordered) {
        if (out.realized_tokens >= token_budget) break;
        out.selected.push_back(doc);
        out.realized_tokens += doc.token_count;
    }
    if (out.realized_tokens < token_budget) throw InsufficientTokensError(out.realized_tokens, token_budget);
    return out;
}

} // namespace pptkit
