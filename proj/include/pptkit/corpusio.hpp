#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "pptkit/error.hpp"

namespace pptkit {

using Token = std::uint32_t;
using TokenSequence = std::vector<Token>;

inline constexpr std::string_view kCorpusMagic = "PPTCORP1";
inline constexpr std::string_view kMaskMagic = "PPTMASK1";
inline constexpr std::uint16_t kCorpusVersion = 1;
inline constexpr std::uint16_t kMaskVersion = 1;
inline constexpr std::size_t kTokenBytes = 4;
/// magic(8) + version(2) + vocab(4) + record length(4) + record count(8)
inline constexpr std::size_t kCorpusHeaderBytes = 26;
/// magic(8) + version(2) + record length(4) + record count(8)
inline constexpr std::size_t kMaskHeaderBytes = 22;

/// Token ids are valid in [0, size).
struct VocabSpec {
    std::uint32_t size = 0;

    bool contains(Token t) const noexcept { return t < size; }
    friend bool operator==(const VocabSpec&, const VocabSpec&) = default;
};

/// Fixed-width records stored back to back.
class Corpus {
public:
    Corpus() = default;
    Corpus(VocabSpec vocab, std::uint32_t record_length);

    /// `count` zero-filled records.
    static Corpus zeros(VocabSpec vocab, std::uint32_t record_length, std::size_t count);

    VocabSpec vocab() const noexcept { return vocab_; }
    std::uint32_t record_length() const noexcept { return record_length_; }
    std::size_t size() const noexcept {
        return record_length_ == 0 ? 0 : tokens_.size() / record_length_;
    }
    bool empty() const noexcept { return tokens_.empty(); }
    std::size_t token_count() const noexcept { return tokens_.size(); }

    std::span<const Token> record(std::size_t i) const;
    std::span<Token> record(std::size_t i);

    /// Appends one record; its length must equal record_length() and its
    /// tokens must lie in the vocabulary.
    void append(std::span<const Token> sequence);

    std::span<const Token> tokens() const noexcept { return tokens_; }
    std::span<Token> tokens() noexcept { return tokens_; }

    friend bool operator==(const Corpus&, const Corpus&) = default;

private:
    VocabSpec vocab_{};
    std::uint32_t record_length_ = 0;
    std::vector<Token> tokens_;
};

struct CorpusHeader {
    std::uint16_t version = kCorpusVersion;
    VocabSpec vocab{};
    std::uint32_t record_length = 0;
    std::uint64_t record_count = 0;

    std::uint64_t record_bytes() const noexcept { return std::uint64_t{record_length} * kTokenBytes; }
    std::uint64_t file_bytes() const noexcept { return kCorpusHeaderBytes + record_count * record_bytes(); }
};

/// One bit per token position, packed 8 per byte, LSB first. Bit set = corrupted.
class NoiseMask {
public:
    NoiseMask() = default;
    NoiseMask(std::uint32_t record_length, std::size_t record_count);

    std::uint32_t record_length() const noexcept { return record_length_; }
    std::size_t size() const noexcept { return record_count_; }
    std::size_t bytes_per_record() const noexcept { return (record_length_ + 7) / 8; }

    bool test(std::size_t record, std::size_t pos) const;
    void set(std::size_t record, std::size_t pos, bool value = true);
    void set_record(std::size_t record, bool value);
    /// Number of set bits in a record.
    std::size_t covered(std::size_t record) const;
    std::size_t covered_total() const;

    std::span<const std::uint8_t> record_bytes(std::size_t record) const;
    std::span<std::uint8_t> record_bytes(std::size_t record);

    friend bool operator==(const NoiseMask&, const NoiseMask&) = default;

private:
    std::uint32_t record_length_ = 0;
    std::size_t record_count_ = 0;
    std::vector<std::uint8_t> bits_;
};

// --- corpus streams -------------------------------------------------------

/// Append-only streaming writer. The record count is patched into the header
/// by finish(), so the sink must be seekable.
class CorpusWriter {
public:
    CorpusWriter(std::ostream& sink, VocabSpec vocab, std::uint32_t record_length);

    void append(std::span<const Token> sequence);
    /// Writes the final count; returns it.
    std::uint64_t finish();

    std::uint64_t count() const noexcept { return count_; }

private:
    std::ostream& sink_;
    std::streamoff header_pos_;
    VocabSpec vocab_;
    std::uint32_t record_length_;
    std::uint64_t count_ = 0;
    std::vector<char> buffer_;
    bool finished_ = false;
};

/// Throws FormatError on mixed lengths, DomainError on out-of-vocab tokens.
std::uint64_t write_corpus(std::span<const TokenSequence> sequences, VocabSpec vocab, std::ostream& sink);
std::uint64_t write_corpus(const Corpus& corpus, std::ostream& sink);

CorpusHeader read_corpus_header(std::istream& source);
Corpus read_corpus(std::istream& source);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

/// Random access to records of a corpus file. Each call opens its own stream,
/// so concurrent reads over disjoint ranges need no locking.
class CorpusReader {
public:
    explicit CorpusReader(std::filesystem::path path);

    const CorpusHeader& header() const noexcept { return header_; }
    TokenSequence read_record(std::uint64_t index) const;
    Corpus read_range(std::uint64_t first, std::uint64_t count) const;

private:
    std::filesystem::path path_;
    CorpusHeader header_;
};

// --- noise masks ----------------------------------------------------------

void write_mask(const NoiseMask& mask, std::ostream& sink);
NoiseMask read_mask(std::istream& source);
void save_mask(const NoiseMask& mask, const std::filesystem::path& path);
NoiseMask load_mask(const std::filesystem::path& path);

/// Throws FormatError unless the mask's record count and length match the corpus.
void check_pairing(const Corpus& corpus, const NoiseMask& mask);

struct MaskedCorpus {
    Corpus corpus;
    NoiseMask mask;
};

/// Loads a corpus with its sidecar mask, rejecting mismatched pairs.
MaskedCorpus load_masked_corpus(const std::filesystem::path& corpus_path,
                                const std::filesystem::path& mask_path);

// --- packing --------------------------------------------------------------

/// Concatenates documents into one logical stream and cuts it into
/// consecutive fixed-length records. A trailing partial record is dropped.
class Packer {
public:
    Packer(VocabSpec vocab, std::uint32_t record_length);

    void push(std::span<const Token> document);
    /// Tokens buffered toward the next record; these are dropped by take().
    std::size_t pending() const noexcept { return pending_.size(); }
    Corpus take();

private:
    Corpus out_;
    TokenSequence pending_;
};

Corpus pack_tokens(std::span<const TokenSequence> raw, VocabSpec vocab, std::uint32_t record_length);

} // namespace pptkit
