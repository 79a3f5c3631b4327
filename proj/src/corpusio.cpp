#include "pptkit/corpusio.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "pptkit/detail/bytes.hpp"

namespace pptkit {

namespace {

void check_file_vocab(VocabSpec vocab) {
    if (vocab.size < 2) throw DomainError("vocab size must be >= 2, got " + std::to_string(vocab.size));
}

void check_tokens(std::span<const Token> tokens, VocabSpec vocab) {
    const auto bad = std::find_if(tokens.begin(), tokens.end(), [&](Token t) { return !vocab.contains(t); });
    if (bad != tokens.end()) {
        throw DomainError("token " + std::to_string(*bad) + " at position " +
                          std::to_string(bad - tokens.begin()) + " is outside vocab of size " +
                          std::to_string(vocab.size));
    }
}

std::string encode_corpus_header(const CorpusHeader& h) {
    std::string out(kCorpusMagic);
    detail::put_le(out, h.version);
    detail::put_le(out, h.vocab.size);
    detail::put_le(out, h.record_length);
    detail::put_le(out, h.record_count);
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void decode_tokens(const unsigned char* src, std::span<Token> dst) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(dst.data(), src, dst.size_bytes());
    } else {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = detail::get_le<std::uint32_t>(src + 4 * i);
    }
}

void encode_tokens(std::span<const Token> src, std::vector<char>& buffer) {
    buffer.resize(src.size_bytes());
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(buffer.data(), src.data(), src.size_bytes());
    } else {
        for (std::size_t i = 0; i < src.size(); ++i) {
            for (int b = 0; b < 4; ++b) buffer[4 * i + b] = static_cast<char>((src[i] >> (8 * b)) & 0xffu);
        }
    }
}

} // namespace

// --- Corpus ---------------------------------------------------------------

Corpus::Corpus(VocabSpec vocab, std::uint32_t record_length) : vocab_(vocab), record_length_(record_length) {
    if (vocab.size == 0) throw DomainError("vocab size must be positive");
}

Corpus Corpus::zeros(VocabSpec vocab, std::uint32_t record_length, std::size_t count) {
    Corpus c(vocab, record_length);
    c.tokens_.assign(count * record_length, 0);
    return c;
}

std::span<const Token> Corpus::record(std::size_t i) const {
    if (i >= size()) throw DomainError("record index " + std::to_string(i) + " out of range");
    return std::span<const Token>(tokens_).subspan(i * record_length_, record_length_);
}

std::span<Token> Corpus::record(std::size_t i) {
    if (i >= size()) throw DomainError("record index " + std::to_string(i) + " out of range");
    return std::span<Token>(tokens_).subspan(i * record_length_, record_length_);
}

void Corpus::append(std::span<const Token> sequence) {
    if (sequence.size() != record_length_) {
        throw FormatError("record of length " + std::to_string(sequence.size()) +
                          " does not match record length " + std::to_string(record_length_));
    }
    check_tokens(sequence, vocab_);
    tokens_.insert(tokens_.end(), sequence.begin(), sequence.end());
}

// --- NoiseMask ------------------------------------------------------------

NoiseMask::NoiseMask(std::uint32_t record_length, std::size_t record_count)
    : record_length_(record_length), record_count_(record_count),
      bits_(bytes_per_record() * record_count, 0) {}

bool NoiseMask::test(std::size_t record, std::size_t pos) const {
    return (record_bytes(record)[pos / 8] >> (pos % 8)) & 1u;
}

void NoiseMask::set(std::size_t record, std::size_t pos, bool value) {
    if (pos >= record_length_) throw DomainError("mask position out of range");
    auto& byte = record_bytes(record)[pos / 8];
    const auto bit = static_cast<std::uint8_t>(1u << (pos % 8));
    byte = value ? static_cast<std::uint8_t>(byte | bit) : static_cast<std::uint8_t>(byte & ~bit);
}

void NoiseMask::set_record(std::size_t record, bool value) {
    auto bytes = record_bytes(record);
    std::fill(bytes.begin(), bytes.end(), std::uint8_t{0});
    if (!value) return;
    for (std::size_t p = 0; p < record_length_; ++p) set(record, p, true);
}

std::size_t NoiseMask::covered(std::size_t record) const {
    std::size_t n = 0;
    for (auto b : record_bytes(record)) n += static_cast<std::size_t>(std::popcount(b));
    return n;
}

std::size_t NoiseMask::covered_total() const {
    std::size_t n = 0;
    for (auto b : bits_) n += static_cast<std::size_t>(std::popcount(b));
    return n;
}

std::span<const std::uint8_t> NoiseMask::record_bytes(std::size_t record) const {
    if (record >= record_count_) throw DomainError("mask record index out of range");
    return std::span<const std::uint8_t>(bits_).subspan(record * bytes_per_record(), bytes_per_record());
}

std::span<std::uint8_t> NoiseMask::record_bytes(std::size_t record) {
    if (record >= record_count_) throw DomainError("mask record index out of range");
    return std::span<std::uint8_t>(bits_).subspan(record * bytes_per_record(), bytes_per_record());
}

// --- writing --------------------------------------------------------------

CorpusWriter::CorpusWriter(std::ostream& sink, VocabSpec vocab, std::uint32_t record_length)
    : sink_(sink), header_pos_(sink.tellp()), vocab_(vocab), record_length_(record_length) {
    check_file_vocab(vocab);
    if (header_pos_ < 0) throw IoError("corpus sink is not seekable");
    detail::write_all(sink_, encode_corpus_header({kCorpusVersion, vocab_, record_length_, 0}));
}

void CorpusWriter::append(std::span<const Token> sequence) {
    if (finished_) throw Error("append after finish");
    if (sequence.size() != record_length_) {
        throw FormatError("mixed record lengths: expected " + std::to_string(record_length_) + ", got " +
                          std::to_string(sequence.size()));
    }
    check_tokens(sequence, vocab_);
    encode_tokens(sequence, buffer_);
    sink_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!sink_) throw IoError("write failed");
    ++count_;
}

std::uint64_t CorpusWriter::finish() {
    if (finished_) return count_;
    const auto end = sink_.tellp();
    sink_.seekp(header_pos_);
    detail::write_all(sink_, encode_corpus_header({kCorpusVersion, vocab_, record_length_, count_}));
    sink_.seekp(end);
    sink_.flush();
    if (!sink_) throw IoError("write failed");
    finished_ = true;
    return count_;
}

std::uint64_t write_corpus(std::span<const TokenSequence> sequences, VocabSpec vocab, std::ostream& sink) {
    const auto length = sequences.empty() ? 0u : static_cast<std::uint32_t>(sequences.front().size());
    CorpusWriter writer(sink, vocab, length);
    for (const auto& s : sequences) writer.append(s);
    return writer.finish();
}

std::uint64_t write_corpus(const Corpus& corpus, std::ostream& sink) {
    check_file_vocab(corpus.vocab());
    const CorpusHeader header{kCorpusVersion, corpus.vocab(), corpus.record_length(), corpus.size()};
    detail::write_all(sink, encode_corpus_header(header));
    std::vector<char> buffer;
    encode_tokens(corpus.tokens(), buffer);
    sink.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (!sink) throw IoError("write failed");
    return header.record_count;
}

// --- reading --------------------------------------------------------------

CorpusHeader read_corpus_header(std::istream& source) {
    unsigned char raw[kCorpusHeaderBytes];
    detail::read_exact(source, raw, sizeof raw, 0, "corpus header");
    detail::check_magic(std::string_view(reinterpret_cast<const char*>(raw), 8), kCorpusMagic);
    CorpusHeader h;
    h.version = detail::get_le<std::uint16_t>(raw + 8);
    if (h.version != kCorpusVersion) {
        throw FormatError("unsupported corpus version " + std::to_string(h.version) + " (expected " +
                          std::to_string(kCorpusVersion) + ")");
    }
    h.vocab.size = detail::get_le<std::uint32_t>(raw + 10);
    h.record_length = detail::get_le<std::uint32_t>(raw + 14);
    h.record_count = detail::get_le<std::uint64_t>(raw + 18);
    if (h.vocab.size < 2) throw FormatError("corpus header vocab size " + std::to_string(h.vocab.size) + " < 2");
    if (h.record_length == 0 && h.record_count != 0) throw FormatError("corpus header has zero record length");
    return h;
}

Corpus read_corpus(std::istream& source) {
    const CorpusHeader h = read_corpus_header(source);
    Corpus corpus = Corpus::zeros(h.vocab, h.record_length, h.record_count);
    const std::uint64_t record_bytes = h.record_bytes();
    std::vector<unsigned char> buffer(record_bytes);
    for (std::uint64_t r = 0; r < h.record_count; ++r) {
        source.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(record_bytes));
        if (static_cast<std::uint64_t>(source.gcount()) != record_bytes) {
            throw TruncationError("corpus declares " + std::to_string(h.record_count) + " records but only " +
                                      std::to_string(r) + " are complete",
                                  kCorpusHeaderBytes + r * record_bytes);
        }
        auto dst = corpus.record(r);
        decode_tokens(buffer.data(), dst);
        const auto bad = std::find_if(dst.begin(), dst.end(), [&](Token t) { return !h.vocab.contains(t); });
        if (bad != dst.end()) {
            throw FormatError("record " + std::to_string(r) + " position " + std::to_string(bad - dst.begin()) +
                              " holds token " + std::to_string(*bad) + " outside vocab " +
                              std::to_string(h.vocab.size));
        }
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_corpus(corpus, out);
}

Corpus load_corpus(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_corpus(in);
}

CorpusReader::CorpusReader(std::filesystem::path path) : path_(std::move(path)) {
    auto in = open_in(path_);
    header_ = read_corpus_header(in);
    const auto size = std::filesystem::file_size(path_);
    if (size < header_.file_bytes()) {
        const auto complete = (size - kCorpusHeaderBytes) / std::max<std::uint64_t>(1, header_.record_bytes());
        throw TruncationError("corpus file shorter than its header declares",
                              kCorpusHeaderBytes + complete * header_.record_bytes());
    }
}

TokenSequence CorpusReader::read_record(std::uint64_t index) const {
    const Corpus c = read_range(index, 1);
    const auto r = c.record(0);
    return TokenSequence(r.begin(), r.end());
}

Corpus CorpusReader::read_range(std::uint64_t first, std::uint64_t count) const {
    if (first + count > header_.record_count) throw DomainError("record range past end of corpus");
    auto in = open_in(path_);
    in.seekg(static_cast<std::streamoff>(kCorpusHeaderBytes + first * header_.record_bytes()));
    Corpus corpus = Corpus::zeros(header_.vocab, header_.record_length, count);
    std::vector<unsigned char> buffer(count * header_.record_bytes());
    detail::read_exact(in, buffer.data(), buffer.size(), kCorpusHeaderBytes + first * header_.record_bytes(),
                       "corpus records");
    decode_tokens(buffer.data(), corpus.tokens());
    return corpus;
}

// --- masks ----------------------------------------------------------------

void write_mask(const NoiseMask& mask, std::ostream& sink) {
    std::string out(kMaskMagic);
    detail::put_le(out, kMaskVersion);
    detail::put_le(out, mask.record_length());
    detail::put_le(out, static_cast<std::uint64_t>(mask.size()));
    for (std::size_t r = 0; r < mask.size(); ++r) {
        const auto bytes = mask.record_bytes(r);
        out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }
    detail::write_all(sink, out);
}

NoiseMask read_mask(std::istream& source) {
    unsigned char raw[kMaskHeaderBytes];
    detail::read_exact(source, raw, sizeof raw, 0, "mask header");
    detail::check_magic(std::string_view(reinterpret_cast<const char*>(raw), 8), kMaskMagic);
    const auto version = detail::get_le<std::uint16_t>(raw + 8);
    if (version != kMaskVersion) throw FormatError("unsupported mask version " + std::to_string(version));
    const auto length = detail::get_le<std::uint32_t>(raw + 10);
    const auto count = detail::get_le<std::uint64_t>(raw + 14);
    NoiseMask mask(length, count);
    for (std::uint64_t r = 0; r < count; ++r) {
        auto bytes = mask.record_bytes(r);
        source.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (static_cast<std::size_t>(source.gcount()) != bytes.size()) {
            throw TruncationError("mask declares " + std::to_string(count) + " records but only " +
                                      std::to_string(r) + " are complete",
                                  kMaskHeaderBytes + r * bytes.size());
        }
        if (length % 8 != 0) {
            const auto tail = static_cast<std::uint8_t>(bytes.back() >> (length % 8));
            if (tail != 0) throw FormatError("mask record " + std::to_string(r) + " has bits past record length");
        }
    }
    return mask;
}

void save_mask(const NoiseMask& mask, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_mask(mask, out);
}

NoiseMask load_mask(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_mask(in);
}

void check_pairing(const Corpus& corpus, const NoiseMask& mask) {
    if (corpus.size() != mask.size() || (corpus.size() > 0 && corpus.record_length() != mask.record_length())) {
        throw FormatError("mask shape (" + std::to_string(mask.size()) + " x " +
                          std::to_string(mask.record_length()) + ") does not match corpus shape (" +
                          std::to_string(corpus.size()) + " x " + std::to_string(corpus.record_length()) + ")");
    }
}

MaskedCorpus load_masked_corpus(const std::filesystem::path& corpus_path, const std::filesystem::path& mask_path) {
    MaskedCorpus out{load_corpus(corpus_path), load_mask(mask_path)};
    check_pairing(out.corpus, out.mask);
    return out;
}

// --- packing --------------------------------------------------------------

Packer::Packer(VocabSpec vocab, std::uint32_t record_length) : out_(vocab, record_length) {
    if (record_length == 0) throw DomainError("record length must be >= 1");
    pending_.reserve(record_length);
}

void Packer::push(std::span<const Token> document) {
    const auto length = out_.record_length();
    for (Token t : document) {
        pending_.push_back(t);
        if (pending_.size() == length) {
            out_.append(pending_);
            pending_.clear();
        }
    }
}

Corpus Packer::take() {
    pending_.clear();
    return std::move(out_);
}

Corpus pack_tokens(std::span<const TokenSequence> raw, VocabSpec vocab, std::uint32_t record_length) {
    Packer packer(vocab, record_length);
    for (const auto& doc : raw) packer.push(doc);
    return packer.take();
}

} // namespace pptkit
