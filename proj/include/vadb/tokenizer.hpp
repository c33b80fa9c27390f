#ifndef VADB_TOKENIZER_HPP
#define VADB_TOKENIZER_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace vadb::enc {

// Frequency-ranked whitespace vocabulary with four reserved ids. Determinism:
// ties in frequency break lexicographically. A drop-in richer tokenizer only
// needs to reproduce this interface.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kStart = 1;
    static constexpr int kEnd = 2;
    static constexpr int kUnk = 3;
    static constexpr int kReserved = 4;

    static Vocabulary build(const std::vector<std::string>& corpus,
                            std::size_t max_size);
    static Vocabulary load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    int id_of(const std::string& token) const;  // kUnk when absent
    const std::string& token_at(int id) const;
    std::size_t size() const { return tokens_.size(); }          // reserved included
    std::size_t content_size() const { return tokens_.size() - kReserved; }

private:
    Vocabulary() = default;
    std::vector<std::string> tokens_;  // index = id
    std::unordered_map<std::string, int> index_;
};

struct TokenSequence {
    std::vector<int> ids;             // length = max_tokens
    std::vector<std::uint8_t> mask;   // prefix of ones covering start..end
    int length() const;               // unmasked count
};

std::vector<std::string> whitespace_tokens(const std::string& text);  // lowercased

// start + content + end, truncated so the end token is always present;
// padding after the end token.
TokenSequence tokenize(const std::string& text, const Vocabulary& vocab,
                       int max_tokens);

}  // namespace vadb::enc

#endif
