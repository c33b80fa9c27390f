#include "vadb/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "vadb/errors.hpp"

namespace vadb::enc {

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus,
                             std::size_t max_size) {
    std::map<std::string, std::size_t> counts;
    for (const auto& text : corpus)
        for (const auto& tok : whitespace_tokens(text)) ++counts[tok];

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > max_size) ranked.resize(max_size);

    Vocabulary v;
    v.tokens_ = {"<pad>", "<start>", "<end>", "<unk>"};
    for (const auto& [tok, cnt] : ranked) v.tokens_.push_back(tok);
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
        v.index_[v.tokens_[i]] = static_cast<int>(i);
    return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open vocabulary: " + path.string());
    Vocabulary v;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        v.tokens_.push_back(line);
    }
    if (v.tokens_.size() < kReserved || v.tokens_[kPad] != "<pad>" ||
        v.tokens_[kStart] != "<start>" || v.tokens_[kEnd] != "<end>" ||
        v.tokens_[kUnk] != "<unk>")
        throw IoError("vocabulary file missing reserved entries: " + path.string());
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
        v.index_[v.tokens_[i]] = static_cast<int>(i);
    return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write vocabulary: " + path.string());
    for (const auto& t : tokens_) f << t << "\n";
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_at(int id) const {
    return tokens_.at(static_cast<std::size_t>(id));
}

int TokenSequence::length() const {
    int n = 0;
    for (auto m : mask) n += m != 0;
    return n;
}

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab,
                       int max_tokens) {
    if (max_tokens < 3)
        throw ConfigError("tokenize: max_tokens must be at least 3");
    auto words = whitespace_tokens(text);
    const std::size_t capacity = static_cast<std::size_t>(max_tokens) - 2;
    if (words.size() > capacity) words.resize(capacity);

    TokenSequence seq;
    seq.ids.assign(static_cast<std::size_t>(max_tokens), Vocabulary::kPad);
    seq.mask.assign(static_cast<std::size_t>(max_tokens), 0);
    std::size_t p = 0;
    seq.ids[p++] = Vocabulary::kStart;
    for (const auto& w : words) seq.ids[p++] = vocab.id_of(w);
    seq.ids[p++] = Vocabulary::kEnd;
    for (std::size_t i = 0; i < p; ++i) seq.mask[i] = 1;
    return seq;
}

}  // namespace vadb::enc
