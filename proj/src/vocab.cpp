#include "cdwe/vocab.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <queue>

#include "cdwe/errors.hpp"

namespace cdwe {

void count_words(const TokenSequence& tokens, WordCounts& counts) {
    for (const auto& tok : tokens) ++counts[tok];
}

WordCounts count_words(const std::vector<TokenSequence>& corpus) {
    WordCounts counts;
    for (const auto& seq : corpus) count_words(seq, counts);
    return counts;
}

Vocabulary build_vocab(const WordCounts& counts, uint64_t min_count) {
    std::vector<std::pair<std::string, uint64_t>> kept;
    for (const auto& [word, count] : counts) {
        if (count >= min_count) kept.emplace_back(word, count);
    }
    if (kept.empty()) throw DataError("vocabulary is empty after min_count cutoff");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab;
    vocab.min_count = min_count;
    vocab.words.reserve(kept.size());
    vocab.counts.reserve(kept.size());
    for (size_t i = 0; i < kept.size(); ++i) {
        vocab.words.push_back(kept[i].first);
        vocab.counts.push_back(kept[i].second);
        vocab.index.emplace(kept[i].first, static_cast<int32_t>(i));
    }
    return vocab;
}

void write_vocab(const Vocabulary& vocab, std::ostream& out) {
    for (size_t i = 0; i < vocab.size(); ++i) {
        out << vocab.words[i] << '\t' << vocab.counts[i] << '\n';
    }
}

Vocabulary read_vocab(std::istream& in, uint64_t min_count) {
    Vocabulary vocab;
    vocab.min_count = min_count;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("vocab line " + std::to_string(lineno) + ": missing tab");
        }
        uint64_t count = 0;
        try {
            count = std::stoull(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw DataError("vocab line " + std::to_string(lineno) + ": bad count");
        }
        vocab.words.push_back(line.substr(0, tab));
        vocab.counts.push_back(count);
        vocab.index.emplace(vocab.words.back(), static_cast<int32_t>(vocab.words.size() - 1));
    }
    if (vocab.words.empty()) throw DataError("vocab file is empty");
    return vocab;
}

HuffmanTree build_huffman(const Vocabulary& vocab) {
    const int64_t n = static_cast<int64_t>(vocab.size());
    if (n < 2) throw DataError("huffman tree needs a vocabulary of at least 2 words");

    struct Node {
        uint64_t count;
        int64_t id;  // leaves: [0, n); internal: n + creation order
    };
    auto cmp = [](const Node& a, const Node& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.id > b.id;  // deterministic merge order on count ties
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> heap(cmp);
    for (int64_t i = 0; i < n; ++i) heap.push({vocab.counts[i], i});

    std::vector<int64_t> parent(2 * n - 1, -1);
    std::vector<uint8_t> branch(2 * n - 1, 0);
    for (int64_t t = 0; t < n - 1; ++t) {
        Node a = heap.top();
        heap.pop();
        Node b = heap.top();
        heap.pop();
        int64_t id = n + t;
        parent[a.id] = id;
        branch[a.id] = 0;
        parent[b.id] = id;
        branch[b.id] = 1;
        heap.push({a.count + b.count, id});
    }

    HuffmanTree tree;
    tree.internal_count = static_cast<int32_t>(n - 1);
    tree.codes.resize(n);
    tree.paths.resize(n);
    for (int64_t w = 0; w < n; ++w) {
        std::vector<uint8_t> code;
        std::vector<int32_t> path;
        for (int64_t node = w; parent[node] != -1; node = parent[node]) {
            code.push_back(branch[node]);
            path.push_back(static_cast<int32_t>(parent[node] - n));
        }
        std::reverse(code.begin(), code.end());
        std::reverse(path.begin(), path.end());
        tree.codes[w] = std::move(code);
        tree.paths[w] = std::move(path);
    }
    return tree;
}

}  // namespace cdwe
