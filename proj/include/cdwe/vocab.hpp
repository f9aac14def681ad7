#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdwe/corpus.hpp"

namespace cdwe {

/// Word <-> dense index map. Indices are assigned in descending count order
/// with lexicographic tie-break, so identical counts always yield identical
/// vocabularies.
struct Vocabulary {
    std::vector<std::string> words;   // by index
    std::vector<uint64_t> counts;     // by index
    std::unordered_map<std::string, int32_t> index;
    uint64_t min_count = 5;

    size_t size() const { return words.size(); }

    /// -1 when the word was dropped by the frequency cutoff or never seen.
    int32_t lookup(const std::string& word) const {
        auto it = index.find(word);
        return it == index.end() ? -1 : it->second;
    }

    bool operator==(const Vocabulary& other) const {
        return words == other.words && counts == other.counts && min_count == other.min_count;
    }
};

using WordCounts = std::unordered_map<std::string, uint64_t>;

void count_words(const TokenSequence& tokens, WordCounts& counts);
WordCounts count_words(const std::vector<TokenSequence>& corpus);

Vocabulary build_vocab(const WordCounts& counts, uint64_t min_count = 5);

/// Vocabulary file: "<word>\t<count>" per line, in index order.
void write_vocab(const Vocabulary& vocab, std::ostream& out);
Vocabulary read_vocab(std::istream& in, uint64_t min_count);

/// Binary prefix codes for hierarchical softmax. For word w, codes[w] is the
/// branch-bit sequence from the root and paths[w] the internal node visited
/// before each branch; the two always have equal length.
struct HuffmanTree {
    std::vector<std::vector<uint8_t>> codes;
    std::vector<std::vector<int32_t>> paths;
    int32_t internal_count = 0;  // |V| - 1
};

HuffmanTree build_huffman(const Vocabulary& vocab);

}  // namespace cdwe
