#include "cdwe/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "cdwe/errors.hpp"
#include "cdwe/rng.hpp"
#include "json.hpp"

namespace cdwe {

namespace {

bool parse_post(const std::string& line, Post& out) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (!j.is_object()) return false;
    auto uid = j.find("user_id");
    auto ts = j.find("created_at");
    auto body = j.find("body");
    if (uid == j.end() || !uid->is_string()) return false;
    if (ts == j.end() || !ts->is_number_integer()) return false;
    if (body == j.end() || !body->is_string()) return false;
    out.user_id = uid->get<std::string>();
    if (out.user_id.empty()) return false;
    out.created_at = ts->get<int64_t>();
    out.body = body->get<std::string>();
    return true;
}

}  // namespace

std::vector<Post> load_posts(std::istream& in, LoadStats* stats) {
    std::vector<Post> posts;
    LoadStats local;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Post p;
        if (parse_post(line, p)) {
            posts.push_back(std::move(p));
            ++local.loaded;
        } else {
            ++local.skipped;
        }
    }
    if (stats) *stats = local;
    return posts;
}

std::vector<Post> load_posts_file(const std::string& path, LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open post file: " + path);
    return load_posts(in, stats);
}

void write_posts(const std::vector<Post>& posts, std::ostream& out) {
    for (const Post& p : posts) {
        nlohmann::json j;
        j["user_id"] = p.user_id;
        j["created_at"] = p.created_at;
        j["body"] = p.body;
        out << j.dump() << '\n';
    }
}

namespace {

// Bytes >= 0x80 (UTF-8 continuation/lead bytes) count as word characters.
bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

}  // namespace

TokenSequence tokenize(const std::string& body) {
    TokenSequence tokens;
    size_t i = 0;
    const size_t n = body.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
        size_t start = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(body[i]))) ++i;
        if (i == start) continue;
        size_t lo = start, hi = i;
        while (lo < hi && !is_word_byte(static_cast<unsigned char>(body[lo]))) ++lo;
        while (hi > lo && !is_word_byte(static_cast<unsigned char>(body[hi - 1]))) --hi;
        if (lo == hi) continue;
        std::string tok;
        tok.reserve(hi - lo);
        for (size_t k = lo; k < hi; ++k) {
            tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(body[k]))));
        }
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::unordered_set<std::string> load_bot_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("bot list file not found: " + path);
    std::unordered_set<std::string> bots;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        bots.insert(line);
    }
    return bots;
}

std::unordered_set<std::string> filter_bots(const std::unordered_set<std::string>& users,
                                            const std::unordered_set<std::string>& bots) {
    std::unordered_set<std::string> kept;
    kept.reserve(users.size());
    for (const auto& u : users) {
        if (!bots.count(u)) kept.insert(u);
    }
    return kept;
}

CorpusSplit make_splits(uint64_t corpus_size, const SplitSizes& sizes, uint64_t seed) {
    const uint64_t total = sizes.train + sizes.validation + sizes.test;
    if (total > corpus_size) {
        throw DataError("split sizes exceed corpus size: " + std::to_string(total) + " > " +
                        std::to_string(corpus_size));
    }
    std::vector<uint64_t> ids(corpus_size);
    for (uint64_t i = 0; i < corpus_size; ++i) ids[i] = i;

    // Partial Fisher-Yates: only the first `total` draws are needed.
    std::mt19937_64 rng(seed);
    for (uint64_t i = 0; i < total; ++i) {
        uint64_t j = i + bounded_rand(rng, corpus_size - i);
        std::swap(ids[i], ids[j]);
    }

    CorpusSplit split;
    split.seed = seed;
    split.train.assign(ids.begin(), ids.begin() + sizes.train);
    split.validation.assign(ids.begin() + sizes.train, ids.begin() + sizes.train + sizes.validation);
    split.test.assign(ids.begin() + sizes.train + sizes.validation, ids.begin() + total);
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

void write_split_manifest(const CorpusSplit& split, std::ostream& out) {
    std::map<uint64_t, const char*> rows;
    for (uint64_t id : split.train) rows[id] = "train";
    for (uint64_t id : split.validation) rows[id] = "val";
    for (uint64_t id : split.test) rows[id] = "test";
    for (const auto& [id, label] : rows) out << id << '\t' << label << '\n';
}

CorpusSplit read_split_manifest(std::istream& in) {
    CorpusSplit split;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("split manifest line " + std::to_string(lineno) + ": missing tab");
        }
        uint64_t id = 0;
        try {
            id = std::stoull(line.substr(0, tab));
        } catch (const std::exception&) {
            throw DataError("split manifest line " + std::to_string(lineno) + ": bad post id");
        }
        std::string label = line.substr(tab + 1);
        if (label == "train") {
            split.train.push_back(id);
        } else if (label == "val") {
            split.validation.push_back(id);
        } else if (label == "test") {
            split.test.push_back(id);
        } else {
            throw DataError("split manifest line " + std::to_string(lineno) + ": unknown label '" +
                            label + "'");
        }
    }
    return split;
}

}  // namespace cdwe
