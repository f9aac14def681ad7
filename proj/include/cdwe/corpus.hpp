#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

namespace cdwe {

/// One user-authored text unit. Post identifiers used by splits and manifests
/// are the 0-based position of the record in its source stream.
struct Post {
    std::string user_id;
    int64_t created_at = 0;  // seconds since epoch
    std::string body;

    bool operator==(const Post&) const = default;
};

using TokenSequence = std::vector<std::string>;

struct LoadStats {
    uint64_t loaded = 0;
    uint64_t skipped = 0;  // malformed lines
};

/// Parse line-delimited records with fields user_id, created_at, body.
/// Malformed lines are skipped and counted in stats.
std::vector<Post> load_posts(std::istream& in, LoadStats* stats = nullptr);
std::vector<Post> load_posts_file(const std::string& path, LoadStats* stats = nullptr);

/// Write posts in the same record-per-line format load_posts reads.
void write_posts(const std::vector<Post>& posts, std::ostream& out);

/// Lowercase, split on whitespace, strip leading/trailing punctuation from
/// each token. Internal apostrophes and hyphens survive ("i'm", "health-care").
TokenSequence tokenize(const std::string& body);

/// Bot list file: one user_id per line, '#' comment lines ignored.
std::unordered_set<std::string> load_bot_list(const std::string& path);

std::unordered_set<std::string> filter_bots(const std::unordered_set<std::string>& users,
                                            const std::unordered_set<std::string>& bots);

struct CorpusSplit {
    std::vector<uint64_t> train;
    std::vector<uint64_t> validation;
    std::vector<uint64_t> test;
    uint64_t seed = 0;
};

struct SplitSizes {
    uint64_t train = 0;
    uint64_t validation = 0;
    uint64_t test = 0;
};

/// Uniform sampling of post ids without replacement; deterministic per seed.
CorpusSplit make_splits(uint64_t corpus_size, const SplitSizes& sizes, uint64_t seed);

/// Split manifest: lines of "<post_id>\t<train|val|test>".
void write_split_manifest(const CorpusSplit& split, std::ostream& out);
CorpusSplit read_split_manifest(std::istream& in);

}  // namespace cdwe
