#pragma once

// Shared helpers for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "cdwe/assoc.hpp"
#include "cdwe/demographics.hpp"
#include "cdwe/errors.hpp"
#include "cdwe/store.hpp"

namespace cdwe::testing {

inline std::string fixture_path(const std::string& name) {
    return std::string(CDWE_FIXTURE_DIR) + "/" + name;
}

inline std::vector<std::string> gazetteer_paths() {
    const std::string dir = std::string(CDWE_DATA_DIR) + "/gazetteer/";
    return {dir + "countries.tsv", dir + "us.tsv", dir + "canada.tsv", dir + "uk.tsv",
            dir + "europe.tsv", dir + "asia.tsv", dir + "oceania.tsv"};
}

struct FixtureCase {
    std::string name;
    std::vector<Post> posts;
    double span_years = 8.0;
    bool expect_remove = false;
    UserProfile expected;
};

inline std::vector<FixtureCase> load_extraction_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fixture: " + path);
    std::vector<FixtureCase> cases;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        FixtureCase c;
        c.name = j.at("name").get<std::string>();
        if (j.contains("span_years")) c.span_years = j["span_years"].get<double>();
        for (const auto& p : j.at("posts")) {
            c.posts.push_back({c.name, p.at("created_at").get<int64_t>(),
                               p.at("body").get<std::string>()});
        }
        const auto& e = j.at("expect");
        if (e.at("outcome").get<std::string>() == "remove") {
            c.expect_remove = true;
        } else {
            c.expected.user_id = c.name;
            c.expected.values.age =
                static_cast<Age>(*parse_value(Attribute::Age, e.at("age").get<std::string>()));
            c.expected.values.gender = static_cast<Gender>(
                *parse_value(Attribute::Gender, e.at("gender").get<std::string>()));
            c.expected.values.location = static_cast<Location>(
                *parse_value(Attribute::Location, e.at("location").get<std::string>()));
            c.expected.values.religion = static_cast<Religion>(
                *parse_value(Attribute::Religion, e.at("religion").get<std::string>()));
            if (e.contains("raw_age")) c.expected.raw_age = e["raw_age"].get<int>();
            c.expected.known_count = e.at("known").get<int>();
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

/// Runs every fixture case; returns descriptions of mismatches (empty = 100%).
inline std::vector<std::string> run_extraction_fixture(const std::vector<FixtureCase>& cases,
                                                       const Gazetteer& gazetteer) {
    std::vector<std::string> failures;
    for (const auto& c : cases) {
        auto profile = build_profile(c.name, c.posts, c.span_years, gazetteer);
        if (c.expect_remove) {
            if (profile) failures.push_back(c.name + ": expected removal, got a profile");
            continue;
        }
        if (!profile) {
            failures.push_back(c.name + ": expected a profile, user was removed");
            continue;
        }
        if (!(*profile == c.expected)) {
            auto show = [](const UserProfile& p) {
                std::string s = value_name(Attribute::Age, static_cast<int>(p.values.age)) + "/" +
                                (p.raw_age ? std::to_string(*p.raw_age) : "-") + "/" +
                                value_name(Attribute::Gender, static_cast<int>(p.values.gender)) +
                                "/" +
                                value_name(Attribute::Location,
                                           static_cast<int>(p.values.location)) +
                                "/" +
                                value_name(Attribute::Religion,
                                           static_cast<int>(p.values.religion)) +
                                "/known=" + std::to_string(p.known_count);
                return s;
            };
            failures.push_back(c.name + ": expected " + show(c.expected) + ", got " +
                               show(*profile));
        }
    }
    return failures;
}

// --- independent brute-force association oracle ---
//
// Recomputes everything from scratch: naive per-pair cosines, a full stable
// sort, and direct metric formulas. Kept apart from the library path so the
// two can disagree.

inline std::vector<int32_t> oracle_ranking(const EmbeddingSpace& space, int32_t query) {
    auto cosine = [&](int32_t a, int32_t b) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (int j = 0; j < space.dim; ++j) {
            double x = space.vectors.row(a)[j];
            double y = space.vectors.row(b)[j];
            dot += x * y;
            na += x * x;
            nb += y * y;
        }
        if (na == 0.0 || nb == 0.0) return -std::numeric_limits<double>::infinity();
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };
    std::vector<int32_t> order;
    for (int32_t i = 0; i < static_cast<int32_t>(space.words.size()); ++i) {
        if (i != query) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
        double ca = cosine(query, a), cb = cosine(query, b);
        if (ca != cb) return ca > cb;
        return a < b;
    });
    return order;
}

struct OracleScore {
    double score = 0.0;
    double coverage = 0.0;
};

inline OracleScore oracle_assoc(const EmbeddingSpace& space, const AssociationDataset& dataset,
                                bool best, int n) {
    double sum = 0.0;
    size_t evaluated = 0;
    for (const auto& stimulus : dataset.stimuli) {
        int32_t q = space.lookup(stimulus.stimulus);
        if (q < 0) continue;
        auto ranking = oracle_ranking(space, q);
        auto f_of = [&](int32_t idx) {
            for (const auto& [w, f] : stimulus.responses) {
                if (w == space.words[static_cast<size_t>(idx)]) return f;
            }
            return static_cast<int64_t>(0);
        };
        if (best) {
            sum += static_cast<double>(f_of(ranking[0])) / static_cast<double>(stimulus.f_max);
        } else {
            size_t take = std::min<size_t>(static_cast<size_t>(n), ranking.size());
            int64_t total = 0;
            for (size_t i = 0; i < take; ++i) total += f_of(ranking[i]);
            sum += static_cast<double>(total) / static_cast<double>(stimulus.participants);
        }
        ++evaluated;
    }
    OracleScore out;
    out.score = evaluated > 0 ? sum / static_cast<double>(evaluated) : 0.0;
    out.coverage = dataset.stimuli.empty() ? 0.0
                                           : static_cast<double>(evaluated) /
                                                 static_cast<double>(dataset.stimuli.size());
    return out;
}

}  // namespace cdwe::testing
