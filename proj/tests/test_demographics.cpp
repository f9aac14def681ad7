#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "cdwe/demographics.hpp"
#include "cdwe/errors.hpp"
#include "support.hpp"

using namespace cdwe;
using namespace cdwe::testing;

namespace {

const Gazetteer& gaz() {
    static const Gazetteer g = load_gazetteer(gazetteer_paths());
    return g;
}

std::vector<Post> one(const std::string& body) { return {{"u", 100, body}}; }

}  // namespace

TEST_CASE("value universe totals 19 across the four attributes") {
    int total = 0;
    for (Attribute attr : kAttributes) total += value_count(attr);
    CHECK(total == kValueCount);
    CHECK(value_count(Attribute::Age) == 3);
    CHECK(value_count(Attribute::Gender) == 3);
    CHECK(value_count(Attribute::Location) == 7);
    CHECK(value_count(Attribute::Religion) == 6);

    std::vector<bool> seen(kValueCount, false);
    for (Attribute attr : kAttributes) {
        for (int v = 0; v < value_count(attr); ++v) {
            int g = global_value_index(attr, v);
            REQUIRE(g >= 0);
            REQUIRE(g < kValueCount);
            CHECK(!seen[static_cast<size_t>(g)]);
            seen[static_cast<size_t>(g)] = true;
        }
    }
}

TEST_CASE("extraction fixture scores 100%") {
    auto cases = load_extraction_fixture(fixture_path("extraction_fixture.jsonl"));
    REQUIRE(cases.size() >= 30);
    auto failures = run_extraction_fixture(cases, gaz());
    for (const auto& f : failures) FAIL_CHECK(f);
    CHECK(failures.empty());
}

TEST_CASE("extract_age spec examples") {
    auto r = extract_age(one("i am 25 years old and i hike"), 8.0);
    CHECK(!r.remove_user);
    CHECK(r.group == Age::Young);
    CHECK(r.years == 25);

    std::vector<Post> span = {{"u", 0, "i am 20 years old"}, {"u", 9, "i am 30 years old"}};
    auto s = extract_age(span, 8.0);
    CHECK(!s.remove_user);
    CHECK(s.group == Age::Unknown);
    CHECK(!s.years.has_value());

    CHECK(extract_age(one("i'm 12 years old"), 8.0).remove_user);

    auto t = extract_age(one("i'm 30 years old"), 8.0);
    CHECK(t.group == Age::Old);
    CHECK(t.years == 30);
}

TEST_CASE("extract_age is insensitive to post order") {
    std::vector<Post> posts = {{"u", 10, "i am 20 years old now"},
                               {"u", 90, "i am 24 years old now"}};
    auto a = extract_age(posts, 8.0);
    std::swap(posts[0], posts[1]);
    auto b = extract_age(posts, 8.0);
    CHECK(a.group == b.group);
    CHECK(a.years == b.years);
    CHECK(a.years == 24);
}

TEST_CASE("extract_gender thresholds") {
    CHECK(extract_gender(one("i am a guy")).value == Gender::Male);

    std::vector<Post> five_one;
    for (int i = 0; i < 5; ++i) five_one.push_back({"u", i, "i am a man, ok"});
    five_one.push_back({"u", 9, "i am a woman, ok"});
    auto r = extract_gender(five_one);
    CHECK(!r.remove_user);
    CHECK(r.value == Gender::Male);

    std::vector<Post> four_two;
    for (int i = 0; i < 4; ++i) four_two.push_back({"u", i, "i am a man, ok"});
    for (int i = 0; i < 2; ++i) four_two.push_back({"u", 9 + i, "i am a woman, ok"});
    CHECK(extract_gender(four_two).remove_user);
}

TEST_CASE("extract_location spec examples") {
    CHECK(extract_location(one("i live in toronto"), gaz()) == Location::Canada);
    CHECK(extract_location(one("i am from the northern uk"), gaz()) == Location::UK);
    CHECK(extract_location(one("i live in mumbai"), gaz()) == Location::Asia);
    CHECK(extract_location(one("i live in narnia"), gaz()) == Location::Unknown);
}

TEST_CASE("extract_religion grouping and removal") {
    CHECK(extract_religion(one("i am a christian")).value == Religion::Christian);
    CHECK(extract_religion(one("i'm atheist, always was")).value == Religion::NonReligious);
    std::vector<Post> multi = {{"u", 1, "i am a christian"}, {"u", 2, "i'm a muslim"}};
    CHECK(extract_religion(multi).remove_user);
}

TEST_CASE("build_profile composition and removal dominance") {
    std::vector<Post> posts = {{"u", 1, "i am 25 years old and i hike"},
                               {"u", 2, "i am a guy"},
                               {"u", 3, "i'm atheist, always was"}};
    auto p = build_profile("u", posts, 8.0, gaz());
    REQUIRE(p.has_value());
    CHECK(p->values.age == Age::Young);
    CHECK(p->values.gender == Gender::Male);
    CHECK(p->values.location == Location::Unknown);
    CHECK(p->values.religion == Religion::NonReligious);
    CHECK(p->known_count == 3);

    auto empty = build_profile("u", one("nothing here"), 8.0, gaz());
    REQUIRE(empty.has_value());
    CHECK(empty->known_count == 0);

    std::vector<Post> removed = {{"u", 1, "i'm 12 years old"}, {"u", 2, "i am a guy"}};
    CHECK(!build_profile("u", removed, 8.0, gaz()).has_value());
}

TEST_CASE("select_subset filters by known_count and nests") {
    std::vector<UserProfile> profiles(5);
    for (int i = 0; i < 5; ++i) {
        profiles[static_cast<size_t>(i)].user_id = "u" + std::to_string(i);
        profiles[static_cast<size_t>(i)].known_count = i;
    }
    CHECK(select_subset(profiles, 2) == std::vector<std::string>{"u2", "u3", "u4"});
    CHECK(select_subset(profiles, 4) == std::vector<std::string>{"u4"});
    CHECK(select_subset({}, 2).empty());

    auto contains = [](const std::vector<std::string>& big, const std::vector<std::string>& small) {
        for (const auto& s : small) {
            if (std::find(big.begin(), big.end(), s) == big.end()) return false;
        }
        return true;
    };
    CHECK(contains(select_subset(profiles, 2), select_subset(profiles, 4)));
    CHECK(contains(select_subset(profiles, 1), select_subset(profiles, 2)));
}

TEST_CASE("profiles round-trip through the tab-separated table") {
    UserProfile a;
    a.user_id = "alice";
    a.values = {Age::Young, Gender::Female, Location::Canada, Religion::Unknown};
    a.raw_age = 27;
    a.known_count = 3;
    UserProfile b;
    b.user_id = "bob";
    b.known_count = 0;
    std::vector<UserProfile> profiles = {a, b};

    std::stringstream buf;
    write_profiles(profiles, buf);
    auto back = read_profiles(buf);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == a);
    CHECK(back[1] == b);
}

TEST_CASE("gazetteer loads and rejects missing files") {
    CHECK_THROWS_AS(load_gazetteer({"/nonexistent/gazetteer.tsv"}), DataError);
    CHECK(gaz().max_place_tokens >= 3);
    CHECK(gaz().places.at("toronto") == Location::Canada);
    CHECK(Gazetteer::relative_words().size() == 6);
}
