#include "cdwe/demographics.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>

#include "cdwe/errors.hpp"

namespace cdwe {

namespace {

const std::array<std::string, 4> kAttributeNames = {"age", "gender", "location", "religion"};

const std::array<std::vector<std::string>, 4> kValueNames = {{
    {"young", "old", "unknown"},
    {"male", "female", "unknown"},
    {"usa", "asia", "oceania", "uk", "europe", "canada", "unknown"},
    {"christian", "muslim", "nonreligious", "hindu", "buddhist", "unknown"},
}};

std::string lowercase(const std::string& s) {
    std::string out(s.size(), '\0');
    std::transform(s.begin(), s.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

int value_count(Attribute attr) {
    return static_cast<int>(kValueNames[static_cast<size_t>(attr)].size());
}

int global_value_index(Attribute attr, int value_within_attr) {
    int base = 0;
    for (Attribute a : kAttributes) {
        if (a == attr) break;
        base += value_count(a);
    }
    return base + value_within_attr;
}

const std::string& attribute_name(Attribute attr) {
    return kAttributeNames[static_cast<size_t>(attr)];
}

const std::string& value_name(Attribute attr, int value_within_attr) {
    return kValueNames[static_cast<size_t>(attr)].at(static_cast<size_t>(value_within_attr));
}

std::optional<Attribute> parse_attribute(const std::string& name) {
    for (size_t i = 0; i < kAttributeNames.size(); ++i) {
        if (kAttributeNames[i] == name) return static_cast<Attribute>(i);
    }
    return std::nullopt;
}

std::optional<int> parse_value(Attribute attr, const std::string& name) {
    const auto& names = kValueNames[static_cast<size_t>(attr)];
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return std::nullopt;
}

int SpeakerValues::value_of(Attribute attr) const {
    switch (attr) {
        case Attribute::Age: return static_cast<int>(age);
        case Attribute::Gender: return static_cast<int>(gender);
        case Attribute::Location: return static_cast<int>(location);
        case Attribute::Religion: return static_cast<int>(religion);
    }
    return 0;
}

const std::vector<std::string>& Gazetteer::relative_words() {
    static const std::vector<std::string> words = {"northern", "western", "eastern",
                                                   "southern", "downtown", "suburbs"};
    return words;
}

Gazetteer load_gazetteer(const std::vector<std::string>& paths) {
    Gazetteer gaz;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open gazetteer file: " + path);
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw DataError(path + ":" + std::to_string(lineno) + ": expected <region>\\t<place>");
            }
            auto region = parse_value(Attribute::Location, lowercase(line.substr(0, tab)));
            if (!region || *region == static_cast<int>(Location::Unknown)) {
                throw DataError(path + ":" + std::to_string(lineno) + ": unknown region '" +
                                line.substr(0, tab) + "'");
            }
            std::string place = lowercase(line.substr(tab + 1));
            if (place.empty()) continue;
            Location loc = static_cast<Location>(*region);
            auto [it, inserted] = gaz.places.emplace(place, loc);
            if (!inserted && it->second != loc) {
                throw DataError(path + ":" + std::to_string(lineno) + ": place '" + place +
                                "' already mapped to a different region");
            }
            size_t tokens = 1 + static_cast<size_t>(std::count(place.begin(), place.end(), ' '));
            gaz.max_place_tokens = std::max(gaz.max_place_tokens, tokens);
        }
    }
    return gaz;
}

namespace {

// Age statement pattern; end-of-string stands in for the non-'e' follower so
// that sentence-final "old" matches while "older"/"oldest" stay rejected.
const std::regex& age_regex() {
    static const std::regex re("(i am|i'm) (\\d+) (years|yrs|yr) old([^e]|$)");
    return re;
}

const std::regex& gender_regex() {
    static const std::regex re("(i am|i'm) (a |an )?(boy|man|male|guy|girl|woman|female|gal)\\b");
    return re;
}

const std::regex& religion_regex() {
    static const std::regex re(
        "(i am|i'm) (a )?(christian|muslim|secular|atheist|agnostic|hindu|buddhist)\\b");
    return re;
}

}  // namespace

AgeResult extract_age(const std::vector<Post>& posts, double corpus_span_years) {
    struct Statement {
        int64_t created_at;
        int age;
    };
    std::vector<Statement> statements;
    for (const Post& post : posts) {
        std::string body = lowercase(post.body);
        auto begin = std::sregex_iterator(body.begin(), body.end(), age_regex());
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            long long age = 0;
            try {
                age = std::stoll((*it)[2].str());
            } catch (const std::exception&) {
                continue;  // absurdly long digit run
            }
            if (age > 1000) continue;
            statements.push_back({post.created_at, static_cast<int>(age)});
        }
    }
    AgeResult result;
    if (statements.empty()) return result;
    int min_age = statements[0].age, max_age = statements[0].age;
    for (const auto& s : statements) {
        min_age = std::min(min_age, s.age);
        max_age = std::max(max_age, s.age);
    }
    if (min_age < 13) {
        result.remove_user = true;
        return result;
    }
    if (static_cast<double>(max_age - min_age) > corpus_span_years) {
        return result;  // inconsistent self-reports, age stays Unknown
    }
    // Most recent statement wins; equal timestamps break toward the higher age
    // to keep resolution independent of post order.
    const Statement* chosen = &statements[0];
    for (const auto& s : statements) {
        if (s.created_at > chosen->created_at ||
            (s.created_at == chosen->created_at && s.age > chosen->age)) {
            chosen = &s;
        }
    }
    result.years = chosen->age;
    result.group = chosen->age >= 30 ? Age::Old : Age::Young;
    return result;
}

Extracted<Gender> extract_gender(const std::vector<Post>& posts) {
    static const std::set<std::string> male_terms = {"boy", "man", "male", "guy"};
    int male = 0, female = 0;
    for (const Post& post : posts) {
        std::string body = lowercase(post.body);
        auto begin = std::sregex_iterator(body.begin(), body.end(), gender_regex());
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            if (male_terms.count((*it)[3].str())) {
                ++male;
            } else {
                ++female;
            }
        }
    }
    Extracted<Gender> result;
    result.value = Gender::Unknown;
    if (male == 0 && female == 0) return result;
    if (male > 0 && female > 0) {
        int minority = std::min(male, female);
        int total = male + female;
        if (minority * 5 < total) {
            result.value = male > female ? Gender::Male : Gender::Female;
        } else {
            result.remove_user = true;
        }
        return result;
    }
    result.value = male > 0 ? Gender::Male : Gender::Female;
    return result;
}

namespace {

bool is_relative_word(const std::string& tok) {
    const auto& words = Gazetteer::relative_words();
    return std::find(words.begin(), words.end(), tok) != words.end();
}

// Resolve the phrase following a trigger: drop leading 'the' and relative
// modifiers, then take the longest token prefix present in the gazetteer.
std::optional<Location> resolve_place(const TokenSequence& tokens, size_t start,
                                      const Gazetteer& gaz) {
    size_t pos = start;
    while (pos < tokens.size() && (tokens[pos] == "the" || is_relative_word(tokens[pos]))) ++pos;
    if (pos >= tokens.size()) return std::nullopt;
    size_t max_len = std::min(gaz.max_place_tokens, tokens.size() - pos);
    for (size_t len = max_len; len >= 1; --len) {
        std::string phrase = tokens[pos];
        for (size_t i = 1; i < len; ++i) phrase += ' ' + tokens[pos + i];
        auto it = gaz.places.find(phrase);
        if (it != gaz.places.end()) return it->second;
    }
    return std::nullopt;
}

}  // namespace

Location extract_location(const std::vector<Post>& posts, const Gazetteer& gazetteer) {
    static const std::vector<TokenSequence> triggers = {{"i", "am", "from"}, {"i", "live", "in"}};
    std::set<Location> regions;
    for (const Post& post : posts) {
        TokenSequence tokens = tokenize(post.body);
        for (size_t i = 0; i < tokens.size(); ++i) {
            for (const auto& trig : triggers) {
                if (i + trig.size() > tokens.size()) continue;
                if (!std::equal(trig.begin(), trig.end(), tokens.begin() + i)) continue;
                auto region = resolve_place(tokens, i + trig.size(), gazetteer);
                if (region) regions.insert(*region);
            }
        }
    }
    if (regions.size() == 1) return *regions.begin();
    return Location::Unknown;  // no match, or conflicting regions
}

Extracted<Religion> extract_religion(const std::vector<Post>& posts) {
    auto group_of = [](const std::string& term) {
        if (term == "christian") return Religion::Christian;
        if (term == "muslim") return Religion::Muslim;
        if (term == "hindu") return Religion::Hindu;
        if (term == "buddhist") return Religion::Buddhist;
        return Religion::NonReligious;  // secular, atheist, agnostic
    };
    std::set<Religion> groups;
    for (const Post& post : posts) {
        std::string body = lowercase(post.body);
        auto begin = std::sregex_iterator(body.begin(), body.end(), religion_regex());
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            groups.insert(group_of((*it)[3].str()));
        }
    }
    Extracted<Religion> result;
    result.value = Religion::Unknown;
    if (groups.size() == 1) {
        result.value = *groups.begin();
    } else if (groups.size() > 1) {
        result.remove_user = true;
    }
    return result;
}

std::optional<UserProfile> build_profile(const std::string& user_id,
                                         const std::vector<Post>& posts,
                                         double corpus_span_years, const Gazetteer& gazetteer) {
    AgeResult age = extract_age(posts, corpus_span_years);
    if (age.remove_user) return std::nullopt;
    Extracted<Gender> gender = extract_gender(posts);
    if (gender.remove_user) return std::nullopt;
    Extracted<Religion> religion = extract_religion(posts);
    if (religion.remove_user) return std::nullopt;

    UserProfile profile;
    profile.user_id = user_id;
    profile.values.age = age.group;
    profile.raw_age = age.years;
    profile.values.gender = gender.value;
    profile.values.location = extract_location(posts, gazetteer);
    profile.values.religion = religion.value;
    profile.known_count = (profile.values.age != Age::Unknown) +
                          (profile.values.gender != Gender::Unknown) +
                          (profile.values.location != Location::Unknown) +
                          (profile.values.religion != Religion::Unknown);
    return profile;
}

std::vector<std::string> select_subset(const std::vector<UserProfile>& profiles, int min_known) {
    std::vector<std::string> users;
    for (const auto& p : profiles) {
        if (p.known_count >= min_known) users.push_back(p.user_id);
    }
    return users;
}

void write_profiles(const std::vector<UserProfile>& profiles, std::ostream& out) {
    for (const auto& p : profiles) {
        out << p.user_id << '\t' << value_name(Attribute::Age, static_cast<int>(p.values.age))
            << '\t' << (p.raw_age ? std::to_string(*p.raw_age) : "-") << '\t'
            << value_name(Attribute::Gender, static_cast<int>(p.values.gender)) << '\t'
            << value_name(Attribute::Location, static_cast<int>(p.values.location)) << '\t'
            << value_name(Attribute::Religion, static_cast<int>(p.values.religion)) << '\t'
            << p.known_count << '\n';
    }
}

std::vector<UserProfile> read_profiles(std::istream& in) {
    std::vector<UserProfile> profiles;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string uid, age, raw_age, gender, location, religion, known;
        if (!std::getline(fields, uid, '\t') || !std::getline(fields, age, '\t') ||
            !std::getline(fields, raw_age, '\t') || !std::getline(fields, gender, '\t') ||
            !std::getline(fields, location, '\t') || !std::getline(fields, religion, '\t') ||
            !std::getline(fields, known, '\t')) {
            throw DataError("profile line " + std::to_string(lineno) + ": expected 7 fields");
        }
        auto a = parse_value(Attribute::Age, age);
        auto g = parse_value(Attribute::Gender, gender);
        auto l = parse_value(Attribute::Location, location);
        auto r = parse_value(Attribute::Religion, religion);
        if (!a || !g || !l || !r) {
            throw DataError("profile line " + std::to_string(lineno) + ": bad value name");
        }
        UserProfile p;
        p.user_id = uid;
        p.values.age = static_cast<Age>(*a);
        p.values.gender = static_cast<Gender>(*g);
        p.values.location = static_cast<Location>(*l);
        p.values.religion = static_cast<Religion>(*r);
        if (raw_age != "-") {
            try {
                p.raw_age = std::stoi(raw_age);
            } catch (const std::exception&) {
                throw DataError("profile line " + std::to_string(lineno) + ": bad raw age");
            }
        }
        try {
            p.known_count = std::stoi(known);
        } catch (const std::exception&) {
            throw DataError("profile line " + std::to_string(lineno) + ": bad known count");
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

std::vector<UserProfile> read_profiles_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open profile file: " + path);
    return read_profiles(in);
}

}  // namespace cdwe
