#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdwe/corpus.hpp"

namespace cdwe {

enum class Attribute : uint8_t { Age = 0, Gender, Location, Religion };
inline constexpr std::array<Attribute, 4> kAttributes = {Attribute::Age, Attribute::Gender,
                                                         Attribute::Location, Attribute::Religion};

enum class Age : uint8_t { Young = 0, Old, Unknown };
enum class Gender : uint8_t { Male = 0, Female, Unknown };
enum class Location : uint8_t { USA = 0, Asia, Oceania, UK, Europe, Canada, Unknown };
enum class Religion : uint8_t { Christian = 0, Muslim, NonReligious, Hindu, Buddhist, Unknown };

// 3 + 3 + 7 + 6 demographic values, Unknown included for every attribute.
inline constexpr int kValueCount = 19;

int value_count(Attribute attr);

// Dense index of a (attribute, value) pair in the canonical 19-value universe:
// Age values first, then Gender, Location, Religion; Unknown last per attribute.
int global_value_index(Attribute attr, int value_within_attr);

const std::string& attribute_name(Attribute attr);
const std::string& value_name(Attribute attr, int value_within_attr);
std::optional<Attribute> parse_attribute(const std::string& name);
std::optional<int> parse_value(Attribute attr, const std::string& name);

/// Demographic values of one speaker; defaults are all Unknown.
struct SpeakerValues {
    Age age = Age::Unknown;
    Gender gender = Gender::Unknown;
    Location location = Location::Unknown;
    Religion religion = Religion::Unknown;

    int value_of(Attribute attr) const;
    bool operator==(const SpeakerValues&) const = default;
};

struct UserProfile {
    std::string user_id;
    SpeakerValues values;
    std::optional<int> raw_age;  // present iff values.age != Unknown
    int known_count = 0;

    bool operator==(const UserProfile&) const = default;
};

/// Place-string lexicon resolving location statements to regions.
struct Gazetteer {
    std::unordered_map<std::string, Location> places;  // lowercase place -> region
    size_t max_place_tokens = 1;

    static const std::vector<std::string>& relative_words();
};

/// Load gazetteer files of lines "<region>\t<place string>".
Gazetteer load_gazetteer(const std::vector<std::string>& paths);

template <typename T>
struct Extracted {
    bool remove_user = false;
    T value{};
};

struct AgeResult {
    bool remove_user = false;  // self-reported age under 13
    Age group = Age::Unknown;
    std::optional<int> years;
};

AgeResult extract_age(const std::vector<Post>& posts, double corpus_span_years);
Extracted<Gender> extract_gender(const std::vector<Post>& posts);
Location extract_location(const std::vector<Post>& posts, const Gazetteer& gazetteer);
Extracted<Religion> extract_religion(const std::vector<Post>& posts);

/// Run all four extractors over one user's posts. Empty optional = user removed.
std::optional<UserProfile> build_profile(const std::string& user_id,
                                         const std::vector<Post>& posts,
                                         double corpus_span_years, const Gazetteer& gazetteer);

std::vector<std::string> select_subset(const std::vector<UserProfile>& profiles, int min_known);

/// Profile table: user_id, age group, raw age or "-", gender, location,
/// religion, known_count; tab separated, one user per line.
void write_profiles(const std::vector<UserProfile>& profiles, std::ostream& out);
std::vector<UserProfile> read_profiles(std::istream& in);
std::vector<UserProfile> read_profiles_file(const std::string& path);

}  // namespace cdwe
