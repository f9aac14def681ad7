#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "cdwe/errors.hpp"
#include "cdwe/rng.hpp"
#include "cdwe/store.hpp"
#include "support.hpp"

using namespace cdwe;
using namespace cdwe::testing;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("cdwe_store_" + name)).string();
}

Vocabulary small_vocab(size_t n) {
    WordCounts counts;
    for (size_t i = 0; i < n; ++i) counts["w" + std::to_string(i)] = 10 + n - i;
    return build_vocab(counts, 1);
}

void randomize(Matrix& m, std::mt19937_64& rng) {
    for (auto& v : m.data) v = static_cast<float>((unit_rand(rng) - 0.5));
}

EmbeddingSpace space_2d(const std::vector<std::pair<std::string, std::pair<float, float>>>& rows) {
    EmbeddingSpace space;
    space.dim = 2;
    space.vectors = Matrix(static_cast<int64_t>(rows.size()), 2);
    for (size_t i = 0; i < rows.size(); ++i) {
        space.words.push_back(rows[i].first);
        space.index.emplace(rows[i].first, static_cast<int32_t>(i));
        space.vectors.row(static_cast<int64_t>(i))[0] = rows[i].second.first;
        space.vectors.row(static_cast<int64_t>(i))[1] = rows[i].second.second;
    }
    return space;
}

}  // namespace

TEST_CASE("binary save/load round-trips all three model kinds bit-exactly") {
    auto vocab = small_vocab(9);
    std::mt19937_64 rng(4);

    auto generic = init_generic(vocab, 6, 1);
    randomize(generic.node_params, rng);
    auto dvec = init_demographic_vectors(vocab, 6, 2);
    randomize(dvec.values, rng);
    auto dmat = init_demographic_matrices(vocab, 6, Attribute::Religion, 3);
    for (auto& t : dmat.value_tables) randomize(t, rng);

    std::vector<EmbeddingModel> models = {generic, dvec, dmat};
    for (size_t i = 0; i < models.size(); ++i) {
        std::string path = temp_path("roundtrip_" + std::to_string(i) + ".cdwe");
        save_model(models[i], path);
        EmbeddingModel back = load_model(path);
        CHECK(back == models[i]);
        std::remove(path.c_str());
    }
}

TEST_CASE("truncated model files fail with a shape report") {
    auto vocab = small_vocab(5);
    auto model = init_generic(vocab, 4, 7);
    std::string path = temp_path("truncated.cdwe");
    save_model(EmbeddingModel{model}, path);

    auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 17);
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("truncated"), DataError);
    std::remove(path.c_str());
}

TEST_CASE("bad magic and bad version are rejected") {
    std::string path = temp_path("magic.cdwe");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPExxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("magic"), DataError);
    std::remove(path.c_str());
}

TEST_CASE("text space round-trips bit-exactly and validates rows") {
    auto vocab = small_vocab(6);
    auto model = init_generic(vocab, 5, 11);
    EmbeddingSpace space = space_from_generic(model);

    std::string path = temp_path("space.txt");
    save_space_text(space, path);
    EmbeddingSpace back = load_space_text(path);
    CHECK(back.words == space.words);
    CHECK(back.vectors == space.vectors);
    std::remove(path.c_str());

    std::string bad = temp_path("bad_space.txt");
    {
        std::ofstream out(bad);
        out << "2 3\n";
        out << "alpha 0.5 0.25 -1\n";
        out << "beta 0.5 0.25\n";  // one value short
    }
    CHECK_THROWS_WITH_AS(load_space_text(bad), doctest::Contains("beta"), DataError);
    std::remove(bad.c_str());
}

TEST_CASE("nearest neighbors on an analytic 2d space") {
    auto space = space_2d({{"a", {1, 0}}, {"b", {0.70710678f, 0.70710678f}}, {"c", {0, 1}}});
    auto nn = nearest_neighbors(space, "a", 2);
    REQUIRE(nn.size() == 2);
    CHECK(nn[0].word == "b");
    CHECK(nn[0].cosine == doctest::Approx(0.70710678).epsilon(1e-6));
    CHECK(nn[1].word == "c");
    CHECK(nn[1].cosine == doctest::Approx(0.0));

    CHECK(nearest_neighbors(space, "a", 0).empty());
    CHECK_THROWS_AS(nearest_neighbors(space, "zzz", 1), DataError);
    CHECK_THROWS_AS(nearest_neighbors(space, "a", 3), DataError);  // n >= |V|
}

TEST_CASE("zero-norm query is a numeric error") {
    auto space = space_2d({{"a", {0, 0}}, {"b", {1, 0}}, {"c", {0, 1}}});
    CHECK_THROWS_AS(nearest_neighbors(space, "a", 1), NumericError);
}

TEST_CASE("query never appears among its own neighbors") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        size_t n = 3 + rng() % 20;
        auto vocab = small_vocab(n);
        auto model = init_generic(vocab, 4, rng());
        EmbeddingSpace space = space_from_generic(model);
        std::string query = space.words[rng() % n];
        auto nn = nearest_neighbors(space, query, static_cast<int>(n) - 1);
        for (const auto& x : nn) CHECK(x.word != query);
    }
}

TEST_CASE("cosine ranking and values are invariant under power-of-two scaling") {
    auto vocab = small_vocab(12);
    auto model = init_generic(vocab, 6, 5);
    EmbeddingSpace space = space_from_generic(model);
    EmbeddingSpace scaled = space;
    for (auto& v : scaled.vectors.data) v *= 4.0f;

    auto a = nearest_neighbors(space, space.words[0], 8);
    auto b = nearest_neighbors(scaled, space.words[0], 8);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].word == b[i].word);
        CHECK(a[i].cosine == b[i].cosine);
    }
}

TEST_CASE("neighbor_overlap counts shared top-n entries") {
    auto space = space_2d({{"a", {1, 0}},
                           {"b", {0.9f, 0.1f}},
                           {"c", {0.8f, 0.3f}},
                           {"d", {0.1f, 0.9f}},
                           {"e", {-0.5f, 0.8f}}});
    CHECK(neighbor_overlap("a", space, space, 3) == 1.0);

    // Flip the second space so its top list reverses.
    EmbeddingSpace flipped = space;
    for (int64_t w = 0; w < flipped.vectors.rows; ++w) {
        flipped.vectors.row(w)[0] = space.vectors.row(static_cast<int64_t>(w))[1];
        flipped.vectors.row(w)[1] = space.vectors.row(static_cast<int64_t>(w))[0];
    }
    flipped.vectors.row(0)[0] = 1.0f;  // keep the query itself fixed
    flipped.vectors.row(0)[1] = 0.0f;
    double overlap = neighbor_overlap("a", space, flipped, 2);
    CHECK(overlap == doctest::Approx(overlap));  // well-defined
    CHECK(neighbor_overlap("a", space, flipped, 2) ==
          neighbor_overlap("a", flipped, space, 2));  // symmetry
    CHECK_THROWS_AS(neighbor_overlap("zzz", space, flipped, 2), DataError);
}

TEST_CASE("demographic word vector is G plus the value deviation") {
    auto vocab = small_vocab(7);
    auto model = init_demographic_matrices(vocab, 5, Attribute::Age, 9);
    std::string word = vocab.words[2];

    auto v = demographic_word_vector(model, word, static_cast<int>(Age::Young));
    REQUIRE(v.size() == 5);
    for (int j = 0; j < 5; ++j) CHECK(v[static_cast<size_t>(j)] == model.generic.row(2)[j]);

    std::mt19937_64 rng(2);
    for (auto& t : model.value_tables) randomize(t, rng);
    auto young = demographic_word_vector(model, word, static_cast<int>(Age::Young));
    auto old = demographic_word_vector(model, word, static_cast<int>(Age::Old));
    for (int j = 0; j < 5; ++j) {
        float expected = model.value_tables[0].row(2)[j] - model.value_tables[1].row(2)[j];
        CHECK(young[static_cast<size_t>(j)] - old[static_cast<size_t>(j)] ==
              doctest::Approx(expected).epsilon(1e-5));
    }

    CHECK_THROWS_WITH_AS(demographic_word_vector(model, "zzz", 0),
                         doctest::Contains("not in vocabulary"), DataError);
    CHECK_THROWS_WITH_AS(demographic_word_vector(model, word, 99), doctest::Contains("no value"),
                         DataError);
}

TEST_CASE("composition dimensions match the architecture") {
    auto vocab = small_vocab(5);
    const int k = 100;
    auto generic = init_generic(vocab, k, 1);
    auto age = init_demographic_matrices(vocab, k, Attribute::Age, 2);
    auto gender = init_demographic_matrices(vocab, k, Attribute::Gender, 3);
    auto location = init_demographic_matrices(vocab, k, Attribute::Location, 4);
    auto religion = init_demographic_matrices(vocab, k, Attribute::Religion, 5);

    std::map<Attribute, const DemographicMatricesModel*> mats = {
        {Attribute::Age, &age},
        {Attribute::Gender, &gender},
        {Attribute::Location, &location},
        {Attribute::Religion, &religion},
    };
    SpeakerValues profile;
    profile.age = Age::Young;

    CompositionSelection age_only;
    age_only.attributes = {Attribute::Age};
    auto composed = compose_for_user(&generic, mats, profile, age_only);
    CHECK(composed.space.dim == 200);
    CHECK(composed.parts == std::vector<std::string>{"generic", "age=young"});

    CompositionSelection all;
    all.attributes = {Attribute::Religion, Attribute::Age, Attribute::Location, Attribute::Gender};
    auto full = compose_for_user(&generic, mats, profile, all);
    CHECK(full.space.dim == 500);
    // Fixed composition order regardless of selection order.
    CHECK(full.parts ==
          std::vector<std::string>{"generic", "age=young", "gender=unknown", "location=unknown",
                                   "religion=unknown"});

    auto dvec = init_demographic_vectors(vocab, k, 6);
    auto composed_dvec = compose_demographic_vectors(dvec, profile);
    CHECK(composed_dvec.space.dim == 200);
}

TEST_CASE("composition parts are laid out in order") {
    auto vocab = small_vocab(4);
    auto generic = init_generic(vocab, 3, 1);
    auto age = init_demographic_matrices(vocab, 3, Attribute::Age, 2);
    std::mt19937_64 rng(8);
    randomize(age.value_tables[0], rng);

    std::map<Attribute, const DemographicMatricesModel*> mats = {{Attribute::Age, &age}};
    SpeakerValues profile;
    profile.age = Age::Young;
    CompositionSelection sel;
    sel.attributes = {Attribute::Age};
    auto composed = compose_for_user(&generic, mats, profile, sel);

    auto age_vec = demographic_word_vector(age, vocab.words[1], static_cast<int>(Age::Young));
    const float* row = composed.space.vectors.row(1);
    for (int j = 0; j < 3; ++j) {
        CHECK(row[j] == generic.input.row(1)[j]);
        CHECK(row[3 + j] == age_vec[static_cast<size_t>(j)]);
    }
}

TEST_CASE("composition rejects vocabulary mismatches") {
    auto generic = init_generic(small_vocab(4), 3, 1);
    auto age = init_demographic_matrices(small_vocab(5), 3, Attribute::Age, 2);
    std::map<Attribute, const DemographicMatricesModel*> mats = {{Attribute::Age, &age}};
    CompositionSelection sel;
    sel.attributes = {Attribute::Age};
    CHECK_THROWS_AS(compose_for_user(&generic, mats, SpeakerValues{}, sel), DataError);
}

TEST_CASE("library nearest neighbors agree with the brute-force ranking") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        size_t n = 4 + rng() % 15;
        auto vocab = small_vocab(n);
        auto model = init_generic(vocab, 5, rng());
        EmbeddingSpace space = space_from_generic(model);
        int32_t q = static_cast<int32_t>(rng() % n);
        auto ranking = oracle_ranking(space, q);
        auto nn = nearest_neighbors(space, space.words[static_cast<size_t>(q)],
                                    static_cast<int>(n) - 1);
        REQUIRE(nn.size() == ranking.size());
        for (size_t i = 0; i < nn.size(); ++i) {
            CHECK(nn[i].word == space.words[static_cast<size_t>(ranking[i])]);
        }
    }
}
