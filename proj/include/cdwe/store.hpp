#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdwe/model.hpp"

namespace cdwe {

/// Immutable lookup table of one vector per vocabulary word.
struct EmbeddingSpace {
    std::vector<std::string> words;
    std::unordered_map<std::string, int32_t> index;
    Matrix vectors;
    int dim = 0;

    int32_t lookup(const std::string& word) const {
        auto it = index.find(word);
        return it == index.end() ? -1 : it->second;
    }
};

EmbeddingSpace space_from_generic(const GenericModel& model);
/// Word table of the vectors model (demographic rows are not word-indexed).
EmbeddingSpace space_from_vectors_words(const DemographicVectorsModel& model);
/// G + W_v for a value of the model's attribute, or G alone when no value.
EmbeddingSpace space_from_matrices(const DemographicMatricesModel& model,
                                   std::optional<int> value = std::nullopt);

/// The value-specific vector G[w] + W_v[w].
std::vector<float> demographic_word_vector(const DemographicMatricesModel& model,
                                           const std::string& word, int value);

struct Neighbor {
    std::string word;
    double cosine = 0.0;
};

/// Top-n by descending cosine; the query is excluded and ties break toward
/// the lower vocabulary index.
std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space, const std::string& query,
                                        int n);

/// |top-n(a) ∩ top-n(b)| / n for one word present in both spaces.
double neighbor_overlap(const std::string& word, const EmbeddingSpace& a, const EmbeddingSpace& b,
                        int n);

struct CompositionSelection {
    bool generic = true;
    std::vector<Attribute> attributes;  // any order; composition order is fixed
};

struct ComposedSpace {
    EmbeddingSpace space;
    std::vector<std::string> parts;  // e.g. "generic", "age=young"
};

/// Concatenate the generic vector with the value-specific vector of each
/// selected attribute at the profile's value (Unknown when the profile lacks
/// it). Part order is fixed: generic, age, gender, location, religion.
ComposedSpace compose_for_user(const GenericModel* generic,
                               const std::map<Attribute, const DemographicMatricesModel*>& matrices,
                               const SpeakerValues& profile, const CompositionSelection& selection);

/// Vectors-model composition: word vector concatenated with the sum of the
/// profile's four demographic value vectors.
ComposedSpace compose_demographic_vectors(const DemographicVectorsModel& model,
                                          const SpeakerValues& profile);

/// Text format: "<vocab_size> <dim>" header then one "<word> <v1> ... <v_dim>"
/// line per word at full round-trip precision.
void save_space_text(const EmbeddingSpace& space, const std::string& path);
EmbeddingSpace load_space_text(const std::string& path);

/// Binary model format: "CDWE" magic, u32 version, u8 kind, vocabulary and
/// value metadata, float32 tables row-major. Round-trips bit-exactly.
void save_model(const EmbeddingModel& model, const std::string& path);
EmbeddingModel load_model(const std::string& path);

}  // namespace cdwe
