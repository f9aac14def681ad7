#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cdwe/demographics.hpp"
#include "cdwe/vocab.hpp"

namespace cdwe {

/// Row-major float32 table. Parameters are stored as float32 so that saved
/// models round-trip bit-exactly; gradient math runs in double on top.
struct Matrix {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(int64_t r, int64_t c) : rows(r), cols(c), data(static_cast<size_t>(r * c), 0.0f) {}

    float* row(int64_t r) { return data.data() + r * cols; }
    const float* row(int64_t r) const { return data.data() + r * cols; }

    bool operator==(const Matrix&) const = default;
};

enum class ModelKind : uint8_t { Generic = 0, DemographicVectors = 1, DemographicMatrices = 2 };

struct TrainingConfig {
    int dim = 100;
    float initial_lr = 0.025f;
    int window = 5;
    int epochs = 1;
    uint64_t min_count = 5;
    uint64_t seed = 1;
    int workers = 1;
    uint64_t status_every = 0;  // examples between status lines; 0 disables
};

struct GenericModel {
    Vocabulary vocab;
    int dim = 0;
    Matrix input;        // |V| x k word table W
    Matrix node_params;  // (|V|-1) x k hierarchical-softmax internal nodes

    bool operator==(const GenericModel&) const = default;
};

/// Word table plus one learned vector per demographic value (19 rows,
/// Unknown included); the input to the softmax is their sum.
struct DemographicVectorsModel {
    Vocabulary vocab;
    int dim = 0;
    Matrix input;        // |V| x k
    Matrix values;       // 19 x k, rows in global_value_index order
    Matrix node_params;

    bool operator==(const DemographicVectorsModel&) const = default;
};

/// Per-attribute architecture: a generic word table plus one full deviation
/// table per value of the attribute (Unknown included).
struct DemographicMatricesModel {
    Vocabulary vocab;
    int dim = 0;
    Attribute attribute = Attribute::Age;
    Matrix generic;                    // G, |V| x k
    std::vector<Matrix> value_tables;  // one |V| x k table per value
    Matrix node_params;

    bool operator==(const DemographicMatricesModel&) const = default;
};

using EmbeddingModel = std::variant<GenericModel, DemographicVectorsModel, DemographicMatricesModel>;

/// Word tables start uniform in [-0.5/k, 0.5/k]; node parameters and all
/// demographic tables start at zero, so both demographic architectures reduce
/// exactly to the generic model until their first update.
GenericModel init_generic(const Vocabulary& vocab, int dim, uint64_t seed);
DemographicVectorsModel init_demographic_vectors(const Vocabulary& vocab, int dim, uint64_t seed);
DemographicMatricesModel init_demographic_matrices(const Vocabulary& vocab, int dim,
                                                   Attribute attribute, uint64_t seed);

ModelKind model_kind(const EmbeddingModel& model);
const Vocabulary& model_vocab(const EmbeddingModel& model);
int model_dim(const EmbeddingModel& model);

/// Assemble the softmax input for (center word, speaker) in double precision.
/// Generic: W[w]; vectors: W[w] + one value row per attribute; matrices:
/// G[w] + W_v[w] for the speaker's value of the model's attribute.
void input_vector(const GenericModel& m, int32_t word, const SpeakerValues& speaker, double* out);
void input_vector(const DemographicVectorsModel& m, int32_t word, const SpeakerValues& speaker,
                  double* out);
void input_vector(const DemographicMatricesModel& m, int32_t word, const SpeakerValues& speaker,
                  double* out);

}  // namespace cdwe
