#include "cdwe/model.hpp"

#include <random>

#include "cdwe/rng.hpp"

namespace cdwe {

namespace {

Matrix init_word_table(int64_t rows, int dim, uint64_t seed) {
    Matrix m(rows, dim);
    std::mt19937_64 rng(seed);
    for (auto& v : m.data) {
        v = static_cast<float>((unit_rand(rng) - 0.5) / dim);
    }
    return m;
}

}  // namespace

GenericModel init_generic(const Vocabulary& vocab, int dim, uint64_t seed) {
    GenericModel m;
    m.vocab = vocab;
    m.dim = dim;
    m.input = init_word_table(static_cast<int64_t>(vocab.size()), dim, seed);
    m.node_params = Matrix(static_cast<int64_t>(vocab.size()) - 1, dim);
    return m;
}

DemographicVectorsModel init_demographic_vectors(const Vocabulary& vocab, int dim, uint64_t seed) {
    DemographicVectorsModel m;
    m.vocab = vocab;
    m.dim = dim;
    m.input = init_word_table(static_cast<int64_t>(vocab.size()), dim, seed);
    m.values = Matrix(kValueCount, dim);
    m.node_params = Matrix(static_cast<int64_t>(vocab.size()) - 1, dim);
    return m;
}

DemographicMatricesModel init_demographic_matrices(const Vocabulary& vocab, int dim,
                                                   Attribute attribute, uint64_t seed) {
    DemographicMatricesModel m;
    m.vocab = vocab;
    m.dim = dim;
    m.attribute = attribute;
    m.generic = init_word_table(static_cast<int64_t>(vocab.size()), dim, seed);
    m.value_tables.assign(static_cast<size_t>(value_count(attribute)),
                          Matrix(static_cast<int64_t>(vocab.size()), dim));
    m.node_params = Matrix(static_cast<int64_t>(vocab.size()) - 1, dim);
    return m;
}

ModelKind model_kind(const EmbeddingModel& model) {
    return static_cast<ModelKind>(model.index());
}

const Vocabulary& model_vocab(const EmbeddingModel& model) {
    return std::visit([](const auto& m) -> const Vocabulary& { return m.vocab; }, model);
}

int model_dim(const EmbeddingModel& model) {
    return std::visit([](const auto& m) { return m.dim; }, model);
}

void input_vector(const GenericModel& m, int32_t word, const SpeakerValues&, double* out) {
    const float* w = m.input.row(word);
    for (int j = 0; j < m.dim; ++j) out[j] = w[j];
}

void input_vector(const DemographicVectorsModel& m, int32_t word, const SpeakerValues& speaker,
                  double* out) {
    const float* w = m.input.row(word);
    for (int j = 0; j < m.dim; ++j) out[j] = w[j];
    for (Attribute attr : kAttributes) {
        const float* d = m.values.row(global_value_index(attr, speaker.value_of(attr)));
        for (int j = 0; j < m.dim; ++j) out[j] += d[j];
    }
}

void input_vector(const DemographicMatricesModel& m, int32_t word, const SpeakerValues& speaker,
                  double* out) {
    const float* g = m.generic.row(word);
    const float* v = m.value_tables[static_cast<size_t>(speaker.value_of(m.attribute))].row(word);
    for (int j = 0; j < m.dim; ++j) out[j] = static_cast<double>(g[j]) + v[j];
}

}  // namespace cdwe
