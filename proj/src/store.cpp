#include "cdwe/store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "cdwe/errors.hpp"

namespace cdwe {

namespace {

EmbeddingSpace space_from_table(const Vocabulary& vocab, const Matrix& table) {
    EmbeddingSpace space;
    space.words = vocab.words;
    space.index = vocab.index;
    space.vectors = table;
    space.dim = static_cast<int>(table.cols);
    return space;
}

}  // namespace

EmbeddingSpace space_from_generic(const GenericModel& model) {
    return space_from_table(model.vocab, model.input);
}

EmbeddingSpace space_from_vectors_words(const DemographicVectorsModel& model) {
    return space_from_table(model.vocab, model.input);
}

EmbeddingSpace space_from_matrices(const DemographicMatricesModel& model,
                                   std::optional<int> value) {
    if (!value) return space_from_table(model.vocab, model.generic);
    if (*value < 0 || *value >= value_count(model.attribute)) {
        throw DataError("value index " + std::to_string(*value) + " out of range for attribute " +
                        attribute_name(model.attribute));
    }
    Matrix sum = model.generic;
    const Matrix& dev = model.value_tables[static_cast<size_t>(*value)];
    for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += dev.data[i];
    return space_from_table(model.vocab, sum);
}

std::vector<float> demographic_word_vector(const DemographicMatricesModel& model,
                                           const std::string& word, int value) {
    int32_t w = model.vocab.lookup(word);
    if (w < 0) throw DataError("word not in vocabulary: '" + word + "'");
    if (value < 0 || value >= value_count(model.attribute)) {
        throw DataError("no value " + std::to_string(value) + " for attribute " +
                        attribute_name(model.attribute));
    }
    std::vector<float> out(static_cast<size_t>(model.dim));
    const float* g = model.generic.row(w);
    const float* v = model.value_tables[static_cast<size_t>(value)].row(w);
    for (int j = 0; j < model.dim; ++j) out[static_cast<size_t>(j)] = g[j] + v[j];
    return out;
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space, const std::string& query,
                                        int n) {
    const int64_t v = static_cast<int64_t>(space.words.size());
    int32_t q = space.lookup(query);
    if (q < 0) throw DataError("query word not in vocabulary: '" + query + "'");
    if (n >= v) throw DataError("n=" + std::to_string(n) + " must be below vocabulary size " +
                                std::to_string(v));
    if (n <= 0) return {};

    const float* qv = space.vectors.row(q);
    double qnorm = 0.0;
    for (int j = 0; j < space.dim; ++j) qnorm += static_cast<double>(qv[j]) * qv[j];
    qnorm = std::sqrt(qnorm);
    if (qnorm == 0.0) throw NumericError("query vector has zero norm: '" + query + "'");

    std::vector<std::pair<double, int32_t>> scored;
    scored.reserve(static_cast<size_t>(v) - 1);
    for (int32_t i = 0; i < v; ++i) {
        if (i == q) continue;
        const float* x = space.vectors.row(i);
        double dot = 0.0, norm = 0.0;
        for (int j = 0; j < space.dim; ++j) {
            dot += static_cast<double>(x[j]) * qv[j];
            norm += static_cast<double>(x[j]) * x[j];
        }
        double cosine = norm == 0.0 ? -std::numeric_limits<double>::infinity()
                                    : dot / (std::sqrt(norm) * qnorm);
        scored.emplace_back(cosine, i);
    }
    auto better = [](const std::pair<double, int32_t>& a, const std::pair<double, int32_t>& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    };
    std::partial_sort(scored.begin(), scored.begin() + n, scored.end(), better);

    std::vector<Neighbor> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        out.push_back({space.words[static_cast<size_t>(scored[static_cast<size_t>(i)].second)],
                       scored[static_cast<size_t>(i)].first});
    }
    return out;
}

double neighbor_overlap(const std::string& word, const EmbeddingSpace& a, const EmbeddingSpace& b,
                        int n) {
    if (a.lookup(word) < 0) throw DataError("word missing from first space: '" + word + "'");
    if (b.lookup(word) < 0) throw DataError("word missing from second space: '" + word + "'");
    auto na = nearest_neighbors(a, word, n);
    auto nb = nearest_neighbors(b, word, n);
    std::unordered_map<std::string, bool> in_a;
    for (const auto& x : na) in_a.emplace(x.word, true);
    int shared = 0;
    for (const auto& x : nb) {
        if (in_a.count(x.word)) ++shared;
    }
    return static_cast<double>(shared) / static_cast<double>(n);
}

namespace {

void check_same_vocab(const std::vector<std::string>& a, const std::vector<std::string>& b,
                      const std::string& what) {
    if (a != b) throw DataError("vocabulary mismatch between composition parts: " + what);
}

}  // namespace

ComposedSpace compose_for_user(const GenericModel* generic,
                               const std::map<Attribute, const DemographicMatricesModel*>& matrices,
                               const SpeakerValues& profile,
                               const CompositionSelection& selection) {
    struct Part {
        EmbeddingSpace space;
        std::string label;
    };
    std::vector<Part> parts;
    if (selection.generic) {
        if (!generic) throw ConfigError("composition selects the generic part but no generic model given");
        parts.push_back({space_from_generic(*generic), "generic"});
    }
    for (Attribute attr : kAttributes) {
        if (std::find(selection.attributes.begin(), selection.attributes.end(), attr) ==
            selection.attributes.end()) {
            continue;
        }
        auto it = matrices.find(attr);
        if (it == matrices.end() || it->second == nullptr) {
            throw ConfigError("composition selects attribute '" + attribute_name(attr) +
                              "' but no matrices model given for it");
        }
        int value = profile.value_of(attr);
        parts.push_back({space_from_matrices(*it->second, value),
                         attribute_name(attr) + "=" + value_name(attr, value)});
    }
    if (parts.empty()) throw ConfigError("composition selects no parts");

    ComposedSpace out;
    out.space.words = parts[0].space.words;
    out.space.index = parts[0].space.index;
    int total_dim = 0;
    for (const auto& p : parts) {
        check_same_vocab(parts[0].space.words, p.space.words, p.label);
        total_dim += p.space.dim;
        out.parts.push_back(p.label);
    }
    const int64_t v = static_cast<int64_t>(out.space.words.size());
    out.space.dim = total_dim;
    out.space.vectors = Matrix(v, total_dim);
    int offset = 0;
    for (const auto& p : parts) {
        for (int64_t w = 0; w < v; ++w) {
            std::memcpy(out.space.vectors.row(w) + offset, p.space.vectors.row(w),
                        sizeof(float) * static_cast<size_t>(p.space.dim));
        }
        offset += p.space.dim;
    }
    return out;
}

ComposedSpace compose_demographic_vectors(const DemographicVectorsModel& model,
                                          const SpeakerValues& profile) {
    std::vector<float> demo(static_cast<size_t>(model.dim), 0.0f);
    ComposedSpace out;
    out.parts.push_back("word");
    for (Attribute attr : kAttributes) {
        int value = profile.value_of(attr);
        const float* row = model.values.row(global_value_index(attr, value));
        for (int j = 0; j < model.dim; ++j) demo[static_cast<size_t>(j)] += row[j];
        out.parts.push_back(attribute_name(attr) + "=" + value_name(attr, value));
    }
    const int64_t v = static_cast<int64_t>(model.vocab.size());
    out.space.words = model.vocab.words;
    out.space.index = model.vocab.index;
    out.space.dim = model.dim * 2;
    out.space.vectors = Matrix(v, model.dim * 2);
    for (int64_t w = 0; w < v; ++w) {
        float* dst = out.space.vectors.row(w);
        std::memcpy(dst, model.input.row(w), sizeof(float) * static_cast<size_t>(model.dim));
        std::memcpy(dst + model.dim, demo.data(), sizeof(float) * static_cast<size_t>(model.dim));
    }
    return out;
}

// --- text format ---

void save_space_text(const EmbeddingSpace& space, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embedding file: " + path);
    out << space.words.size() << ' ' << space.dim << '\n';
    char buf[64];
    for (size_t w = 0; w < space.words.size(); ++w) {
        out << space.words[w];
        const float* row = space.vectors.row(static_cast<int64_t>(w));
        for (int j = 0; j < space.dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(row[j]));
            out << ' ' << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

EmbeddingSpace load_space_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError(path + ": empty embedding file");
    std::istringstream hs(header);
    int64_t count = 0;
    int dim = 0;
    if (!(hs >> count >> dim) || count <= 0 || dim <= 0) {
        throw DataError(path + ": bad header '" + header + "'");
    }
    EmbeddingSpace space;
    space.dim = dim;
    space.vectors = Matrix(count, dim);
    space.words.reserve(static_cast<size_t>(count));
    std::string line;
    for (int64_t w = 0; w < count; ++w) {
        if (!std::getline(in, line)) {
            throw DataError(path + ": expected " + std::to_string(count) + " rows, found " +
                            std::to_string(w));
        }
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) {
            throw DataError(path + ": row " + std::to_string(w + 1) + ": missing word");
        }
        float* row = space.vectors.row(w);
        int j = 0;
        std::string tok;
        while (ls >> tok) {
            if (j >= dim) {
                throw DataError(path + ": row " + std::to_string(w + 1) + " ('" + word +
                                "'): more than " + std::to_string(dim) + " values");
            }
            char* end = nullptr;
            row[j] = std::strtof(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') {
                throw DataError(path + ": row " + std::to_string(w + 1) + " ('" + word +
                                "'): bad value '" + tok + "'");
            }
            ++j;
        }
        if (j != dim) {
            throw DataError(path + ": row " + std::to_string(w + 1) + " ('" + word +
                            "'): expected " + std::to_string(dim) + " values, found " +
                            std::to_string(j));
        }
        if (!space.index.emplace(word, static_cast<int32_t>(w)).second) {
            throw DataError(path + ": row " + std::to_string(w + 1) + ": duplicate word '" + word +
                            "'");
        }
        space.words.push_back(word);
    }
    return space;
}

// --- binary model format ---

namespace {

constexpr char kMagic[4] = {'C', 'D', 'W', 'E'};
constexpr uint32_t kFormatVersion = 1;

struct Writer {
    std::ofstream out;

    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw DataError("cannot write model file: " + path);
    }
    void bytes(const void* p, size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    void u8(uint8_t v) { bytes(&v, 1); }
    void u32(uint32_t v) { bytes(&v, 4); }
    void u64(uint64_t v) { bytes(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void table(const Matrix& m) { bytes(m.data.data(), m.data.size() * sizeof(float)); }
};

struct Reader {
    std::ifstream in;
    std::string path;

    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw DataError("cannot open model file: " + p);
    }
    void bytes(void* p, size_t n, const char* what) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n) {
            throw DataError(path + ": truncated file: expected " + std::to_string(n) +
                            " bytes for " + what + ", found " + std::to_string(in.gcount()));
        }
    }
    uint8_t u8(const char* what) {
        uint8_t v;
        bytes(&v, 1, what);
        return v;
    }
    uint32_t u32(const char* what) {
        uint32_t v;
        bytes(&v, 4, what);
        return v;
    }
    uint64_t u64(const char* what) {
        uint64_t v;
        bytes(&v, 8, what);
        return v;
    }
    std::string str(const char* what) {
        uint32_t n = u32(what);
        if (n > (1u << 20)) throw DataError(path + ": implausible string length for " + std::string(what));
        std::string s(n, '\0');
        if (n) bytes(s.data(), n, what);
        return s;
    }
    Matrix table(int64_t rows, int64_t cols, const char* what) {
        Matrix m(rows, cols);
        bytes(m.data.data(), m.data.size() * sizeof(float), what);
        return m;
    }
};

void write_vocab_block(Writer& w, const Vocabulary& vocab, int dim) {
    w.u64(vocab.size());
    w.u32(static_cast<uint32_t>(dim));
    w.u64(vocab.min_count);
    for (size_t i = 0; i < vocab.size(); ++i) {
        w.str(vocab.words[i]);
        w.u64(vocab.counts[i]);
    }
}

Vocabulary read_vocab_block(Reader& r, int& dim) {
    uint64_t count = r.u64("vocab size");
    dim = static_cast<int>(r.u32("dimension"));
    if (count == 0 || dim <= 0) throw DataError(r.path + ": empty vocabulary or dimension");
    Vocabulary vocab;
    vocab.min_count = r.u64("min_count");
    vocab.words.reserve(count);
    vocab.counts.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        vocab.words.push_back(r.str("vocab word"));
        vocab.counts.push_back(r.u64("word count"));
        vocab.index.emplace(vocab.words.back(), static_cast<int32_t>(i));
    }
    return vocab;
}

void check_value_name(Reader& r, Attribute attr, int v, const std::string& found) {
    const std::string& expected = value_name(attr, v);
    if (found != expected) {
        throw DataError(r.path + ": value section mismatch: expected '" + expected + "', found '" +
                        found + "'");
    }
}

}  // namespace

void save_model(const EmbeddingModel& model, const std::string& path) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kFormatVersion);
    w.u8(static_cast<uint8_t>(model_kind(model)));
    if (const auto* m = std::get_if<GenericModel>(&model)) {
        write_vocab_block(w, m->vocab, m->dim);
        w.table(m->input);
        w.table(m->node_params);
    } else if (const auto* m = std::get_if<DemographicVectorsModel>(&model)) {
        write_vocab_block(w, m->vocab, m->dim);
        w.u32(kValueCount);
        for (Attribute attr : kAttributes) {
            for (int v = 0; v < value_count(attr); ++v) {
                w.str(attribute_name(attr) + "=" + value_name(attr, v));
            }
        }
        w.table(m->input);
        w.table(m->values);
        w.table(m->node_params);
    } else if (const auto* m = std::get_if<DemographicMatricesModel>(&model)) {
        write_vocab_block(w, m->vocab, m->dim);
        w.u8(static_cast<uint8_t>(m->attribute));
        w.u32(static_cast<uint32_t>(value_count(m->attribute)));
        w.table(m->generic);
        for (int v = 0; v < value_count(m->attribute); ++v) {
            w.str(value_name(m->attribute, v));
            w.table(m->value_tables[static_cast<size_t>(v)]);
        }
        w.table(m->node_params);
    }
    if (!w.out) throw DataError("write failed: " + path);
}

EmbeddingModel load_model(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError(path + ": bad magic: expected CDWE, found '" + std::string(magic, 4) + "'");
    }
    uint32_t version = r.u32("format version");
    if (version != kFormatVersion) {
        throw DataError(path + ": unsupported format version: expected " +
                        std::to_string(kFormatVersion) + ", found " + std::to_string(version));
    }
    uint8_t kind = r.u8("model kind");
    int dim = 0;
    switch (static_cast<ModelKind>(kind)) {
        case ModelKind::Generic: {
            GenericModel m;
            m.vocab = read_vocab_block(r, dim);
            m.dim = dim;
            const int64_t v = static_cast<int64_t>(m.vocab.size());
            m.input = r.table(v, dim, "word table");
            m.node_params = r.table(v - 1, dim, "node table");
            return m;
        }
        case ModelKind::DemographicVectors: {
            DemographicVectorsModel m;
            m.vocab = read_vocab_block(r, dim);
            m.dim = dim;
            uint32_t nvalues = r.u32("value count");
            if (nvalues != kValueCount) {
                throw DataError(path + ": expected " + std::to_string(kValueCount) +
                                " demographic values, found " + std::to_string(nvalues));
            }
            for (Attribute attr : kAttributes) {
                for (int v = 0; v < value_count(attr); ++v) {
                    std::string name = r.str("value name");
                    std::string expected = attribute_name(attr) + "=" + value_name(attr, v);
                    if (name != expected) {
                        throw DataError(path + ": value section mismatch: expected '" + expected +
                                        "', found '" + name + "'");
                    }
                }
            }
            const int64_t v = static_cast<int64_t>(m.vocab.size());
            m.input = r.table(v, dim, "word table");
            m.values = r.table(kValueCount, dim, "value table");
            m.node_params = r.table(v - 1, dim, "node table");
            return m;
        }
        case ModelKind::DemographicMatrices: {
            DemographicMatricesModel m;
            m.vocab = read_vocab_block(r, dim);
            m.dim = dim;
            uint8_t attr = r.u8("attribute");
            if (attr > static_cast<uint8_t>(Attribute::Religion)) {
                throw DataError(path + ": bad attribute id " + std::to_string(attr));
            }
            m.attribute = static_cast<Attribute>(attr);
            uint32_t nvalues = r.u32("value count");
            if (nvalues != static_cast<uint32_t>(value_count(m.attribute))) {
                throw DataError(path + ": expected " + std::to_string(value_count(m.attribute)) +
                                " values for attribute " + attribute_name(m.attribute) +
                                ", found " + std::to_string(nvalues));
            }
            const int64_t v = static_cast<int64_t>(m.vocab.size());
            m.generic = r.table(v, dim, "generic table");
            for (int val = 0; val < value_count(m.attribute); ++val) {
                check_value_name(r, m.attribute, val, r.str("value name"));
                m.value_tables.push_back(r.table(v, dim, "value table"));
            }
            m.node_params = r.table(v - 1, dim, "node table");
            return m;
        }
        default:
            throw DataError(path + ": unknown model kind " + std::to_string(kind));
    }
}

}  // namespace cdwe
