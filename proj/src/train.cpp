#include "cdwe/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "cdwe/errors.hpp"

namespace cdwe {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// -log sigmoid(-t) = log(1 + exp(t)), overflow-safe.
inline double softplus(double t) { return t > 30.0 ? t : std::log1p(std::exp(t)); }

// Input-side rows contributing to the softmax input; at most 5 (vectors model).
inline int input_rows(GenericModel& m, int32_t word, const SpeakerValues&, float** rows) {
    rows[0] = m.input.row(word);
    return 1;
}

inline int input_rows(DemographicVectorsModel& m, int32_t word, const SpeakerValues& speaker,
                      float** rows) {
    rows[0] = m.input.row(word);
    int n = 1;
    for (Attribute attr : kAttributes) {
        rows[n++] = m.values.row(global_value_index(attr, speaker.value_of(attr)));
    }
    return n;
}

inline int input_rows(DemographicMatricesModel& m, int32_t word, const SpeakerValues& speaker,
                      float** rows) {
    rows[0] = m.generic.row(word);
    rows[1] = m.value_tables[static_cast<size_t>(speaker.value_of(m.attribute))].row(word);
    return 2;
}

struct StepScratch {
    std::vector<double> x;       // assembled input
    std::vector<double> grad_x;  // accumulated input gradient
};

// Forward + backward + update for one example. Gradients are evaluated at the
// pre-step parameters: node rows are read before being written, and input rows
// are updated last.
template <typename Model>
double hs_sgd_step(Model& model, const HuffmanTree& tree, int32_t center, int32_t context,
                   const SpeakerValues& speaker, double lr, StepScratch& scratch) {
    const int k = model.dim;
    float* rows[5];
    const int nrows = input_rows(model, center, speaker, rows);

    scratch.x.resize(k);
    scratch.grad_x.assign(k, 0.0);
    double* x = scratch.x.data();
    double* gx = scratch.grad_x.data();
    for (int j = 0; j < k; ++j) x[j] = rows[0][j];
    for (int r = 1; r < nrows; ++r) {
        const float* row = rows[r];
        for (int j = 0; j < k; ++j) x[j] += row[j];
    }

    const auto& code = tree.codes[context];
    const auto& path = tree.paths[context];
    double loss = 0.0;
    for (size_t d = 0; d < code.size(); ++d) {
        float* node = model.node_params.row(path[d]);
        double z = 0.0;
        for (int j = 0; j < k; ++j) z += node[j] * x[j];
        // code bit 0 means target sign +1: loss term -log sigmoid(z)
        loss += code[d] == 0 ? softplus(-z) : softplus(z);
        double g = sigmoid(z) - (code[d] == 0 ? 1.0 : 0.0);
        double glr = g * lr;
        for (int j = 0; j < k; ++j) {
            gx[j] += g * node[j];
            node[j] -= static_cast<float>(glr * x[j]);
        }
    }
    if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at center=" + std::to_string(center) +
                           " context=" + std::to_string(context));
    }
    for (int r = 0; r < nrows; ++r) {
        float* row = rows[r];
        for (int j = 0; j < k; ++j) row[j] -= static_cast<float>(lr * gx[j]);
    }
    return loss;
}

template <typename Model>
double loss_only(const Model& model, const HuffmanTree& tree, const TrainingExample& ex) {
    std::vector<double> x(model.dim);
    input_vector(model, ex.center, ex.speaker, x.data());
    return hs_loss(x.data(), model.dim, ex.context, tree, model.node_params);
}

}  // namespace

std::vector<std::pair<int32_t, int32_t>> generate_pairs(const std::vector<int32_t>& words,
                                                        int window, std::mt19937_64& rng) {
    std::vector<std::pair<int32_t, int32_t>> out;
    for_each_pair(words, window, rng,
                  [&](int32_t center, int32_t context) { out.emplace_back(center, context); });
    return out;
}

HsGradients hs_loss_and_grad(const double* input, int dim, int32_t target, const HuffmanTree& tree,
                             const Matrix& node_params) {
    HsGradients out;
    out.grad_input.assign(dim, 0.0);
    const auto& code = tree.codes[target];
    const auto& path = tree.paths[target];
    for (size_t d = 0; d < code.size(); ++d) {
        const float* node = node_params.row(path[d]);
        double z = 0.0;
        for (int j = 0; j < dim; ++j) z += node[j] * input[j];
        out.loss += code[d] == 0 ? softplus(-z) : softplus(z);
        double g = sigmoid(z) - (code[d] == 0 ? 1.0 : 0.0);
        std::vector<double> gn(dim);
        for (int j = 0; j < dim; ++j) {
            out.grad_input[j] += g * node[j];
            gn[j] = g * input[j];
        }
        out.grad_nodes.emplace_back(path[d], std::move(gn));
    }
    if (!std::isfinite(out.loss)) {
        throw NumericError("non-finite hierarchical-softmax loss for target " +
                           std::to_string(target));
    }
    return out;
}

double hs_loss(const double* input, int dim, int32_t target, const HuffmanTree& tree,
               const Matrix& node_params) {
    const auto& code = tree.codes[target];
    const auto& path = tree.paths[target];
    double loss = 0.0;
    for (size_t d = 0; d < code.size(); ++d) {
        const float* node = node_params.row(path[d]);
        double z = 0.0;
        for (int j = 0; j < dim; ++j) z += node[j] * input[j];
        loss += code[d] == 0 ? softplus(-z) : softplus(z);
    }
    if (!std::isfinite(loss)) {
        throw NumericError("non-finite hierarchical-softmax loss for target " +
                           std::to_string(target));
    }
    return loss;
}

double hs_probability(const double* input, int dim, int32_t target, const HuffmanTree& tree,
                      const Matrix& node_params) {
    const auto& code = tree.codes[target];
    const auto& path = tree.paths[target];
    double p = 1.0;
    for (size_t d = 0; d < code.size(); ++d) {
        const float* node = node_params.row(path[d]);
        double z = 0.0;
        for (int j = 0; j < dim; ++j) z += node[j] * input[j];
        p *= sigmoid(code[d] == 0 ? z : -z);
    }
    return p;
}

double sgd_step(GenericModel& model, const HuffmanTree& tree, const TrainingExample& ex,
                double lr) {
    StepScratch scratch;
    return hs_sgd_step(model, tree, ex.center, ex.context, ex.speaker, lr, scratch);
}

double sgd_step(DemographicVectorsModel& model, const HuffmanTree& tree,
                const TrainingExample& ex, double lr) {
    StepScratch scratch;
    return hs_sgd_step(model, tree, ex.center, ex.context, ex.speaker, lr, scratch);
}

double sgd_step(DemographicMatricesModel& model, const HuffmanTree& tree,
                const TrainingExample& ex, double lr) {
    StepScratch scratch;
    return hs_sgd_step(model, tree, ex.center, ex.context, ex.speaker, lr, scratch);
}

double example_loss(const GenericModel& model, const HuffmanTree& tree,
                    const TrainingExample& ex) {
    return loss_only(model, tree, ex);
}

double example_loss(const DemographicVectorsModel& model, const HuffmanTree& tree,
                    const TrainingExample& ex) {
    return loss_only(model, tree, ex);
}

double example_loss(const DemographicMatricesModel& model, const HuffmanTree& tree,
                    const TrainingExample& ex) {
    return loss_only(model, tree, ex);
}

double expected_examples_per_epoch(const std::vector<TrainingSequence>& corpus, int window) {
    const double w = window;
    // S(l) = sum_{b=1}^{window} min(b, l): expected one-sided pair count times window.
    auto side = [&](int64_t l) {
        if (l >= window) return w * (w + 1.0) / 2.0;
        double ld = static_cast<double>(l);
        return ld * (ld + 1.0) / 2.0 + (w - ld) * ld;
    };
    double total = 0.0;
    for (const auto& seq : corpus) {
        const int64_t len = static_cast<int64_t>(seq.words.size());
        for (int64_t t = 0; t < len; ++t) {
            total += (side(t) + side(len - 1 - t)) / w;
        }
    }
    return total;
}

std::vector<TrainingSequence> build_training_corpus(const std::vector<Post>& posts,
                                                    const std::vector<UserProfile>& profiles,
                                                    const Vocabulary& vocab) {
    std::unordered_map<std::string, SpeakerValues> by_user;
    for (const auto& p : profiles) by_user.emplace(p.user_id, p.values);

    std::vector<TrainingSequence> corpus;
    for (const Post& post : posts) {
        TrainingSequence seq;
        for (const auto& tok : tokenize(post.body)) {
            int32_t id = vocab.lookup(tok);
            if (id >= 0) seq.words.push_back(id);
        }
        if (seq.words.empty()) continue;
        auto it = by_user.find(post.user_id);
        if (it != by_user.end()) seq.speaker = it->second;
        corpus.push_back(std::move(seq));
    }
    return corpus;
}

namespace {

struct Progress {
    std::atomic<uint64_t> examples{0};
    std::atomic<uint64_t> tokens{0};
    std::mutex mutex;
    std::vector<double> epoch_loss_sum;
    std::vector<uint64_t> epoch_loss_n;
    double loss_sum = 0.0;
    uint64_t loss_n = 0;
    std::chrono::steady_clock::time_point start;
};

struct WorkerParams {
    const std::vector<TrainingSequence>* corpus;
    const HuffmanTree* tree;
    const TrainingConfig* config;
    double total_expected;
    int worker_id;
    Progress* progress;
};

template <typename Model>
void train_worker(Model& model, const WorkerParams& p) {
    const TrainingConfig& cfg = *p.config;
    const double initial_lr = cfg.initial_lr;
    const double floor_lr = initial_lr * 1e-4;
    const double decay = (initial_lr - floor_lr) / p.total_expected;
    std::mt19937_64 rng(cfg.seed + 0x9E3779B97F4A7C15ULL * static_cast<uint64_t>(p.worker_id + 1));
    StepScratch scratch;

    double local_loss = 0.0;
    uint64_t local_n = 0;
    uint64_t local_tokens = 0;
    auto flush = [&](int epoch) {
        std::lock_guard<std::mutex> lock(p.progress->mutex);
        p.progress->epoch_loss_sum[epoch] += local_loss;
        p.progress->epoch_loss_n[epoch] += local_n;
        p.progress->loss_sum += local_loss;
        p.progress->loss_n += local_n;
        local_loss = 0.0;
        local_n = 0;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t s = p.worker_id; s < p.corpus->size(); s += cfg.workers) {
            const TrainingSequence& seq = (*p.corpus)[s];
            local_tokens += seq.words.size();
            for_each_pair(seq.words, cfg.window, rng, [&](int32_t center, int32_t context) {
                uint64_t done = p.progress->examples.fetch_add(1, std::memory_order_relaxed);
                double lr = initial_lr - decay * static_cast<double>(done);
                if (lr < floor_lr) lr = floor_lr;
                local_loss += hs_sgd_step(model, *p.tree, center, context, seq.speaker, lr, scratch);
                ++local_n;
                if (cfg.status_every > 0 && (done + 1) % cfg.status_every == 0) {
                    p.progress->tokens.fetch_add(local_tokens, std::memory_order_relaxed);
                    local_tokens = 0;
                    flush(epoch);
                    std::lock_guard<std::mutex> lock(p.progress->mutex);
                    auto now = std::chrono::steady_clock::now();
                    double secs = std::chrono::duration<double>(now - p.progress->start).count();
                    double tps = secs > 0 ? p.progress->tokens.load(std::memory_order_relaxed) / secs
                                          : 0.0;
                    double avg = p.progress->loss_n > 0
                                     ? p.progress->loss_sum / static_cast<double>(p.progress->loss_n)
                                     : 0.0;
                    std::fprintf(stderr, "status examples=%llu tokens_per_sec=%.1f avg_loss=%.6f lr=%.6g\n",
                                 static_cast<unsigned long long>(done + 1), tps, avg, lr);
                }
            });
        }
        flush(epoch);
    }
    p.progress->tokens.fetch_add(local_tokens, std::memory_order_relaxed);
}

template <typename Model>
void run_workers(Model& model, const std::vector<TrainingSequence>& corpus,
                 const HuffmanTree& tree, const TrainingConfig& config, double total_expected,
                 Progress& progress) {
    WorkerParams base{&corpus, &tree, &config, total_expected, 0, &progress};
    if (config.workers <= 1) {
        train_worker(model, base);
        return;
    }
    std::vector<std::thread> threads;
    for (int w = 0; w < config.workers; ++w) {
        WorkerParams p = base;
        p.worker_id = w;
        threads.emplace_back([&model, p] {
            Model& m = model;
            train_worker(m, p);
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace

TrainResult train(const std::vector<TrainingSequence>& corpus, const Vocabulary& vocab,
                  const HuffmanTree& tree, Architecture arch, std::optional<Attribute> attribute,
                  const TrainingConfig& config) {
    if (corpus.empty()) throw DataError("training corpus is empty");
    double total_expected = config.epochs * expected_examples_per_epoch(corpus, config.window);
    if (total_expected <= 0.0) throw DataError("training corpus yields no examples");

    Progress progress;
    progress.epoch_loss_sum.assign(config.epochs, 0.0);
    progress.epoch_loss_n.assign(config.epochs, 0);
    progress.start = std::chrono::steady_clock::now();

    TrainResult result;
    switch (arch) {
        case Architecture::Generic: {
            GenericModel model = init_generic(vocab, config.dim, config.seed);
            run_workers(model, corpus, tree, config, total_expected, progress);
            result.model = std::move(model);
            break;
        }
        case Architecture::DemographicVectors: {
            DemographicVectorsModel model = init_demographic_vectors(vocab, config.dim, config.seed);
            run_workers(model, corpus, tree, config, total_expected, progress);
            result.model = std::move(model);
            break;
        }
        case Architecture::DemographicMatrices: {
            if (!attribute) throw ConfigError("matrices architecture requires an attribute");
            DemographicMatricesModel model =
                init_demographic_matrices(vocab, config.dim, *attribute, config.seed);
            run_workers(model, corpus, tree, config, total_expected, progress);
            result.model = std::move(model);
            break;
        }
    }

    auto now = std::chrono::steady_clock::now();
    result.seconds = std::chrono::duration<double>(now - progress.start).count();
    result.examples = progress.examples.load();
    result.tokens = progress.tokens.load();
    result.epoch_losses.resize(config.epochs);
    for (int e = 0; e < config.epochs; ++e) {
        result.epoch_losses[e] = progress.epoch_loss_n[e] > 0
                                     ? progress.epoch_loss_sum[e] /
                                           static_cast<double>(progress.epoch_loss_n[e])
                                     : 0.0;
    }
    return result;
}

}  // namespace cdwe
