#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "cdwe/model.hpp"
#include "cdwe/rng.hpp"

namespace cdwe {

/// One post mapped to vocabulary indices, tagged with its author's values.
struct TrainingSequence {
    std::vector<int32_t> words;
    SpeakerValues speaker;
};

struct TrainingExample {
    int32_t center = 0;
    int32_t context = 0;
    SpeakerValues speaker;
};

enum class Architecture { Generic, DemographicVectors, DemographicMatrices };

/// Skip-gram pair stream for one sequence: at each position a window size b
/// is drawn uniformly from [1, window] and the in-bounds (center, context)
/// pairs are emitted left to right.
template <typename Fn>
inline void for_each_pair(const std::vector<int32_t>& words, int window, std::mt19937_64& rng,
                          Fn&& fn);

std::vector<std::pair<int32_t, int32_t>> generate_pairs(const std::vector<int32_t>& words,
                                                        int window, std::mt19937_64& rng);

struct HsGradients {
    double loss = 0.0;
    std::vector<double> grad_input;
    std::vector<std::pair<int32_t, std::vector<double>>> grad_nodes;
};

/// Hierarchical-softmax loss -sum_j log sigmoid(s_j <node_j, input>) along the
/// target's Huffman path, with exact analytic gradients.
HsGradients hs_loss_and_grad(const double* input, int dim, int32_t target, const HuffmanTree& tree,
                             const Matrix& node_params);
double hs_loss(const double* input, int dim, int32_t target, const HuffmanTree& tree,
               const Matrix& node_params);

/// P(target | input) as the product of branch sigmoids along the path.
double hs_probability(const double* input, int dim, int32_t target, const HuffmanTree& tree,
                      const Matrix& node_params);

/// One SGD step; the input-side gradient lands on every table row that
/// contributed to the input vector. Returns the pre-update loss.
double sgd_step(GenericModel& model, const HuffmanTree& tree, const TrainingExample& ex, double lr);
double sgd_step(DemographicVectorsModel& model, const HuffmanTree& tree, const TrainingExample& ex,
                double lr);
double sgd_step(DemographicMatricesModel& model, const HuffmanTree& tree,
                const TrainingExample& ex, double lr);

/// Forward-only loss of one example (no update).
double example_loss(const GenericModel& model, const HuffmanTree& tree, const TrainingExample& ex);
double example_loss(const DemographicVectorsModel& model, const HuffmanTree& tree,
                    const TrainingExample& ex);
double example_loss(const DemographicMatricesModel& model, const HuffmanTree& tree,
                    const TrainingExample& ex);

/// Expected number of (center, context) pairs one epoch over the corpus will
/// emit, taking the expectation over the uniform window draw.
double expected_examples_per_epoch(const std::vector<TrainingSequence>& corpus, int window);

/// Tokenize posts, map to vocabulary indices (out-of-vocabulary tokens are
/// skipped) and attach the author's profile values (all Unknown if absent).
std::vector<TrainingSequence> build_training_corpus(const std::vector<Post>& posts,
                                                    const std::vector<UserProfile>& profiles,
                                                    const Vocabulary& vocab);

struct TrainResult {
    EmbeddingModel model;
    std::vector<double> epoch_losses;  // mean example loss per epoch
    uint64_t examples = 0;
    uint64_t tokens = 0;
    double seconds = 0.0;
};

/// Train with the learning rate decaying linearly from initial_lr to
/// initial_lr/10000 over the expected example count. Single-worker runs are
/// bit-deterministic per seed; multi-worker runs share tables lock-free.
TrainResult train(const std::vector<TrainingSequence>& corpus, const Vocabulary& vocab,
                  const HuffmanTree& tree, Architecture arch, std::optional<Attribute> attribute,
                  const TrainingConfig& config);

// --- implementation of the inline pair stream ---

template <typename Fn>
inline void for_each_pair(const std::vector<int32_t>& words, int window, std::mt19937_64& rng,
                          Fn&& fn) {
    const int64_t len = static_cast<int64_t>(words.size());
    for (int64_t t = 0; t < len; ++t) {
        int64_t b = 1 + static_cast<int64_t>(bounded_rand(rng, static_cast<uint64_t>(window)));
        int64_t lo = t - b < 0 ? 0 : t - b;
        int64_t hi = t + b >= len ? len - 1 : t + b;
        for (int64_t c = lo; c <= hi; ++c) {
            if (c == t) continue;
            fn(words[t], words[c]);
        }
    }
}

}  // namespace cdwe
