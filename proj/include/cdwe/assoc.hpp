#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdwe/store.hpp"

namespace cdwe {

struct AssociationStimulus {
    std::string stimulus;
    std::vector<std::pair<std::string, int64_t>> responses;  // word -> f_w
    int64_t participants = 0;                                // t
    int64_t f_max = 0;
};

struct AssociationDataset {
    std::string group;
    std::vector<AssociationStimulus> stimuli;
};

/// Dataset file: stanza per stimulus — "<stimulus>\t<t>" then one
/// "<response>\t<f_w>" line per response, stanzas separated by blank lines.
AssociationDataset load_association_data(std::istream& in, const std::string& group = "");
AssociationDataset load_association_file(const std::string& path, const std::string& group = "");

struct EvalOutcome {
    double score = 0.0;
    double coverage = 0.0;  // fraction of stimuli whose stimulus word is in vocab
    std::vector<std::pair<std::string, double>> per_stimulus;
};

/// best: f_w / f_max for the nearest in-vocabulary neighbor w of the stimulus
/// (f_w = 0 when w is not among the responses), averaged over in-vocab stimuli.
EvalOutcome eval_best(const EmbeddingSpace& space, const AssociationDataset& dataset);

/// ooN: sum of f_w over the N nearest words, divided by t, averaged likewise.
EvalOutcome eval_ooN(const EmbeddingSpace& space, const AssociationDataset& dataset, int n);

struct MetricSpec {
    std::string name;  // "best" or "ooN"
    int n = 0;         // 0 for best
};

MetricSpec parse_metric(const std::string& name);

struct EvalMatrixResult {
    std::vector<std::string> groups;  // column order
    struct Row {
        std::string metric;
        std::vector<double> scores;     // one per group
        std::vector<double> coverages;  // one per group
        double macro = 0.0;             // unweighted mean over groups
    };
    std::vector<Row> rows;
};

/// One row per metric, one column per group plus the macro average.
EvalMatrixResult eval_matrix(const std::map<std::string, const EmbeddingSpace*>& spaces,
                             const std::map<std::string, const AssociationDataset*>& datasets,
                             const std::vector<MetricSpec>& metrics);

}  // namespace cdwe
