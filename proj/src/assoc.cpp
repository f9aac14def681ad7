#include "cdwe/assoc.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cdwe/errors.hpp"

namespace cdwe {

AssociationDataset load_association_data(std::istream& in, const std::string& group) {
    AssociationDataset dataset;
    dataset.group = group;
    std::set<std::string> seen;
    std::string line;
    size_t lineno = 0;
    AssociationStimulus current;
    bool open = false;

    auto close_stanza = [&]() {
        if (!open) return;
        if (current.responses.empty()) {
            throw DataError("stimulus '" + current.stimulus + "' has no responses");
        }
        dataset.stimuli.push_back(std::move(current));
        current = AssociationStimulus{};
        open = false;
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            close_stanza();
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("line " + std::to_string(lineno) + ": expected <word>\\t<count>");
        }
        std::string word = line.substr(0, tab);
        int64_t count = 0;
        try {
            count = std::stoll(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw DataError("line " + std::to_string(lineno) + ": bad count");
        }
        if (count <= 0) {
            throw DataError("line " + std::to_string(lineno) + ": nonpositive count " +
                            std::to_string(count));
        }
        if (!open) {
            if (!seen.insert(word).second) {
                throw DataError("line " + std::to_string(lineno) + ": duplicate stimulus '" + word +
                                "'");
            }
            current.stimulus = word;
            current.participants = count;
            open = true;
        } else {
            current.responses.emplace_back(word, count);
            current.f_max = std::max(current.f_max, count);
        }
    }
    close_stanza();
    if (dataset.stimuli.empty()) throw DataError("association dataset has no stimuli");
    return dataset;
}

AssociationDataset load_association_file(const std::string& path, const std::string& group) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open association dataset: " + path);
    try {
        return load_association_data(in, group);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

namespace {

int64_t response_count(const AssociationStimulus& s, const std::string& word) {
    for (const auto& [w, f] : s.responses) {
        if (w == word) return f;
    }
    return 0;
}

template <typename PerStimulus>
EvalOutcome evaluate(const EmbeddingSpace& space, const AssociationDataset& dataset,
                     PerStimulus&& score_fn) {
    EvalOutcome out;
    double sum = 0.0;
    size_t evaluated = 0;
    for (const auto& stimulus : dataset.stimuli) {
        if (space.lookup(stimulus.stimulus) < 0) continue;
        double s = score_fn(stimulus);
        out.per_stimulus.emplace_back(stimulus.stimulus, s);
        sum += s;
        ++evaluated;
    }
    out.score = evaluated > 0 ? sum / static_cast<double>(evaluated) : 0.0;
    out.coverage = dataset.stimuli.empty()
                       ? 0.0
                       : static_cast<double>(evaluated) / static_cast<double>(dataset.stimuli.size());
    return out;
}

}  // namespace

EvalOutcome eval_best(const EmbeddingSpace& space, const AssociationDataset& dataset) {
    return evaluate(space, dataset, [&](const AssociationStimulus& s) {
        auto nn = nearest_neighbors(space, s.stimulus, 1);
        int64_t f = response_count(s, nn[0].word);
        return static_cast<double>(f) / static_cast<double>(s.f_max);
    });
}

EvalOutcome eval_ooN(const EmbeddingSpace& space, const AssociationDataset& dataset, int n) {
    if (n < 1) throw ConfigError("ooN requires N >= 1");
    return evaluate(space, dataset, [&](const AssociationStimulus& s) {
        int limit = std::min<int>(n, static_cast<int>(space.words.size()) - 1);
        auto nn = nearest_neighbors(space, s.stimulus, limit);
        int64_t total = 0;
        for (const auto& x : nn) total += response_count(s, x.word);
        return static_cast<double>(total) / static_cast<double>(s.participants);
    });
}

MetricSpec parse_metric(const std::string& name) {
    if (name == "best") return {"best", 0};
    if (name.size() > 2 && name.compare(0, 2, "oo") == 0) {
        try {
            int n = std::stoi(name.substr(2));
            if (n >= 1) return {name, n};
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("unknown metric '" + name + "' (expected best or ooN)");
}

EvalMatrixResult eval_matrix(const std::map<std::string, const EmbeddingSpace*>& spaces,
                             const std::map<std::string, const AssociationDataset*>& datasets,
                             const std::vector<MetricSpec>& metrics) {
    std::string missing;
    for (const auto& [group, _] : datasets) {
        if (!spaces.count(group)) missing += (missing.empty() ? "" : ", ") + group;
    }
    for (const auto& [group, _] : spaces) {
        if (!datasets.count(group)) missing += (missing.empty() ? "" : ", ") + group;
    }
    if (!missing.empty()) {
        throw DataError("group keys do not align; missing: " + missing);
    }

    EvalMatrixResult result;
    for (const auto& [group, _] : datasets) result.groups.push_back(group);
    for (const auto& metric : metrics) {
        EvalMatrixResult::Row row;
        row.metric = metric.name;
        double sum = 0.0;
        for (const auto& group : result.groups) {
            const EmbeddingSpace& space = *spaces.at(group);
            const AssociationDataset& dataset = *datasets.at(group);
            EvalOutcome outcome = metric.n == 0 ? eval_best(space, dataset)
                                                : eval_ooN(space, dataset, metric.n);
            row.scores.push_back(outcome.score);
            row.coverages.push_back(outcome.coverage);
            sum += outcome.score;
        }
        row.macro = sum / static_cast<double>(result.groups.size());
        result.rows.push_back(std::move(row));
    }
    return result;
}

}  // namespace cdwe
