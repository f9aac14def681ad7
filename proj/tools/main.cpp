#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdwe/assoc.hpp"
#include "cdwe/corpus.hpp"
#include "cdwe/demographics.hpp"
#include "cdwe/errors.hpp"
#include "cdwe/model.hpp"
#include "cdwe/store.hpp"
#include "cdwe/train.hpp"
#include "cdwe/vocab.hpp"

namespace {

using namespace cdwe;

uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input for digest: " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
        if (!in) break;
    }
    return hex64(h);
}

/// Every artifact-producing run records its resolved config, seed and input
/// digests next to the primary output, so the artifact can be regenerated.
void write_manifest(const std::string& primary_output, const std::string& command,
                    const std::string& resolved_config, uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = hex64(fnv1a(resolved_config.data(), resolved_config.size()));
    j["seed"] = seed;
    nlohmann::json in = nlohmann::json::object();
    for (const auto& path : inputs) in[path] = digest_file(path);
    j["inputs"] = in;
    j["outputs"] = outputs;
    std::ofstream out(primary_output + ".manifest.json");
    if (!out) throw DataError("cannot write manifest for " + primary_output);
    out << j.dump(2) << '\n';
}

std::vector<Post> load_posts_filtered(const std::string& posts_path, const std::string& bots_path) {
    LoadStats stats;
    std::vector<Post> posts = load_posts_file(posts_path, &stats);
    if (stats.skipped > 0) {
        std::fprintf(stderr, "note: skipped %llu malformed lines in %s\n",
                     static_cast<unsigned long long>(stats.skipped), posts_path.c_str());
    }
    if (!bots_path.empty()) {
        auto bots = load_bot_list(bots_path);
        std::erase_if(posts, [&](const Post& p) { return bots.count(p.user_id) > 0; });
    }
    return posts;
}

Architecture parse_arch(const std::string& name) {
    if (name == "generic") return Architecture::Generic;
    if (name == "dvec") return Architecture::DemographicVectors;
    if (name == "dmat") return Architecture::DemographicMatrices;
    throw ConfigError("unknown architecture '" + name + "' (expected generic|dvec|dmat)");
}

EmbeddingSpace space_from_model(const EmbeddingModel& model, const std::string& value_name_opt) {
    if (const auto* m = std::get_if<GenericModel>(&model)) {
        if (!value_name_opt.empty()) throw ConfigError("generic models have no value spaces");
        return space_from_generic(*m);
    }
    if (const auto* m = std::get_if<DemographicVectorsModel>(&model)) {
        if (!value_name_opt.empty()) throw ConfigError("vectors models have no value spaces");
        return space_from_vectors_words(*m);
    }
    const auto& m = std::get<DemographicMatricesModel>(model);
    if (value_name_opt.empty()) return space_from_matrices(m);
    auto value = parse_value(m.attribute, value_name_opt);
    if (!value) {
        throw ConfigError("'" + value_name_opt + "' is not a value of attribute " +
                          attribute_name(m.attribute));
    }
    return space_from_matrices(m, *value);
}

struct ExtractOpts {
    std::string posts, bots, output;
    std::vector<std::string> gazetteer;
    double span_years = 8.0;
};

void run_extract(const ExtractOpts& o, const std::string& resolved) {
    Gazetteer gaz = load_gazetteer(o.gazetteer);
    std::vector<Post> posts = load_posts_filtered(o.posts, o.bots);

    std::map<std::string, std::vector<Post>> by_user;
    for (auto& p : posts) by_user[p.user_id].push_back(std::move(p));

    std::vector<UserProfile> profiles;
    uint64_t removed = 0;
    for (const auto& [user, user_posts] : by_user) {
        auto profile = build_profile(user, user_posts, o.span_years, gaz);
        if (profile) {
            profiles.push_back(std::move(*profile));
        } else {
            ++removed;
        }
    }
    std::ofstream out(o.output);
    if (!out) throw DataError("cannot write profiles: " + o.output);
    write_profiles(profiles, out);
    std::fprintf(stderr, "extracted %zu profiles, removed %llu users\n", profiles.size(),
                 static_cast<unsigned long long>(removed));

    std::vector<std::string> inputs = {o.posts};
    for (const auto& g : o.gazetteer) inputs.push_back(g);
    if (!o.bots.empty()) inputs.push_back(o.bots);
    write_manifest(o.output, "extract", resolved, 0, inputs, {o.output});
}

struct SubsetOpts {
    std::string profiles, output;
    int min_known = 2;
};

void run_subset(const SubsetOpts& o, const std::string& resolved) {
    auto profiles = read_profiles_file(o.profiles);
    auto users = select_subset(profiles, o.min_known);
    std::ofstream out(o.output);
    if (!out) throw DataError("cannot write subset: " + o.output);
    for (const auto& u : users) out << u << '\n';
    write_manifest(o.output, "subset", resolved, 0, {o.profiles}, {o.output});
}

struct SplitOpts {
    std::string posts, output;
    uint64_t train = 0, val = 0, test = 0, seed = 1;
};

void run_split(const SplitOpts& o, const std::string& resolved) {
    LoadStats stats;
    std::vector<Post> posts = load_posts_file(o.posts, &stats);
    CorpusSplit split = make_splits(posts.size(), {o.train, o.val, o.test}, o.seed);
    std::ofstream out(o.output);
    if (!out) throw DataError("cannot write split manifest: " + o.output);
    write_split_manifest(split, out);
    write_manifest(o.output, "split", resolved, o.seed, {o.posts}, {o.output});
}

struct TrainOpts {
    std::string posts, profiles, bots, output;
    std::string arch = "generic";
    std::string attribute;
    TrainingConfig config;
};

void run_train(const TrainOpts& o, const std::string& resolved) {
    std::vector<Post> posts = load_posts_filtered(o.posts, o.bots);
    std::vector<UserProfile> profiles;
    if (!o.profiles.empty()) profiles = read_profiles_file(o.profiles);

    WordCounts counts;
    for (const Post& p : posts) {
        TokenSequence tokens = tokenize(p.body);
        count_words(tokens, counts);
    }
    Vocabulary vocab = build_vocab(counts, o.config.min_count);
    HuffmanTree tree = build_huffman(vocab);
    auto corpus = build_training_corpus(posts, profiles, vocab);

    Architecture arch = parse_arch(o.arch);
    std::optional<Attribute> attribute;
    if (!o.attribute.empty()) {
        attribute = parse_attribute(o.attribute);
        if (!attribute) throw ConfigError("unknown attribute '" + o.attribute + "'");
    }
    if (arch == Architecture::DemographicMatrices && !attribute) {
        throw ConfigError("--arch dmat requires --attribute");
    }

    TrainResult result = train(corpus, vocab, tree, arch, attribute, o.config);
    save_model(result.model, o.output);
    std::fprintf(stderr,
                 "trained %s: |V|=%zu examples=%llu tokens=%llu tokens_per_sec=%.0f final_avg_loss=%.6f\n",
                 o.arch.c_str(), vocab.size(), static_cast<unsigned long long>(result.examples),
                 static_cast<unsigned long long>(result.tokens),
                 result.seconds > 0 ? result.tokens / result.seconds : 0.0,
                 result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back());

    std::vector<std::string> inputs = {o.posts};
    if (!o.profiles.empty()) inputs.push_back(o.profiles);
    if (!o.bots.empty()) inputs.push_back(o.bots);
    write_manifest(o.output, "train", resolved, o.config.seed, inputs, {o.output});
}

struct NeighborsOpts {
    std::string model, word, value, output;
    int n = 10;
};

void run_neighbors(const NeighborsOpts& o, const std::string& resolved) {
    EmbeddingModel model = load_model(o.model);
    EmbeddingSpace space = space_from_model(model, o.value);
    auto neighbors = nearest_neighbors(space, o.word, o.n);
    std::string lines;
    char buf[64];
    for (const auto& nb : neighbors) {
        std::snprintf(buf, sizeof(buf), "%.6f", nb.cosine);
        lines += nb.word + "\t" + buf + "\n";
    }
    std::fputs(lines.c_str(), stdout);
    if (!o.output.empty()) {
        std::ofstream out(o.output);
        if (!out) throw DataError("cannot write neighbors: " + o.output);
        out << lines;
        write_manifest(o.output, "neighbors", resolved, 0, {o.model}, {o.output});
    }
}

struct OverlapOpts {
    std::string model_a, model_b, value_a, value_b, word, output;
    int n = 10;
};

void run_overlap(const OverlapOpts& o, const std::string& resolved) {
    EmbeddingModel a = load_model(o.model_a);
    EmbeddingModel b = load_model(o.model_b);
    EmbeddingSpace sa = space_from_model(a, o.value_a);
    EmbeddingSpace sb = space_from_model(b, o.value_b);
    double overlap = neighbor_overlap(o.word, sa, sb, o.n);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f\n", overlap);
    std::fputs(buf, stdout);
    if (!o.output.empty()) {
        std::ofstream out(o.output);
        if (!out) throw DataError("cannot write overlap: " + o.output);
        out << buf;
        write_manifest(o.output, "overlap", resolved, 0, {o.model_a, o.model_b}, {o.output});
    }
}

struct ComposeOpts {
    std::string generic, dvec, output;
    std::vector<std::string> matrices;
    std::string age = "unknown", gender = "unknown", location = "unknown", religion = "unknown";
    bool no_generic = false;
};

SpeakerValues parse_profile_values(const ComposeOpts& o) {
    SpeakerValues values;
    auto need = [](Attribute attr, const std::string& name) {
        auto v = parse_value(attr, name);
        if (!v) {
            throw ConfigError("'" + name + "' is not a value of attribute " + attribute_name(attr));
        }
        return *v;
    };
    values.age = static_cast<Age>(need(Attribute::Age, o.age));
    values.gender = static_cast<Gender>(need(Attribute::Gender, o.gender));
    values.location = static_cast<Location>(need(Attribute::Location, o.location));
    values.religion = static_cast<Religion>(need(Attribute::Religion, o.religion));
    return values;
}

void run_compose(const ComposeOpts& o, const std::string& resolved) {
    SpeakerValues profile = parse_profile_values(o);
    ComposedSpace composed;
    std::vector<std::string> inputs;

    if (!o.dvec.empty()) {
        if (!o.generic.empty() || !o.matrices.empty()) {
            throw ConfigError("--dvec composition cannot be combined with --generic/--matrix");
        }
        EmbeddingModel model = load_model(o.dvec);
        const auto* m = std::get_if<DemographicVectorsModel>(&model);
        if (!m) throw DataError(o.dvec + ": not a demographic-vectors model");
        composed = compose_demographic_vectors(*m, profile);
        inputs.push_back(o.dvec);
    } else {
        std::optional<GenericModel> generic_model;
        if (!o.generic.empty()) {
            EmbeddingModel model = load_model(o.generic);
            if (const auto* g = std::get_if<GenericModel>(&model)) {
                generic_model = *g;
            } else if (const auto* dm = std::get_if<DemographicMatricesModel>(&model)) {
                // A matrices model can supply the generic part through its G table.
                GenericModel g;
                g.vocab = dm->vocab;
                g.dim = dm->dim;
                g.input = dm->generic;
                g.node_params = dm->node_params;
                generic_model = std::move(g);
            } else {
                throw DataError(o.generic + ": cannot use a vectors model as the generic part");
            }
            inputs.push_back(o.generic);
        }
        std::vector<EmbeddingModel> loaded;
        loaded.reserve(o.matrices.size());
        std::map<Attribute, const DemographicMatricesModel*> mats;
        CompositionSelection selection;
        selection.generic = !o.no_generic;
        for (const auto& path : o.matrices) {
            loaded.push_back(load_model(path));
            const auto* m = std::get_if<DemographicMatricesModel>(&loaded.back());
            if (!m) throw DataError(path + ": not a demographic-matrices model");
            if (mats.count(m->attribute)) {
                throw ConfigError("duplicate matrices model for attribute " +
                                  attribute_name(m->attribute));
            }
            mats[m->attribute] = m;
            selection.attributes.push_back(m->attribute);
            inputs.push_back(path);
        }
        composed = compose_for_user(generic_model ? &*generic_model : nullptr, mats, profile,
                                    selection);
    }

    save_space_text(composed.space, o.output);
    std::string parts;
    for (const auto& p : composed.parts) parts += (parts.empty() ? "" : " + ") + p;
    std::fprintf(stderr, "composed %s -> dim %d\n", parts.c_str(), composed.space.dim);
    write_manifest(o.output, "compose", resolved, 0, inputs, {o.output});
}

struct EvalAssocOpts {
    std::string space, data, output, summary;
    std::vector<std::string> groups;  // label=space_path:data_path
    std::string metrics = "best,oo3,oo10";
};

void run_eval_assoc(const EvalAssocOpts& o, const std::string& resolved) {
    std::vector<MetricSpec> metrics;
    {
        std::istringstream ms(o.metrics);
        std::string name;
        while (std::getline(ms, name, ',')) {
            if (!name.empty()) metrics.push_back(parse_metric(name));
        }
        if (metrics.empty()) throw ConfigError("no metrics selected");
    }

    std::map<std::string, EmbeddingSpace> spaces;
    std::map<std::string, AssociationDataset> datasets;
    std::vector<std::string> inputs;
    if (!o.groups.empty()) {
        if (!o.space.empty() || !o.data.empty()) {
            throw ConfigError("--group cannot be combined with --space/--data");
        }
        for (const auto& spec : o.groups) {
            auto eq = spec.find('=');
            auto colon = spec.find(':', eq == std::string::npos ? 0 : eq + 1);
            if (eq == std::string::npos || colon == std::string::npos) {
                throw ConfigError("bad --group spec '" + spec +
                                  "' (expected label=space_path:data_path)");
            }
            std::string label = spec.substr(0, eq);
            std::string space_path = spec.substr(eq + 1, colon - eq - 1);
            std::string data_path = spec.substr(colon + 1);
            if (spaces.count(label)) throw ConfigError("duplicate group label '" + label + "'");
            spaces.emplace(label, load_space_text(space_path));
            datasets.emplace(label, load_association_file(data_path, label));
            inputs.push_back(space_path);
            inputs.push_back(data_path);
        }
    } else {
        if (o.space.empty() || o.data.empty()) {
            throw ConfigError("eval-assoc needs --space and --data (or --group entries)");
        }
        spaces.emplace("all", load_space_text(o.space));
        datasets.emplace("all", load_association_file(o.data, "all"));
        inputs.push_back(o.space);
        inputs.push_back(o.data);
    }

    std::map<std::string, const EmbeddingSpace*> space_ptrs;
    std::map<std::string, const AssociationDataset*> dataset_ptrs;
    for (const auto& [label, space] : spaces) space_ptrs[label] = &space;
    for (const auto& [label, dataset] : datasets) dataset_ptrs[label] = &dataset;

    EvalMatrixResult result = eval_matrix(space_ptrs, dataset_ptrs, metrics);

    std::string table = "metric";
    for (const auto& g : result.groups) table += "\t" + g;
    table += "\tmacro\n";
    char buf[64];
    for (const auto& row : result.rows) {
        table += row.metric;
        for (double s : row.scores) {
            std::snprintf(buf, sizeof(buf), "\t%.6f", s);
            table += buf;
        }
        std::snprintf(buf, sizeof(buf), "\t%.6f\n", row.macro);
        table += buf;
    }
    std::fputs(table.c_str(), stdout);

    nlohmann::json summary;
    summary["groups"] = result.groups;
    for (const auto& row : result.rows) {
        nlohmann::json r;
        r["scores"] = row.scores;
        r["coverage"] = row.coverages;
        r["macro"] = row.macro;
        summary["metrics"][row.metric] = r;
    }
    if (!o.summary.empty()) {
        std::ofstream out(o.summary);
        if (!out) throw DataError("cannot write summary: " + o.summary);
        out << summary.dump(2) << '\n';
    }
    if (!o.output.empty()) {
        std::ofstream out(o.output);
        if (!out) throw DataError("cannot write results: " + o.output);
        out << table;
        write_manifest(o.output, "eval-assoc", resolved, 0, inputs, {o.output});
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compositional demographic word embeddings toolkit"};
    app.set_config("--config", "", "read option defaults from a config file");
    app.require_subcommand(1);

    ExtractOpts extract_opts;
    auto* extract = app.add_subcommand("extract", "extract demographic profiles from posts");
    extract->add_option("--posts", extract_opts.posts, "post records, one per line")->required();
    extract->add_option("--gazetteer", extract_opts.gazetteer, "gazetteer file(s)")->required();
    extract->add_option("--bots", extract_opts.bots, "bot account list");
    extract->add_option("--span-years", extract_opts.span_years, "corpus time span in years");
    extract->add_option("--output,-o", extract_opts.output, "profile table output")->required();

    SubsetOpts subset_opts;
    auto* subset = app.add_subcommand("subset", "select users by known attribute count");
    subset->add_option("--profiles", subset_opts.profiles, "profile table")->required();
    subset->add_option("--min-known", subset_opts.min_known, "minimum known attributes")
        ->check(CLI::Range(1, 4));
    subset->add_option("--output,-o", subset_opts.output, "user list output")->required();

    SplitOpts split_opts;
    auto* split = app.add_subcommand("split", "sample train/val/test post splits");
    split->add_option("--posts", split_opts.posts, "post records")->required();
    split->add_option("--train", split_opts.train, "training post count")->required();
    split->add_option("--val", split_opts.val, "validation post count")->required();
    split->add_option("--test", split_opts.test, "test post count")->required();
    split->add_option("--seed", split_opts.seed, "sampling seed");
    split->add_option("--output,-o", split_opts.output, "split manifest output")->required();

    TrainOpts train_opts;
    auto* train_cmd = app.add_subcommand("train", "train an embedding model");
    train_cmd->add_option("--posts", train_opts.posts, "post records")->required();
    train_cmd->add_option("--profiles", train_opts.profiles, "profile table");
    train_cmd->add_option("--bots", train_opts.bots, "bot account list");
    train_cmd->add_option("--arch", train_opts.arch, "generic|dvec|dmat");
    train_cmd->add_option("--attribute", train_opts.attribute, "attribute for --arch dmat");
    train_cmd->add_option("--dim", train_opts.config.dim, "embedding dimension");
    train_cmd->add_option("--lr", train_opts.config.initial_lr, "initial learning rate");
    train_cmd->add_option("--window", train_opts.config.window, "maximum context window");
    train_cmd->add_option("--epochs", train_opts.config.epochs, "training epochs");
    train_cmd->add_option("--min-count", train_opts.config.min_count, "vocabulary cutoff");
    train_cmd->add_option("--seed", train_opts.config.seed, "training seed");
    train_cmd->add_option("--workers", train_opts.config.workers, "worker threads")
        ->check(CLI::Range(1, 256));
    train_cmd->add_option("--status-every", train_opts.config.status_every,
                          "examples between status lines (0 = off)");
    train_cmd->add_option("--output,-o", train_opts.output, "model output")->required();

    NeighborsOpts neighbors_opts;
    auto* neighbors_cmd = app.add_subcommand("neighbors", "nearest neighbors of a word");
    neighbors_cmd->add_option("--model", neighbors_opts.model, "model file")->required();
    neighbors_cmd->add_option("--word", neighbors_opts.word, "query word")->required();
    neighbors_cmd->add_option("--n", neighbors_opts.n, "neighbor count");
    neighbors_cmd->add_option("--value", neighbors_opts.value,
                              "demographic value (matrices models)");
    neighbors_cmd->add_option("--output,-o", neighbors_opts.output, "also write results here");

    OverlapOpts overlap_opts;
    auto* overlap_cmd = app.add_subcommand("overlap", "neighbor overlap across two spaces");
    overlap_cmd->add_option("--model-a", overlap_opts.model_a, "first model")->required();
    overlap_cmd->add_option("--model-b", overlap_opts.model_b, "second model")->required();
    overlap_cmd->add_option("--value-a", overlap_opts.value_a, "value for the first model");
    overlap_cmd->add_option("--value-b", overlap_opts.value_b, "value for the second model");
    overlap_cmd->add_option("--word", overlap_opts.word, "query word")->required();
    overlap_cmd->add_option("--n", overlap_opts.n, "neighbor count");
    overlap_cmd->add_option("--output,-o", overlap_opts.output, "also write the fraction here");

    ComposeOpts compose_opts;
    auto* compose_cmd = app.add_subcommand("compose", "concatenate embeddings for a profile");
    compose_cmd->add_option("--generic", compose_opts.generic, "generic (or matrices) model");
    compose_cmd->add_option("--matrix", compose_opts.matrices, "matrices model(s)");
    compose_cmd->add_option("--dvec", compose_opts.dvec, "vectors model (word ⊕ value sum)");
    compose_cmd->add_flag("--no-generic", compose_opts.no_generic, "skip the generic part");
    compose_cmd->add_option("--age", compose_opts.age, "profile age value");
    compose_cmd->add_option("--gender", compose_opts.gender, "profile gender value");
    compose_cmd->add_option("--location", compose_opts.location, "profile location value");
    compose_cmd->add_option("--religion", compose_opts.religion, "profile religion value");
    compose_cmd->add_option("--output,-o", compose_opts.output, "composed space output (text)")
        ->required();

    EvalAssocOpts eval_opts;
    auto* eval_cmd = app.add_subcommand("eval-assoc", "score spaces on word association norms");
    eval_cmd->add_option("--space", eval_opts.space, "embedding space (text format)");
    eval_cmd->add_option("--data", eval_opts.data, "association dataset");
    eval_cmd->add_option("--group", eval_opts.groups,
                         "per-group spec label=space_path:data_path (repeatable)");
    eval_cmd->add_option("--metrics", eval_opts.metrics, "comma list of best|ooN");
    eval_cmd->add_option("--summary", eval_opts.summary, "machine-readable summary output");
    eval_cmd->add_option("--output,-o", eval_opts.output, "also write the table here");

    try {
        app.parse(argc, argv);
        std::string resolved = app.config_to_str(false, false);
        if (extract->parsed()) run_extract(extract_opts, resolved);
        if (subset->parsed()) run_subset(subset_opts, resolved);
        if (split->parsed()) run_split(split_opts, resolved);
        if (train_cmd->parsed()) run_train(train_opts, resolved);
        if (neighbors_cmd->parsed()) run_neighbors(neighbors_opts, resolved);
        if (overlap_cmd->parsed()) run_overlap(overlap_opts, resolved);
        if (compose_cmd->parsed()) run_compose(compose_opts, resolved);
        if (eval_cmd->parsed()) run_eval_assoc(eval_opts, resolved);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error class=config message=%s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error class=config message=%s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error class=data message=%s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error class=numeric message=%s\n", e.what());
        return 4;
    }
    return 0;
}
