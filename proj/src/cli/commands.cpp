#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "gramprobe/checksum.hpp"
#include "gramprobe/dataset.hpp"
#include "gramprobe/error.hpp"
#include "gramprobe/featurestore.hpp"
#include "gramprobe/metrics.hpp"
#include "gramprobe/probe_model.hpp"
#include "gramprobe/probes.hpp"
#include "gramprobe/synthetic.hpp"

namespace gramprobe::cli {

using json = nlohmann::ordered_json;

void Context::add_input(const std::string& path) { manifest.inputs.push_back({path, checksum_file(path)}); }

void Context::add_output(const std::string& path) { manifest.outputs.push_back({path, checksum_file(path)}); }

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << text;
    if (!out) throw DataError("write failed: " + path);
}

void write_json(const std::string& path, const json& j, Context& ctx) {
    write_text(path, j.dump(2) + "\n");
    ctx.add_output(path);
}

dataset::Dataset load_dataset(const std::string& path, Context& ctx) {
    if (path.empty()) throw UsageError("--data is required");
    auto data = dataset::read_jsonl(path);
    ctx.add_input(path);
    return data;
}

featurestore::FeatureDump load_dump(const std::string& path, Context& ctx) {
    if (path.empty()) throw UsageError("--features is required");
    auto dump = featurestore::read_dump(path);
    dump.validate();
    ctx.add_input(path);
    return dump;
}

void require_out(const std::string& out) {
    if (out.empty()) throw UsageError("--out is required");
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json cells_json(const std::vector<probes::SweepCell>& cells) {
    auto arr = json::array();
    for (const auto& c : cells) {
        arr.push_back({{"alpha", c.alpha}, {"dev_auc", c.dev_auc}, {"converged", c.converged},
                       {"iterations", c.iterations}});
    }
    return arr;
}

json probe_json(const probes::TrainedProbe& p) {
    return {{"alpha", p.alpha}, {"dev_auc", p.dev_auc}, {"test_auc", opt_json(p.test_auc)}, {"cells", cells_json(p.cells)}};
}

/// Dataset rows belonging to `split` ("all" keeps every row).
std::vector<const dataset::LabeledSentence*> rows_in_split(const dataset::Dataset& data, const std::string& split) {
    std::vector<const dataset::LabeledSentence*> rows;
    const bool all = split == "all";
    const auto wanted = all ? dataset::Split::Train : dataset::split_from_string(split);
    for (const auto& s : data) {
        if (all || s.split == wanted) rows.push_back(&s);
    }
    if (rows.empty()) throw DataError("no sentences in split '" + split + "'");
    return rows;
}

probes::ProbeConfig probe_config(const TrainOptions& o) {
    probes::ProbeConfig pc;
    if (!o.alpha_grid.empty()) pc.alpha_grid = o.alpha_grid;
    for (double a : pc.alpha_grid) {
        if (!(a > 0.0) || !std::isfinite(a)) throw UsageError("alpha grid values must be positive");
    }
    if (!(o.tolerance > 0.0)) throw UsageError("--tolerance must be positive");
    if (o.max_iterations < 1) throw UsageError("--max-iterations must be at least 1");
    pc.solver.tolerance = o.tolerance;
    pc.solver.max_iterations = o.max_iterations;
    return pc;
}

/// Neuron indices from a lasso report ({"neurons": [...]}) or a bare JSON array.
std::vector<std::size_t> read_neurons(const std::string& path, Context& ctx) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read neuron file " + path);
    std::vector<std::size_t> idx;
    try {
        const auto j = nlohmann::json::parse(in);
        const auto& arr = j.is_array() ? j : j.at("neurons");
        idx = arr.get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed neuron file " + path + ": " + e.what());
    }
    ctx.add_input(path);
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) throw DataError("neuron file has duplicate indices");
    return idx;
}

probes::ProbeModel l2_model(const probes::TrainedProbe& p, const std::string& trained_on) {
    probes::ProbeModel m;
    m.kind = probes::ProbeKind::LogisticL2;
    m.weights = p.fit.w;
    m.bias = p.fit.b;
    m.alpha_or_lambda = p.alpha;
    m.norm = p.norm;
    m.trained_on = trained_on;
    return m;
}

void save_model(const probes::ProbeModel& m, const std::string& path, Context& ctx) {
    probes::save_probe_model(m, path);
    ctx.add_output(path);
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_generate(const GenerateOptions& o, Context& ctx) {
    if (o.input.empty()) throw UsageError("--input is required");
    require_out(o.out);
    dataset::GenerationConfig cfg;
    cfg.n_sentences = o.n;
    cfg.seed = o.seed;
    cfg.dev_fraction = o.dev_fraction;
    cfg.k_range = {o.k_min, o.k_max};
    cfg.window = o.window;
    if (o.assignment == "blocks") cfg.assignment = dataset::Assignment::Blocks;
    else if (o.assignment == "uniform") cfg.assignment = dataset::Assignment::Uniform;
    else throw UsageError("--assignment must be blocks or uniform");
    cfg.validate();

    const auto corpus = dataset::read_corpus(o.input);
    ctx.add_input(o.input);
    if (o.n > corpus.size()) {
        ctx.warn("--n " + std::to_string(o.n) + " exceeds the corpus (" + std::to_string(corpus.size()) +
                 " lines); using all lines");
    }
    dataset::AssemblyStats stats;
    const auto data = dataset::assemble_dataset(corpus, cfg, &stats);
    if (data.empty()) throw DataError("generation produced no sentences");
    dataset::write_jsonl(o.out, data);
    ctx.add_output(o.out);
    ctx.out << "generated " << stats.pairs << " pairs from " << stats.used_sentences << " sentences (skipped "
            << stats.skipped[0] << " insertion, " << stats.skipped[1] << " deletion, " << stats.skipped[2]
            << " shuffle)\n";
}

// ---------------------------------------------------------------------------

void cmd_train(const TrainOptions& o, Context& ctx) {
    require_out(o.out);
    const auto pc = probe_config(o);
    const auto data = load_dataset(o.data, ctx);
    const auto dump = load_dump(o.features, ctx);
    const std::string trained_on = checksum_file(o.data);

    json report;
    report["mode"] = o.mode;
    report["alpha_grid"] = pc.alpha_grid;
    const std::string report_path = o.out + ".report.json";

    auto all_layers_split = [&] {
        if (dump.mode != featurestore::DumpMode::LastToken) throw DataError(o.mode + " requires a last_token dump");
        return probes::make_split_data(featurestore::concat_layers(dump), data);
    };

    if (o.mode == "layer-sweep") {
        const auto r = probes::layer_sweep(dump, data, pc);
        auto rows = json::array();
        for (const auto& row : r.layers) {
            rows.push_back({{"layer", row.layer}, {"best_alpha", row.best_alpha}, {"dev_auc", row.dev_auc},
                            {"cells", cells_json(row.cells)}});
        }
        report["layers"] = rows;
        report["selected_layer"] = r.selected_layer;
        report["selected_alpha"] = r.selected_alpha;
        report["dev_auc"] = r.selected.dev_auc;
        report["test_auc"] = opt_json(r.selected.test_auc);
        auto m = l2_model(r.selected, trained_on);
        m.layers = {r.selected_layer};
        save_model(m, o.out, ctx);
        ctx.out << "selected layer " << r.selected_layer << " alpha " << r.selected_alpha << " dev AUC "
                << r.selected.dev_auc << '\n';
    } else if (o.mode == "all-layers") {
        const auto p = probes::sweep_alphas(all_layers_split(), pc);
        report["probe"] = probe_json(p);
        auto m = l2_model(p, trained_on);
        m.all_layers = true;
        save_model(m, o.out, ctx);
        ctx.out << "all-layers probe alpha " << p.alpha << " dev AUC " << p.dev_auc << '\n';
    } else if (o.mode == "augmented") {
        if (dump.mode != featurestore::DumpMode::LastToken) throw DataError("augmented requires a last_token dump");
        if (o.layer >= static_cast<int>(dump.n_layers)) throw UsageError("--layer out of range");
        auto feats = o.layer >= 0 ? featurestore::select_layer(dump, static_cast<std::size_t>(o.layer))
                                  : featurestore::concat_layers(dump);
        feats = probes::augment_with_logprob(feats, dump);
        const auto p = probes::sweep_alphas(probes::make_split_data(feats, data), pc);
        report["layer"] = o.layer >= 0 ? json(o.layer) : json("all-layers");
        report["probe"] = probe_json(p);
        auto m = l2_model(p, trained_on);
        if (o.layer >= 0) m.layers = {o.layer};
        else m.all_layers = true;
        m.logprob_feature = true;
        save_model(m, o.out, ctx);
        ctx.out << "augmented probe (" << m.weights.size() << " weights) dev AUC " << p.dev_auc << '\n';
    } else if (o.mode == "lasso") {
        if (!(o.target_sparsity > 0.0 && o.target_sparsity < 1.0)) {
            throw UsageError("lasso mode needs --target-sparsity in (0, 1)");
        }
        const auto split = all_layers_split();
        const auto norm = featurestore::zscore_fit(split.train);
        const auto res = probes::sparsity_target_fit(featurestore::zscore_apply(split.train, norm), split.y_train,
                                                     o.target_sparsity, pc.solver);
        const auto dev_scores = solvers::decision_function(res.lasso, featurestore::zscore_apply(split.dev, norm));
        const double dev_auc = metrics::auc_value(
            std::span<const double>(dev_scores.data(), static_cast<std::size_t>(dev_scores.size())), [&] {
                std::vector<int> y;
                for (Eigen::Index i = 0; i < split.y_dev.size(); ++i) y.push_back(static_cast<int>(split.y_dev(i)));
                return y;
            }());
        const auto& t = res.target;
        report["target"] = {{"p", t.p},
                            {"D", t.total},
                            {"k", t.k},
                            {"k_prime", t.k_prime},
                            {"tolerance_satisfied", t.tolerance_satisfied},
                            {"lambda", t.lambda},
                            {"search_steps", t.search_steps}};
        report["neurons"] = res.neurons.indices;
        report["layer_histogram"] = res.neurons.layer_histogram(dump.n_layers, dump.hidden_dim);
        report["dev_auc"] = dev_auc;
        probes::ProbeModel m;
        m.kind = probes::ProbeKind::Lasso;
        m.weights = res.lasso.w;
        m.bias = res.lasso.b;
        m.alpha_or_lambda = t.lambda;
        m.all_layers = true;
        m.norm = norm;
        m.trained_on = trained_on;
        save_model(m, o.out, ctx);
        ctx.out << "lasso k = " << t.k << ", k' = " << t.k_prime << ", lambda " << t.lambda << '\n';
    } else if (o.mode == "refit") {
        if (o.neurons.empty()) throw UsageError("refit mode needs --neurons");
        probes::NeuronSet set{read_neurons(o.neurons, ctx)};
        const auto p = probes::refit_selected(all_layers_split(), set, pc);
        report["neurons"] = set.indices;
        report["probe"] = probe_json(p);
        auto m = l2_model(p, trained_on);
        m.all_layers = true;
        m.neuron_indices = set.indices;
        save_model(m, o.out, ctx);
        ctx.out << "refit on " << set.indices.size() << " neurons dev AUC " << p.dev_auc << '\n';
    } else if (o.mode == "random-baseline") {
        std::size_t size = o.subset_size;
        if (size == 0 && !o.neurons.empty()) size = read_neurons(o.neurons, ctx).size();
        if (size == 0) throw UsageError("random-baseline needs --subset-size or --neurons");
        const auto res = probes::random_neuron_baseline(all_layers_split(), size, o.seeds, o.seed, pc);
        auto runs = json::array();
        for (const auto& r : res.runs) {
            runs.push_back({{"seed_index", r.seed_index}, {"indices", r.indices}, {"alpha", r.alpha},
                            {"dev_auc", r.dev_auc}, {"test_auc", opt_json(r.test_auc)}});
        }
        report["subset_size"] = size;
        report["seeds"] = o.seeds;
        report["base_seed"] = o.seed;
        report["runs"] = runs;
        report["mean_dev_auc"] = res.mean_dev_auc;
        report["mean_test_auc"] = opt_json(res.mean_test_auc);
        write_json(o.out, report, ctx);
        ctx.out << "random baseline (" << o.seeds << " seeds, " << size << " neurons) mean dev AUC "
                << res.mean_dev_auc << '\n';
        return;
    } else {
        throw UsageError("unknown --mode '" + o.mode + "'");
    }
    write_json(report_path, report, ctx);
}

// ---------------------------------------------------------------------------

namespace {

json interval_json(const std::optional<metrics::Interval>& ci) {
    return ci ? json{{"low", ci->low}, {"high", ci->high}} : json(nullptr);
}

json eval_report_json(const metrics::EvalReport& r) {
    json j = {{"metric", r.metric}, {"value", r.value}, {"ci", interval_json(r.ci)},
              {"n_pos", r.n_pos},   {"n_neg", r.n_neg}};
    if (!r.groups.empty()) {
        auto groups = json::array();
        for (const auto& g : r.groups) {
            groups.push_back({{"group", g.group}, {"value", opt_json(g.value)}, {"n_pos", g.n_pos}, {"n_neg", g.n_neg}});
        }
        j["groups"] = groups;
    }
    return j;
}

json scores_json(const metrics::Scored& scored) {
    auto arr = json::array();
    for (const auto& s : scored) {
        arr.push_back({{"id", s.id},
                       {"score", s.score},
                       {"label", s.label},
                       {"pair_id", s.pair_id ? json(*s.pair_id) : json(nullptr)},
                       {"group", s.group ? json(*s.group) : json(nullptr)}});
    }
    return arr;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << v;
    return os.str();
}

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::vector<metrics::Metric> parse_metrics(const std::string& list) {
    std::vector<metrics::Metric> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(metrics::metric_from_string(item));
    }
    if (out.empty()) throw UsageError("--metrics is empty");
    return out;
}

struct MetaScore {
    double yes = 0.0;
    double no = 0.0;
};

std::unordered_map<std::string, MetaScore> read_metalinguistic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::unordered_map<std::string, MetaScore> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto id = j.at("id").get<std::string>();
            MetaScore m{j.at("logprob_yes").get<double>(), j.at("logprob_no").get<double>()};
            if (!std::isfinite(m.yes) || !std::isfinite(m.no)) throw DataError("non-finite logprob");
            if (!out.emplace(id, m).second) throw DataError("duplicate id '" + id + "'");
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

metrics::Scored read_scored(const std::string& path, Context& ctx) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read score file " + path);
    metrics::Scored out;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& s : j.at("scores")) {
            metrics::ScoredSentence row;
            row.id = s.at("id").get<std::string>();
            row.score = s.at("score").get<double>();
            row.label = s.at("label").get<int>();
            if (!s.at("pair_id").is_null()) row.pair_id = s.at("pair_id").get<std::string>();
            if (!s.at("group").is_null()) row.group = s.at("group").get<std::string>();
            out.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed score file " + path + ": " + e.what());
    }
    ctx.add_input(path);
    return out;
}

/// Scores of `b` in the order of `a`. Throws DataError listing up to 10 ids
/// present on one side only.
std::vector<double> aligned_scores(const metrics::Scored& a, const metrics::Scored& b) {
    std::unordered_map<std::string, double> index;
    for (const auto& s : b) index.emplace(s.id, s.score);
    std::vector<double> out;
    std::vector<std::string> missing;
    for (const auto& s : a) {
        auto it = index.find(s.id);
        if (it == index.end()) missing.push_back(s.id);
        else out.push_back(it->second);
    }
    if (missing.empty() && a.size() != b.size()) {
        std::unordered_set<std::string> ids;
        for (const auto& s : a) ids.insert(s.id);
        for (const auto& s : b) {
            if (!ids.contains(s.id)) missing.push_back(s.id);
        }
    }
    if (!missing.empty()) {
        std::string msg = "score files disagree on " + std::to_string(missing.size()) + " ids:";
        for (std::size_t i = 0; i < std::min<std::size_t>(10, missing.size()); ++i) msg += " " + missing[i];
        throw DataError(msg);
    }
    return out;
}

}  // namespace

void cmd_eval(const EvalOptions& o, Context& ctx) {
    require_out(o.out);
    const int sources = int(!o.probe.empty()) + int(o.baseline_logprob) + int(!o.metalinguistic.empty());
    if (sources != 1) throw UsageError("give exactly one of --probe, --baseline-logprob, --metalinguistic");
    if (o.bootstrap > 0 && !(o.level > 0.0 && o.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
    const auto requested = o.metalinguistic.empty() ? parse_metrics(o.metrics) : std::vector<metrics::Metric>{};

    const auto data = load_dataset(o.data, ctx);
    const auto rows = rows_in_split(data, o.split);

    metrics::Scored scored;
    scored.reserve(rows.size());
    for (const auto* s : rows) scored.push_back({s->id, 0.0, s->label, s->pair_id, s->group});

    json doc;
    doc["split"] = o.split;
    auto reports = json::array();
    std::string text;

    if (!o.metalinguistic.empty()) {
        const auto meta = read_metalinguistic(o.metalinguistic);
        ctx.add_input(o.metalinguistic);
        std::vector<int> predictions, labels;
        for (auto& s : scored) {
            auto it = meta.find(s.id);
            if (it == meta.end()) throw DataError("no metalinguistic scores for '" + s.id + "'");
            s.score = it->second.yes - it->second.no;
            predictions.push_back(metrics::metalinguistic_prediction(it->second.yes, it->second.no));
            labels.push_back(s.label);
        }
        const double acc = metrics::nonpairwise_accuracy(predictions, labels);
        doc["source"] = "metalinguistic";
        const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
        reports.push_back({{"metric", "nonpairwise_accuracy"}, {"value", acc}, {"ci", nullptr},
                           {"n_pos", n_pos}, {"n_neg", labels.size() - n_pos}});
        text += "nonpairwise_accuracy " + fmt(acc) + "\n";
    } else {
        const auto dump = load_dump(o.features, ctx);
        std::vector<std::string> ids;
        for (const auto& s : scored) ids.push_back(s.id);
        if (o.baseline_logprob) {
            doc["source"] = "logprob";
            std::unordered_map<std::string_view, std::size_t> index;
            for (std::size_t r = 0; r < dump.records.size(); ++r) index.emplace(dump.records[r].id, r);
            for (auto& s : scored) {
                auto it = index.find(s.id);
                if (it == index.end()) throw DataError("id '" + s.id + "' not present in dump");
                s.score = featurestore::length_normalized_logprob(dump.records[it->second].logprobs);
            }
        } else {
            doc["source"] = "probe";
            const auto model = probes::load_probe_model(o.probe);
            ctx.add_input(o.probe);
            const auto feats = featurestore::align_rows(probes::model_features(model, dump), ids);
            const Eigen::VectorXd v = probes::model_scores(model, feats.values);
            for (std::size_t i = 0; i < scored.size(); ++i) scored[i].score = v(static_cast<Eigen::Index>(i));
        }
        std::optional<metrics::BootstrapConfig> boot;
        if (o.bootstrap > 0) boot = metrics::BootstrapConfig{o.bootstrap, o.seed, o.level};
        std::vector<metrics::EvalReport> by_metric;
        for (auto metric : requested) {
            const auto r = metrics::evaluate(scored, metric, boot, o.by_group);
            by_metric.push_back(r);
            reports.push_back(eval_report_json(r));
            text += r.metric + " " + fmt(r.value);
            if (r.ci) text += " [" + fmt(r.ci->low) + ", " + fmt(r.ci->high) + "]";
            text += " n+=" + std::to_string(r.n_pos) + " n-=" + std::to_string(r.n_neg) + "\n";
            for (const auto& g : r.groups) {
                text += "  " + g.group + " " + (g.value ? fmt(*g.value) : std::string("n/a")) + "\n";
            }
        }
        if (o.by_group) {
            // One row per group, one column per requested metric.
            std::string csv = "group";
            for (const auto& r : by_metric) csv += "," + r.metric;
            csv += ",n_pos,n_neg\n";
            const std::size_t n_groups = by_metric.empty() ? 0 : by_metric.front().groups.size();
            for (std::size_t g = 0; g < n_groups; ++g) {
                const auto& first = by_metric.front().groups[g];
                csv += csv_field(first.group);
                for (const auto& r : by_metric) csv += "," + (r.groups[g].value ? fmt(*r.groups[g].value) : std::string());
                csv += "," + std::to_string(first.n_pos) + "," + std::to_string(first.n_neg) + "\n";
            }
            write_text(o.out + ".groups.csv", csv);
            ctx.add_output(o.out + ".groups.csv");
        }
    }
    doc["bootstrap"] = o.bootstrap > 0 ? json{{"resamples", o.bootstrap}, {"seed", o.seed}, {"level", o.level}}
                                       : json(nullptr);
    doc["reports"] = reports;
    doc["scores"] = scores_json(scored);
    write_json(o.out, doc, ctx);
    write_text(o.out + ".txt", text);
    ctx.add_output(o.out + ".txt");
    ctx.out << text;
}

// ---------------------------------------------------------------------------

void cmd_analyze(const AnalyzeOptions& o, Context& ctx) {
    require_out(o.out);
    const bool correlation = o.spearman || o.pearson;
    if (!correlation && o.delta.empty() && o.variance.empty()) {
        throw UsageError("nothing to do: give --spearman, --pearson, --delta or --variance");
    }
    json doc;
    std::string text;

    if (correlation) {
        if (o.scores.size() != 2) throw UsageError("correlations need exactly two --scores files");
        const auto a = read_scored(o.scores[0], ctx);
        const auto b = read_scored(o.scores[1], ctx);
        std::vector<double> x;
        for (const auto& s : a) x.push_back(s.score);
        const auto y = aligned_scores(a, b);
        if (o.log_scores) {
            for (auto& v : x) {
                if (!(v > 0.0)) throw DataError("--log-scores needs positive scores in " + o.scores[0]);
                v = std::log(v);
            }
        }
        json c = {{"n", x.size()}, {"log_scores", o.log_scores}};
        if (o.spearman) {
            c["spearman"] = metrics::spearman(x, y);
            text += "spearman " + fmt(c["spearman"].get<double>()) + "\n";
        }
        if (o.pearson) {
            c["pearson"] = metrics::pearson(x, y);
            text += "pearson " + fmt(c["pearson"].get<double>()) + "\n";
        }
        doc["correlation"] = c;
    } else if (!o.scores.empty()) {
        throw UsageError("--scores given without --spearman or --pearson");
    }

    if (!o.delta.empty()) {
        if (o.delta.size() != 2) throw UsageError("--delta takes a baseline and an augmented score file");
        if (!(o.level > 0.0 && o.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
        if (o.bootstrap == 0) throw UsageError("--delta needs --bootstrap > 0");
        const auto base = read_scored(o.delta[0], ctx);
        const auto aug = read_scored(o.delta[1], ctx);
        auto arr = json::array();
        for (auto metric : parse_metrics(o.metrics)) {
            const auto d = metrics::paired_delta(base, aug, metric, {o.bootstrap, o.seed, o.level});
            arr.push_back({{"metric", d.metric},
                           {"baseline", d.baseline},
                           {"augmented", d.augmented},
                           {"delta", d.delta},
                           {"ci", {{"low", d.ci.low}, {"high", d.ci.high}}}});
            text += "delta " + d.metric + " " + fmt(d.delta) + " [" + fmt(d.ci.low) + ", " + fmt(d.ci.high) + "]\n";
        }
        doc["delta"] = arr;
    }

    if (!o.variance.empty()) {
        if (o.variance != "per-token" && o.variance != "last-token") {
            throw UsageError("--variance must be per-token or last-token");
        }
        const auto data = load_dataset(o.data, ctx);
        const auto dump = load_dump(o.features, ctx);
        std::unordered_map<std::string_view, std::size_t> index;
        for (std::size_t r = 0; r < dump.records.size(); ++r) index.emplace(dump.records[r].id, r);
        std::vector<double> values;
        std::size_t sentences = 0;
        for (const auto* s : rows_in_split(data, o.split)) {
            if (s->label != 1) continue;
            auto it = index.find(s->id);
            if (it == index.end()) throw DataError("id '" + s->id + "' not present in dump");
            const auto& lp = dump.records[it->second].logprobs;
            if (lp.empty()) throw DataError("no token logprobs for '" + s->id + "'");
            const auto prefix = featurestore::prefix_normalized_logprobs(std::span<const float>(lp));
            if (o.variance == "per-token") values.insert(values.end(), prefix.begin(), prefix.end());
            else values.push_back(prefix.back());
            ++sentences;
        }
        const double var = metrics::variance_summary(values);
        doc["variance"] = {{"population", o.variance}, {"split", o.split}, {"sentences", sentences},
                           {"values", values.size()}, {"variance", var}};
        text += "variance (" + o.variance + ") " + fmt(var) + "\n";
    }

    write_json(o.out, doc, ctx);
    ctx.out << text;
}

// ---------------------------------------------------------------------------

void cmd_ridge(const RidgeOptions& o, Context& ctx) {
    require_out(o.out);
    if (o.per_token == o.last_token) throw UsageError("give exactly one of --per-token, --last-token");
    if (o.layer < 0) throw UsageError("--layer is required");
    const auto grid = o.lambda_grid.empty() ? probes::default_alpha_grid() : o.lambda_grid;
    for (double l : grid) {
        if (!(l > 0.0) || !std::isfinite(l)) throw UsageError("lambda grid values must be positive");
    }
    const auto dump = load_dump(o.features, ctx);
    std::vector<std::string> ids;
    if (!o.data.empty()) {
        const auto data = load_dataset(o.data, ctx);
        for (const auto* s : rows_in_split(data, o.split)) ids.push_back(s->id);
    }
    const auto mode = o.per_token ? probes::LogprobMode::PerToken : probes::LogprobMode::LastToken;
    const auto r = probes::fit_logprob_probe(dump, mode, static_cast<std::size_t>(o.layer), grid, o.seed, ids);
    if (r.degenerate_targets) ctx.warn("dev targets are constant; R^2 reported as 0");

    auto mse = json::array();
    for (const auto& [lambda, value] : r.dev_mse) mse.push_back({{"lambda", lambda}, {"dev_mse", value}});
    json doc = {{"mode", o.per_token ? "per_token" : "last_token"},
                {"layer", o.layer},
                {"lambda", r.lambda},
                {"r2", r.r2},
                {"degenerate_targets", r.degenerate_targets},
                {"train_sentences", r.train_sentences},
                {"dev_sentences", r.dev_sentences},
                {"train_rows", r.train_rows},
                {"dev_rows", r.dev_rows},
                {"dev_mse", mse},
                {"fit", {{"w", vec_json(r.fit.w)}, {"b", r.fit.b}, {"relative_residual", r.fit.relative_residual}}},
                {"norm_stats", {{"mean", vec_json(r.norm.mean)}, {"std", vec_json(r.norm.std)}}}};
    write_json(o.out, doc, ctx);
    ctx.out << "ridge (" << (o.per_token ? "per-token" : "last-token") << ", layer " << o.layer << ") lambda "
            << r.lambda << " R^2 " << fmt(r.r2) << '\n';
}

// ---------------------------------------------------------------------------

void cmd_synth_corpus(const SynthCorpusOptions& o, Context& ctx) {
    require_out(o.out);
    if (o.n == 0) throw UsageError("--n must be positive");
    std::string text;
    for (const auto& line : synthetic::random_corpus(o.n, o.seed)) text += line + "\n";
    write_text(o.out, text);
    ctx.add_output(o.out);
    ctx.out << "wrote " << o.n << " sentences\n";
}

void cmd_synth_dump(const SynthDumpOptions& o, Context& ctx) {
    require_out(o.out);
    synthetic::PlantedDumpConfig cfg;
    cfg.n_layers = o.layers;
    cfg.hidden_dim = o.dim;
    cfg.signal_layer = o.signal_layer;
    cfg.logprob_layer = o.logprob_layer;
    cfg.separation = o.separation;
    cfg.seed = o.seed;
    if (o.mode == "last_token") cfg.mode = featurestore::DumpMode::LastToken;
    else if (o.mode == "per_token") cfg.mode = featurestore::DumpMode::PerToken;
    else throw UsageError("--mode must be last_token or per_token");
    const auto data = load_dataset(o.data, ctx);
    const auto planted = synthetic::planted_dump(data, cfg);
    featurestore::write_dump(planted.dump, o.out);
    ctx.add_output(o.out);
    ctx.out << "wrote " << planted.dump.records.size() << " records (" << o.layers << " layers x " << o.dim
            << ", signal in layer " << o.signal_layer << ")\n";
}

}  // namespace gramprobe::cli
