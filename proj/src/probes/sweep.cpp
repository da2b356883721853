#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "gramprobe/metrics.hpp"
#include "gramprobe/probes.hpp"

namespace gramprobe::probes {
namespace {

void fill_split(const featurestore::FeatureMatrix& f, const std::vector<const dataset::LabeledSentence*>& rows,
                Eigen::MatrixXd& x, Eigen::VectorXd& y, std::vector<std::string>& ids) {
    ids.clear();
    for (const auto* s : rows) ids.push_back(s->id);
    x = featurestore::align_rows(f, ids).values;
    y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = rows[i]->label;
}

void require_both_classes(const Eigen::VectorXd& y, const char* split) {
    const double pos = y.sum();
    if (y.size() == 0) throw DataError(std::string("dataset has no ") + split + " split");
    if (pos == 0.0 || pos == static_cast<double>(y.size())) {
        throw DataError(std::string(split) + " split contains a single class");
    }
}

double auc_of(const Eigen::VectorXd& scores, const Eigen::VectorXd& y) {
    std::vector<int> labels(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(y(i));
    return metrics::auc_value(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), labels);
}

bool has_both(const Eigen::VectorXd& y) {
    const double pos = y.sum();
    return pos > 0.0 && pos < static_cast<double>(y.size());
}

}  // namespace

std::vector<double> default_alpha_grid() {
    std::vector<double> g;
    for (int e = -2; e <= 5; ++e) g.push_back(std::ldexp(1.0, e));
    return g;
}

SplitData make_split_data(const featurestore::FeatureMatrix& features, const dataset::Dataset& data) {
    std::vector<const dataset::LabeledSentence*> train, dev, test;
    for (const auto& s : data) {
        switch (s.split) {
            case dataset::Split::Train: train.push_back(&s); break;
            case dataset::Split::Dev: dev.push_back(&s); break;
            case dataset::Split::Test: test.push_back(&s); break;
        }
    }
    SplitData d;
    fill_split(features, train, d.train, d.y_train, d.train_ids);
    fill_split(features, dev, d.dev, d.y_dev, d.dev_ids);
    fill_split(features, test, d.test, d.y_test, d.test_ids);
    require_both_classes(d.y_train, "train");
    require_both_classes(d.y_dev, "dev");
    return d;
}

SplitData select_columns(const SplitData& d, std::span<const std::size_t> columns) {
    auto pick = [&](const Eigen::MatrixXd& m) {
        Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(columns.size()));
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c] >= static_cast<std::size_t>(m.cols())) throw DataError("neuron index out of range");
            out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(columns[c]));
        }
        return out;
    };
    SplitData out = d;
    out.train = pick(d.train);
    out.dev = pick(d.dev);
    out.test = pick(d.test);
    return out;
}

TrainedProbe sweep_alphas(const SplitData& data, const ProbeConfig& cfg) {
    if (cfg.alpha_grid.empty()) throw UsageError("alpha grid is empty");
    TrainedProbe best;
    best.norm = featurestore::zscore_fit(data.train);
    const Eigen::MatrixXd train = featurestore::zscore_apply(data.train, best.norm);
    const Eigen::MatrixXd dev = featurestore::zscore_apply(data.dev, best.norm);

    bool first = true;
    for (double alpha : cfg.alpha_grid) {
        solvers::LogisticFit fit = solvers::fit_logistic_l2(train, data.y_train, alpha, cfg.solver);
        // Decision values rank identically to probabilities without saturating.
        const double dev_auc = auc_of(solvers::decision_function(fit, dev), data.y_dev);
        best.cells.push_back({alpha, dev_auc, fit.converged, fit.iterations});
        if (first || dev_auc > best.dev_auc) {
            best.fit = std::move(fit);
            best.alpha = alpha;
            best.dev_auc = dev_auc;
            first = false;
        }
    }
    if (data.test.rows() > 0 && has_both(data.y_test)) {
        const Eigen::MatrixXd test = featurestore::zscore_apply(data.test, best.norm);
        best.test_auc = auc_of(solvers::decision_function(best.fit, test), data.y_test);
    }
    return best;
}

LayerSweepResult layer_sweep(const featurestore::FeatureDump& dump, const dataset::Dataset& data,
                             const ProbeConfig& cfg) {
    if (dump.mode != featurestore::DumpMode::LastToken) throw DataError("layer sweep requires a last_token dump");
    if (dump.n_layers == 0) throw DataError("dump has no layers");
    LayerSweepResult out;
    for (std::uint32_t layer = 0; layer < dump.n_layers; ++layer) {
        const SplitData split = make_split_data(featurestore::select_layer(dump, layer), data);
        TrainedProbe probe = sweep_alphas(split, cfg);
        out.layers.push_back({static_cast<int>(layer), probe.alpha, probe.dev_auc, probe.cells});
        // Strict improvement keeps the lower layer on ties.
        if (layer == 0 || probe.dev_auc > out.selected.dev_auc) {
            out.selected_layer = static_cast<int>(layer);
            out.selected_alpha = probe.alpha;
            out.selected = std::move(probe);
        }
    }
    return out;
}

TrainedProbe refit_selected(const SplitData& all_layers, const NeuronSet& neurons, const ProbeConfig& cfg) {
    if (neurons.indices.empty()) throw UsageError("neuron set is empty");
    return sweep_alphas(select_columns(all_layers, neurons.indices), cfg);
}

TrainedProbe refit_selected(const featurestore::FeatureDump& dump, const dataset::Dataset& data,
                            const NeuronSet& neurons, const ProbeConfig& cfg) {
    if (neurons.indices.empty()) throw UsageError("neuron set is empty");
    return refit_selected(make_split_data(featurestore::concat_layers(dump), data), neurons, cfg);
}

std::vector<std::size_t> random_neuron_subset(std::size_t total, std::size_t size, std::uint64_t base_seed,
                                              std::uint64_t run) {
    if (size > total) {
        throw UsageError("random subset size " + std::to_string(size) + " exceeds dimensionality " +
                         std::to_string(total));
    }
    Rng rng = Rng::stream(base_seed, StreamId::kNeuronSubset, run);
    auto idx = rng.sample_without_replacement(total, size);
    std::sort(idx.begin(), idx.end());
    return idx;
}

BaselineResult random_neuron_baseline(const SplitData& all_layers, std::size_t size, std::size_t n_seeds,
                                      std::uint64_t base_seed, const ProbeConfig& cfg) {
    if (n_seeds == 0) throw UsageError("random baseline needs at least one seed");
    if (size == 0) throw UsageError("random subset size must be positive");
    const auto total = static_cast<std::size_t>(all_layers.train.cols());
    BaselineResult out;
    double dev_sum = 0.0, test_sum = 0.0;
    bool all_test = true;
    for (std::uint64_t s = 0; s < n_seeds; ++s) {
        BaselineRun run;
        run.seed_index = s;
        run.indices = random_neuron_subset(total, size, base_seed, s);
        const TrainedProbe probe = refit_selected(all_layers, NeuronSet{run.indices}, cfg);
        run.alpha = probe.alpha;
        run.dev_auc = probe.dev_auc;
        run.test_auc = probe.test_auc;
        dev_sum += run.dev_auc;
        if (run.test_auc) test_sum += *run.test_auc;
        else all_test = false;
        out.runs.push_back(std::move(run));
    }
    out.mean_dev_auc = dev_sum / static_cast<double>(n_seeds);
    if (all_test) out.mean_test_auc = test_sum / static_cast<double>(n_seeds);
    return out;
}

BaselineResult random_neuron_baseline(const featurestore::FeatureDump& dump, const dataset::Dataset& data,
                                      std::size_t size, std::size_t n_seeds, std::uint64_t base_seed,
                                      const ProbeConfig& cfg) {
    return random_neuron_baseline(make_split_data(featurestore::concat_layers(dump), data), size, n_seeds,
                                  base_seed, cfg);
}

featurestore::FeatureMatrix augment_with_logprob(const featurestore::FeatureMatrix& features,
                                                 const featurestore::FeatureDump& dump) {
    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < dump.records.size(); ++i) index.emplace(dump.records[i].id, i);

    featurestore::FeatureMatrix out;
    out.values.resize(features.rows(), features.cols() + 1);
    out.values.leftCols(features.cols()) = features.values;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const auto& id = features.row_ids[static_cast<std::size_t>(i)];
        auto it = index.find(id);
        if (it == index.end()) throw DataError("no token logprobs for '" + id + "'");
        const auto& lp = dump.records[it->second].logprobs;
        if (lp.empty()) throw DataError("no token logprobs for '" + id + "'");
        out.values(i, features.cols()) = featurestore::length_normalized_logprob(lp);
    }
    out.row_ids = features.row_ids;
    out.layers = features.layers;
    out.all_layers = features.all_layers;
    return out;
}

}  // namespace gramprobe::probes
