#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "gramprobe/error.hpp"
#include "gramprobe/metrics.hpp"
#include "gramprobe/rng.hpp"

namespace gramprobe::metrics {
namespace {

// One resampling unit: a pair (ACC) or a sentence (AUC).
struct Units {
    Metric metric;
    std::vector<PairScore> pairs;
    std::vector<double> scores;
    std::vector<int> labels;

    std::size_t size() const { return metric == Metric::Acc ? pairs.size() : scores.size(); }
};

Units make_units(const Scored& scored, Metric metric) {
    Units u{metric, {}, {}, {}};
    if (metric == Metric::Acc) {
        u.pairs = collect_pairs(scored);
    } else {
        u.scores.reserve(scored.size());
        u.labels.reserve(scored.size());
        for (const auto& s : scored) {
            u.scores.push_back(s.score);
            u.labels.push_back(s.label);
        }
    }
    return u;
}

double metric_value(const Units& u) {
    return u.metric == Metric::Acc ? acc_value(u.pairs) : auc_value(u.scores, u.labels);
}

// Metric on the resample given by `idx`; nullopt if the resample has one class.
std::optional<double> resampled_value(const Units& u, const std::vector<std::size_t>& idx,
                                      std::vector<PairScore>& pair_buf, std::vector<double>& score_buf,
                                      std::vector<int>& label_buf) {
    if (u.metric == Metric::Acc) {
        pair_buf.clear();
        for (auto i : idx) pair_buf.push_back(u.pairs[i]);
        return acc_value(pair_buf);
    }
    score_buf.clear();
    label_buf.clear();
    bool pos = false, neg = false;
    for (auto i : idx) {
        score_buf.push_back(u.scores[i]);
        label_buf.push_back(u.labels[i]);
        (u.labels[i] == 1 ? pos : neg) = true;
    }
    if (!pos || !neg) return std::nullopt;
    return auc_value(score_buf, label_buf);
}

// Draws resample index sets until `n_resamples` are accepted by `accept`.
template <typename Accept>
void draw_resamples(std::size_t n_units, const BootstrapConfig& cfg, Accept&& accept) {
    if (cfg.n_resamples == 0) throw UsageError("bootstrap needs at least one resample");
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw UsageError("confidence level must lie in (0, 1)");
    const std::size_t max_attempts = 10 * cfg.n_resamples;
    std::vector<std::size_t> idx(n_units);
    std::size_t accepted = 0;
    for (std::size_t attempt = 0; accepted < cfg.n_resamples; ++attempt) {
        if (attempt >= max_attempts) {
            throw NumericalError("bootstrap: too many degenerate resamples (" + std::to_string(attempt) +
                                 " attempts for " + std::to_string(accepted) + " accepted)");
        }
        Rng rng = Rng::stream(cfg.seed, StreamId::kBootstrap, attempt);
        for (auto& i : idx) i = rng.uniform_index(n_units);
        if (accept(idx)) ++accepted;
    }
}

Interval percentile_interval(std::vector<double>& values, double level) {
    std::sort(values.begin(), values.end());
    const double tail = 0.5 * (1.0 - level);
    return {percentile(values, tail), percentile(values, 1.0 - tail)};
}

}  // namespace

double percentile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw DataError("percentile of empty sample");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    const double v = sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    return std::clamp(v, sorted[lo], sorted[lo + 1]);
}

Interval bootstrap_ci(const Scored& scored, Metric metric, const BootstrapConfig& cfg) {
    const Units units = make_units(scored, metric);
    (void)metric_value(units);  // full-sample preconditions

    std::vector<double> values;
    values.reserve(cfg.n_resamples);
    std::vector<PairScore> pair_buf;
    std::vector<double> score_buf;
    std::vector<int> label_buf;
    draw_resamples(units.size(), cfg, [&](const std::vector<std::size_t>& idx) {
        auto v = resampled_value(units, idx, pair_buf, score_buf, label_buf);
        if (!v) return false;
        values.push_back(*v);
        return true;
    });
    return percentile_interval(values, cfg.level);
}

DeltaReport paired_delta(const Scored& baseline, const Scored& augmented, Metric metric,
                         const BootstrapConfig& cfg) {
    if (baseline.size() != augmented.size()) throw DataError("delta: score sets differ in size");
    // Align the augmented scoring to the baseline order by id.
    std::unordered_map<std::string_view, std::size_t> pos;
    for (std::size_t i = 0; i < augmented.size(); ++i) pos.emplace(augmented[i].id, i);
    Scored aug_aligned;
    aug_aligned.reserve(baseline.size());
    for (const auto& s : baseline) {
        auto it = pos.find(s.id);
        if (it == pos.end()) throw DataError("delta: id '" + s.id + "' missing from augmented scores");
        const auto& a = augmented[it->second];
        if (a.label != s.label || a.pair_id != s.pair_id) throw DataError("delta: label/pair mismatch for '" + s.id + "'");
        aug_aligned.push_back(a);
    }

    const Units ub = make_units(baseline, metric);
    const Units ua = make_units(aug_aligned, metric);
    DeltaReport out;
    out.metric = std::string(to_string(metric));
    out.baseline = metric_value(ub);
    out.augmented = metric_value(ua);
    out.delta = out.augmented - out.baseline;

    std::vector<double> deltas;
    deltas.reserve(cfg.n_resamples);
    std::vector<PairScore> pb;
    std::vector<double> sb;
    std::vector<int> lb;
    draw_resamples(ub.size(), cfg, [&](const std::vector<std::size_t>& idx) {
        auto vb = resampled_value(ub, idx, pb, sb, lb);
        if (!vb) return false;
        auto va = resampled_value(ua, idx, pb, sb, lb);
        deltas.push_back(*va - *vb);
        return true;
    });
    out.ci = percentile_interval(deltas, cfg.level);
    return out;
}

EvalReport evaluate(const Scored& scored, Metric metric, std::optional<BootstrapConfig> bootstrap, bool by_group) {
    EvalReport r;
    r.metric = std::string(to_string(metric));
    const Units units = make_units(scored, metric);
    r.value = metric_value(units);
    for (const auto& s : scored) (s.label == 1 ? r.n_pos : r.n_neg) += 1;
    if (bootstrap) r.ci = bootstrap_ci(scored, metric, *bootstrap);

    if (by_group) {
        std::map<std::string, Scored> groups;
        for (const auto& s : scored) {
            if (s.group) groups[*s.group].push_back(s);
        }
        for (const auto& [name, members] : groups) {
            GroupRow row;
            row.group = name;
            for (const auto& s : members) (s.label == 1 ? row.n_pos : row.n_neg) += 1;
            try {
                row.value = metric_value(make_units(members, metric));
            } catch (const DataError&) {
                row.value = std::nullopt;
            }
            r.groups.push_back(std::move(row));
        }
    }
    return r;
}

}  // namespace gramprobe::metrics
