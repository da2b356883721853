#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gramprobe::metrics {

struct ScoredSentence {
    std::string id;
    double score = 0.0;
    int label = 0;
    std::optional<std::string> pair_id;
    std::optional<std::string> group;
};

using Scored = std::vector<ScoredSentence>;

enum class Metric { Acc, Auc };

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

struct GroupRow {
    std::string group;
    std::optional<double> value;  ///< empty when the group fails the metric's preconditions
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

struct EvalReport {
    std::string metric;
    double value = 0.0;
    std::optional<Interval> ci;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::vector<GroupRow> groups;
};

// ---------------------------------------------------------------------------
// Ranking metrics
// ---------------------------------------------------------------------------

/// (good score, bad score) per complete pair, in order of first appearance.
struct PairScore {
    std::string pair_id;
    double good = 0.0;
    double bad = 0.0;
};

/// Groups sentences into minimal pairs. Throws DataError listing offending
/// pair_ids when a sentence has no pair_id or a pair is incomplete.
std::vector<PairScore> collect_pairs(const Scored& scored);

/// Fraction of pairs whose acceptable member scores strictly higher.
double acc_value(std::span<const PairScore> pairs);

/// Tie-corrected AUC via mid-ranks. Exactly equal to the pairwise double sum:
/// the rank sum is accumulated in integers (twice the mid-rank) and divided once.
/// Throws DataError unless both classes are present.
double auc_value(std::span<const double> scores, std::span<const int> labels);

EvalReport acc_minimal_pairs(const Scored& scored);
EvalReport auc(const Scored& scored);

/// Mid-ranks (1-based, ties averaged).
std::vector<double> midranks(std::span<const double> x);

/// Throws DataError when |x| != |y|, |x| < 2, or either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

/// Scores >= threshold predict the acceptable class.
inline int threshold_prediction(double score, double threshold = 0.5) { return score >= threshold ? 1 : 0; }

/// Fraction of exact matches. Throws DataError on length mismatch or empty input.
double nonpairwise_accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Metalinguistic Yes/No rule: Yes iff logprob(Yes) > logprob(No); ties answer No.
inline int metalinguistic_prediction(double logprob_yes, double logprob_no) {
    return logprob_yes > logprob_no ? 1 : 0;
}

/// Population variance. Throws DataError when fewer than two values.
double variance_summary(std::span<const double> values);

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

struct BootstrapConfig {
    std::size_t n_resamples = 1000;
    std::uint64_t seed = 0;
    double level = 0.95;
};

/// Percentile of sorted values with linear interpolation between order statistics.
double percentile(std::span<const double> sorted, double q);

/// Percentile bootstrap interval. Units are pairs for ACC and sentences for
/// AUC; resample r draws from Rng::stream(seed, kBootstrap, attempt). Draws
/// that leave one class empty are redrawn, at most 10 * n_resamples attempts
/// in total (NumericalError beyond that).
Interval bootstrap_ci(const Scored& scored, Metric metric, const BootstrapConfig& cfg = {});

struct DeltaReport {
    std::string metric;
    double baseline = 0.0;
    double augmented = 0.0;
    double delta = 0.0;  ///< augmented - baseline
    Interval ci;
};

/// Difference of one metric between two scorings of the same sentences, with a
/// paired bootstrap interval (both scorings see the same resampled units).
/// Throws DataError when ids or labels differ between the two.
DeltaReport paired_delta(const Scored& baseline, const Scored& augmented, Metric metric,
                         const BootstrapConfig& cfg = {});

/// Full report: value, optional bootstrap CI, optional per-group breakdown.
EvalReport evaluate(const Scored& scored, Metric metric, std::optional<BootstrapConfig> bootstrap, bool by_group);

}  // namespace gramprobe::metrics
