#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gramprobe/dataset.hpp"
#include "gramprobe/featurestore.hpp"

/// Planted-signal generators used by tests, the acceptance suite and
/// `gramprobe synth`.
namespace gramprobe::synthetic {

/// Random sentences over a small fixed lexicon. Every sentence has at least
/// `min_words` words plus a final period, so deletion (k <= 5) and local
/// shuffle (window <= min_words) never skip.
std::vector<std::string> random_corpus(std::size_t n, std::uint64_t seed, std::size_t min_words = 6,
                                       std::size_t max_words = 12);

struct PlantedDumpConfig {
    std::uint32_t n_layers = 4;
    std::uint32_t hidden_dim = 64;
    std::uint32_t signal_layer = 2;
    /// Distance between class means along the grammar direction, in noise
    /// standard deviations. 2.9 puts the oracle AUC at Phi(2.9 / sqrt 2) ~ 0.98.
    double separation = 2.9;
    /// Fraction of `separation` leaked into the other layers.
    double leak = 0.3;
    featurestore::DumpMode mode = featurestore::DumpMode::LastToken;
    /// Layer carrying the prefix-logprob direction. Kept apart from the
    /// grammar layer: per-column z-scoring of a layer with one high-variance
    /// direction tilts a strongly regularised probe off the grammar direction.
    std::uint32_t logprob_layer = 3;  ///< clamped to the last layer
    double logprob_gain = 40.0;
    std::uint64_t seed = 0;
};

struct PlantedDump {
    featurestore::FeatureDump dump;
    Eigen::VectorXd grammar_direction;  ///< unit, hidden_dim
    Eigen::VectorXd logprob_direction;  ///< unit, orthogonal to grammar_direction
};

/// One record per dataset sentence, in dataset order. T is the sentence's
/// token count under dataset::tokenize. Hidden states are N(0, I) plus
/// +-separation/2 along the grammar direction by label (scaled by `leak`
/// outside the signal layer); at `logprob_layer`, logprob_gain * (prefix mean
/// - its expected value) is added along the logprob direction.
PlantedDump planted_dump(const dataset::Dataset& data, const PlantedDumpConfig& cfg);

/// Scores of the generating weights (projection on the grammar direction at
/// the signal layer's last token), one per record.
std::vector<double> oracle_scores(const PlantedDump& planted, std::uint32_t signal_layer);

/// Dense Gaussian design with a sparse logistic truth.
struct PlantedClassification {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd w_true;
    std::vector<std::size_t> support;
};

/// X ~ N(0, 1); `informative` coordinates of w_true are +-signal; labels are
/// Bernoulli(sigmoid(X w_true)) and both classes are guaranteed present.
PlantedClassification planted_classification(std::size_t n, std::size_t d, std::size_t informative,
                                             std::uint64_t seed, double signal = 1.0);

}  // namespace gramprobe::synthetic
