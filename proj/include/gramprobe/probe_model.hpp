#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gramprobe/featurestore.hpp"

namespace gramprobe::probes {

enum class ProbeKind { LogisticL2, Lasso, Ridge };

std::string_view to_string(ProbeKind k);
ProbeKind probe_kind_from_string(std::string_view s);

/// A trained linear probe plus everything needed to rebuild its inputs from a dump.
///
/// Feature pipeline: take the listed layers (or all layers concatenated) at
/// the last token, keep `neuron_indices` if set, append the length-normalised
/// logprob if `logprob_feature`, z-score with `norm`, then apply w and b.
struct ProbeModel {
    static constexpr int kSchemaVersion = 1;

    ProbeKind kind = ProbeKind::LogisticL2;
    Eigen::VectorXd weights;
    double bias = 0.0;
    double alpha_or_lambda = 0.0;
    std::vector<int> layers;
    bool all_layers = false;
    std::optional<std::vector<std::size_t>> neuron_indices;
    bool logprob_feature = false;
    featurestore::NormStats norm;
    std::string trained_on;  ///< dataset checksum
};

nlohmann::ordered_json to_json(const ProbeModel& m);
ProbeModel probe_model_from_json(const nlohmann::json& j);

void save_probe_model(const ProbeModel& m, const std::filesystem::path& path);
ProbeModel load_probe_model(const std::filesystem::path& path);

/// Raw (un-normalised) feature matrix the model expects, one row per dump record.
featurestore::FeatureMatrix model_features(const ProbeModel& m, const featurestore::FeatureDump& dump);

/// Probe scores for already-built raw features: sigma(w . z + b) for logistic
/// kinds, w . z + b for ridge.
Eigen::VectorXd model_scores(const ProbeModel& m, const Eigen::MatrixXd& raw_features);

}  // namespace gramprobe::probes
