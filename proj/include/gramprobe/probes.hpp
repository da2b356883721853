#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gramprobe/dataset.hpp"
#include "gramprobe/error.hpp"
#include "gramprobe/featurestore.hpp"
#include "gramprobe/probe_model.hpp"
#include "gramprobe/solvers.hpp"

namespace gramprobe::probes {

/// {2^-2, 2^-1, ..., 2^5}.
std::vector<double> default_alpha_grid();

struct ProbeConfig {
    std::vector<double> alpha_grid = default_alpha_grid();
    solvers::SolverConfig solver{};
};

/// Feature rows split according to the dataset's split tags.
struct SplitData {
    Eigen::MatrixXd train, dev, test;
    Eigen::VectorXd y_train, y_dev, y_test;
    std::vector<std::string> train_ids, dev_ids, test_ids;
};

/// Aligns `features` to the dataset by id. Throws DataError when ids are
/// missing, when train or dev is empty, or when either is single-class.
SplitData make_split_data(const featurestore::FeatureMatrix& features, const dataset::Dataset& data);

/// Column subset of every split.
SplitData select_columns(const SplitData& d, std::span<const std::size_t> columns);

struct SweepCell {
    double alpha = 0.0;
    double dev_auc = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// One z-scored l2 probe per alpha; the dev-AUC best (earliest grid entry on ties) is kept.
struct TrainedProbe {
    solvers::LogisticFit fit;
    featurestore::NormStats norm;
    double alpha = 0.0;
    double dev_auc = 0.0;
    std::optional<double> test_auc;
    std::vector<SweepCell> cells;
};

TrainedProbe sweep_alphas(const SplitData& data, const ProbeConfig& cfg);

// ---------------------------------------------------------------------------
// Layer sweep
// ---------------------------------------------------------------------------

struct LayerRow {
    int layer = 0;
    double best_alpha = 0.0;
    double dev_auc = 0.0;
    std::vector<SweepCell> cells;
};

struct LayerSweepResult {
    std::vector<LayerRow> layers;
    int selected_layer = 0;
    double selected_alpha = 0.0;
    TrainedProbe selected;  ///< probe of the selected layer
};

/// Per-layer alpha sweep; the layer with the highest dev AUC wins, lower
/// index on ties.
LayerSweepResult layer_sweep(const featurestore::FeatureDump& dump, const dataset::Dataset& data,
                             const ProbeConfig& cfg = {});

// ---------------------------------------------------------------------------
// Sparsity targeting
// ---------------------------------------------------------------------------

struct SparsityTarget {
    double p = 0.0;
    std::size_t total = 0;  ///< D
    std::size_t k = 0;      ///< ceil(p D)
    std::size_t k_prime = 0;
    bool tolerance_satisfied = false;
    double lambda = 0.0;
    int search_steps = 0;
};

/// k = ceil(p * D), with a small guard so that products like 0.001 * 10000
/// which land a few ulps above an integer do not round up.
std::size_t target_count(double p, std::size_t total);

/// |k - k'| <= 0.05 k
bool within_tolerance(std::size_t k, std::size_t k_prime);

struct NeuronSet {
    std::vector<std::size_t> indices;  ///< sorted, unique, into the all-layers space

    /// Count of selected neurons in each layer.
    std::vector<std::size_t> layer_histogram(std::size_t n_layers, std::size_t hidden_dim) const;
};

struct SparsityResult {
    SparsityTarget target;
    NeuronSet neurons;
    solvers::LogisticFit lasso;
};

inline constexpr int kMaxSparsitySearchSteps = 50;

/// Bisection on log(lambda) over [lambda_max * 1e-6, lambda_max] on already
/// normalised training features. Throws SparsityTargetNotMet after 50 steps.
SparsityResult sparsity_target_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double p,
                                   const solvers::SolverConfig& cfg = {});

/// Same on the z-scored all-layers concatenation of the train split.
SparsityResult sparsity_target_fit(const featurestore::FeatureDump& dump, const dataset::Dataset& data, double p,
                                   const solvers::SolverConfig& cfg = {});

class SparsityTargetNotMet : public NumericalError {
public:
    SparsityTargetNotMet(std::size_t k, std::size_t closest_k_prime, double lambda);
    std::size_t k;
    std::size_t closest_k_prime;
    double closest_lambda;
};

// ---------------------------------------------------------------------------
// Refits and baselines
// ---------------------------------------------------------------------------

/// l2 probe on the given columns of the all-layers concatenation.
TrainedProbe refit_selected(const featurestore::FeatureDump& dump, const dataset::Dataset& data,
                            const NeuronSet& neurons, const ProbeConfig& cfg = {});
TrainedProbe refit_selected(const SplitData& all_layers, const NeuronSet& neurons, const ProbeConfig& cfg = {});

struct BaselineRun {
    std::uint64_t seed_index = 0;
    std::vector<std::size_t> indices;
    double alpha = 0.0;
    double dev_auc = 0.0;
    std::optional<double> test_auc;
};

struct BaselineResult {
    std::vector<BaselineRun> runs;
    double mean_dev_auc = 0.0;
    std::optional<double> mean_test_auc;
};

/// Neuron subset for run `s`: `size` distinct indices drawn from
/// Rng::stream(base_seed, kNeuronSubset, s), returned sorted.
std::vector<std::size_t> random_neuron_subset(std::size_t total, std::size_t size, std::uint64_t base_seed,
                                              std::uint64_t run);

BaselineResult random_neuron_baseline(const featurestore::FeatureDump& dump, const dataset::Dataset& data,
                                      std::size_t size, std::size_t n_seeds, std::uint64_t base_seed,
                                      const ProbeConfig& cfg = {});
BaselineResult random_neuron_baseline(const SplitData& all_layers, std::size_t size, std::size_t n_seeds,
                                      std::uint64_t base_seed, const ProbeConfig& cfg = {});

// ---------------------------------------------------------------------------
// Logprob features and probes
// ---------------------------------------------------------------------------

/// Appends the length-normalised logprob of each row's sentence as a final column.
featurestore::FeatureMatrix augment_with_logprob(const featurestore::FeatureMatrix& features,
                                                 const featurestore::FeatureDump& dump);

enum class LogprobMode { PerToken, LastToken };

struct LogprobProbeResult {
    solvers::RidgeFit fit;
    featurestore::NormStats norm;
    double lambda = 0.0;
    double r2 = 0.0;
    bool degenerate_targets = false;  ///< SS_tot was 0 and R^2 was set to 0
    std::size_t train_rows = 0;
    std::size_t dev_rows = 0;
    std::size_t train_sentences = 0;
    std::size_t dev_sentences = 0;
    std::vector<std::pair<double, double>> dev_mse;  ///< (lambda, dev MSE)
};

/// Ridge probe from hidden states at `layer` to prefix-normalised logprobs.
/// Sentences are split 80/20 by a seeded shuffle; lambda minimises dev MSE;
/// R^2 is reported on dev. `ids`, when non-empty, restricts the sentences used.
LogprobProbeResult fit_logprob_probe(const featurestore::FeatureDump& dump, LogprobMode mode, std::size_t layer,
                                     const std::vector<double>& lambda_grid, std::uint64_t seed = 0,
                                     const std::vector<std::string>& ids = {});

/// 1 - SS_res / SS_tot; 0 when SS_tot is 0.
double r_squared(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted, bool* degenerate = nullptr);

}  // namespace gramprobe::probes
