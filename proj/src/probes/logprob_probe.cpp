#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "gramprobe/probes.hpp"

namespace gramprobe::probes {

double r_squared(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted, bool* degenerate) {
    if (truth.size() != predicted.size() || truth.size() == 0) throw DataError("R^2: size mismatch or empty input");
    const double mean = truth.mean();
    const double ss_tot = (truth.array() - mean).square().sum();
    const double ss_res = (truth - predicted).squaredNorm();
    if (degenerate) *degenerate = ss_tot == 0.0;
    if (ss_tot == 0.0) return 0.0;
    return 1.0 - ss_res / ss_tot;
}

LogprobProbeResult fit_logprob_probe(const featurestore::FeatureDump& dump, LogprobMode mode, std::size_t layer,
                                     const std::vector<double>& lambda_grid, std::uint64_t seed,
                                     const std::vector<std::string>& ids) {
    using featurestore::DumpMode;
    if (mode == LogprobMode::PerToken && dump.mode != DumpMode::PerToken) {
        throw DataError("per-token logprob probe requires a per_token dump");
    }
    if (layer >= dump.n_layers) throw DataError("layer " + std::to_string(layer) + " out of range");
    if (lambda_grid.empty()) throw UsageError("lambda grid is empty");

    std::vector<std::size_t> records;
    if (ids.empty()) {
        for (std::size_t i = 0; i < dump.records.size(); ++i) records.push_back(i);
    } else {
        const std::unordered_set<std::string> wanted(ids.begin(), ids.end());
        for (std::size_t i = 0; i < dump.records.size(); ++i) {
            if (wanted.contains(dump.records[i].id)) records.push_back(i);
        }
    }
    std::erase_if(records, [&](std::size_t r) { return dump.records[r].logprobs.empty(); });
    if (records.size() < 2) throw DataError("logprob probe needs at least 2 sentences with tokens");

    // 80/20 split by sentence.
    Rng rng = Rng::stream(seed, StreamId::kRidgeSplit);
    rng.shuffle(std::span<std::size_t>(records));
    auto n_dev = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(records.size())));
    n_dev = std::clamp<std::size_t>(n_dev, 1, records.size() - 1);
    const std::vector<std::size_t> train_recs(records.begin(), records.end() - static_cast<std::ptrdiff_t>(n_dev));
    const std::vector<std::size_t> dev_recs(records.end() - static_cast<std::ptrdiff_t>(n_dev), records.end());

    const auto dim = static_cast<Eigen::Index>(dump.hidden_dim);
    auto build = [&](const std::vector<std::size_t>& recs, Eigen::MatrixXd& x, Eigen::VectorXd& t) {
        std::size_t rows = 0;
        for (auto r : recs) rows += mode == LogprobMode::PerToken ? dump.records[r].logprobs.size() : 1;
        x.resize(static_cast<Eigen::Index>(rows), dim);
        t.resize(static_cast<Eigen::Index>(rows));
        Eigen::Index row = 0;
        for (auto r : recs) {
            const auto prefix = featurestore::prefix_normalized_logprobs(dump.records[r].logprobs);
            auto put = [&](std::span<const float> h, double target) {
                for (Eigen::Index j = 0; j < dim; ++j) x(row, j) = h[static_cast<std::size_t>(j)];
                t(row) = target;
                ++row;
            };
            if (mode == LogprobMode::PerToken) {
                for (std::size_t tok = 0; tok < prefix.size(); ++tok) put(dump.token_state(r, tok, layer), prefix[tok]);
            } else {
                put(dump.last_token_state(r, layer), prefix.back());
            }
        }
    };

    Eigen::MatrixXd x_train, x_dev;
    Eigen::VectorXd t_train, t_dev;
    build(train_recs, x_train, t_train);
    build(dev_recs, x_dev, t_dev);

    LogprobProbeResult out;
    out.train_rows = static_cast<std::size_t>(x_train.rows());
    out.dev_rows = static_cast<std::size_t>(x_dev.rows());
    out.train_sentences = train_recs.size();
    out.dev_sentences = dev_recs.size();
    if (x_train.rows() < 2) throw DataError("logprob probe needs at least 2 training rows");
    out.norm = featurestore::zscore_fit(x_train);
    const Eigen::MatrixXd z_train = featurestore::zscore_apply(x_train, out.norm);
    const Eigen::MatrixXd z_dev = featurestore::zscore_apply(x_dev, out.norm);

    double best_mse = std::numeric_limits<double>::infinity();
    for (double lambda : lambda_grid) {
        solvers::RidgeFit fit = solvers::fit_ridge(z_train, t_train, lambda);
        const double mse = (solvers::ridge_predict(fit, z_dev) - t_dev).squaredNorm() / static_cast<double>(t_dev.size());
        out.dev_mse.emplace_back(lambda, mse);
        if (mse < best_mse) {
            best_mse = mse;
            out.fit = std::move(fit);
            out.lambda = lambda;
        }
    }
    out.r2 = r_squared(t_dev, solvers::ridge_predict(out.fit, z_dev), &out.degenerate_targets);
    return out;
}

}  // namespace gramprobe::probes
