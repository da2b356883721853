#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>

#include "gramprobe/probes.hpp"

namespace gramprobe::probes {

SparsityTargetNotMet::SparsityTargetNotMet(std::size_t k_, std::size_t closest, double lambda)
    : NumericalError("sparsity target not met: wanted k = " + std::to_string(k_) + ", closest k' = " +
                     std::to_string(closest)),
      k(k_),
      closest_k_prime(closest),
      closest_lambda(lambda) {}

std::size_t target_count(double p, std::size_t total) {
    const double exact = p * static_cast<double>(total);
    return static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
}

bool within_tolerance(std::size_t k, std::size_t k_prime) {
    const double diff = std::abs(static_cast<double>(k) - static_cast<double>(k_prime));
    return diff <= 0.05 * static_cast<double>(k);
}

std::vector<std::size_t> NeuronSet::layer_histogram(std::size_t n_layers, std::size_t hidden_dim) const {
    std::vector<std::size_t> h(n_layers, 0);
    for (auto i : indices) {
        const std::size_t layer = hidden_dim ? i / hidden_dim : 0;
        if (layer < n_layers) ++h[layer];
    }
    return h;
}

SparsityResult sparsity_target_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double p,
                                   const solvers::SolverConfig& cfg) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("target sparsity p must lie in (0, 1)");
    const auto total = static_cast<std::size_t>(X.cols());
    const std::size_t k = target_count(p, total);

    const double lambda_max = solvers::lasso_lambda_max(X, y, cfg.fit_intercept);
    double lo = lambda_max * 1e-6;  // dense end
    double hi = lambda_max;         // all-zero end

    std::optional<solvers::LogisticFit> best;
    std::size_t best_gap = std::numeric_limits<std::size_t>::max();
    std::optional<solvers::LogisticFit> previous;

    for (int step = 1; step <= kMaxSparsitySearchSteps; ++step) {
        const double lambda = std::sqrt(lo * hi);
        solvers::LogisticFit fit = solvers::fit_lasso_logistic(X, y, lambda, cfg, previous ? &*previous : nullptr);
        const std::size_t k_prime = fit.nonzeros();
        const std::size_t gap = k_prime > k ? k_prime - k : k - k_prime;
        if (gap < best_gap) {
            best_gap = gap;
            best = fit;
        }
        if (within_tolerance(k, k_prime)) {
            SparsityResult out;
            out.target = {p, total, k, k_prime, true, lambda, step};
            for (Eigen::Index j = 0; j < fit.w.size(); ++j) {
                if (fit.w(j) != 0.0) out.neurons.indices.push_back(static_cast<std::size_t>(j));
            }
            out.lasso = std::move(fit);
            return out;
        }
        // Nonzero count falls (roughly monotonically) as lambda grows.
        if (k_prime > k) lo = lambda;
        else hi = lambda;
        previous = std::move(fit);
    }
    throw SparsityTargetNotMet(k, best->nonzeros(), best->strength);
}

SparsityResult sparsity_target_fit(const featurestore::FeatureDump& dump, const dataset::Dataset& data, double p,
                                   const solvers::SolverConfig& cfg) {
    if (dump.mode != featurestore::DumpMode::LastToken) throw DataError("sparsity targeting requires a last_token dump");
    const SplitData split = make_split_data(featurestore::concat_layers(dump), data);
    const auto norm = featurestore::zscore_fit(split.train);
    return sparsity_target_fit(featurestore::zscore_apply(split.train, norm), split.y_train, p, cfg);
}

}  // namespace gramprobe::probes
