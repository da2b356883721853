#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gramprobe/error.hpp"
#include "gramprobe/solvers.hpp"

namespace gramprobe::solvers {
namespace {

double soft_threshold(double x, double t) noexcept {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

double base_intercept(const Eigen::VectorXd& y, bool fit_intercept) {
    if (!fit_intercept) return 0.0;
    const double rate = y.mean();
    return std::log(rate / (1.0 - rate));
}

Eigen::VectorXd residual_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& p_minus_y) {
    return X.transpose() * p_minus_y / static_cast<double>(X.rows());
}

double kkt_from_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& g, double gb, double lambda,
                         bool fit_intercept) {
    double worst = fit_intercept ? std::abs(gb) : 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        const double v = w(j) == 0.0 ? std::max(0.0, std::abs(g(j)) - lambda)
                                     : std::abs(g(j) + (w(j) > 0.0 ? lambda : -lambda));
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace

double lasso_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       double lambda) {
    return logistic_objective(w, b, X, y, 0.0) + lambda * w.lpNorm<1>();
}

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool fit_intercept) {
    check_binary_problem(X, y);
    const double p0 = sigmoid(base_intercept(y, fit_intercept));
    const Eigen::VectorXd r = Eigen::VectorXd::Constant(y.size(), p0) - y;
    return residual_gradient(X, r).cwiseAbs().maxCoeff();
}

double lasso_kkt_residual(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double lambda, bool fit_intercept) {
    double gb = 0.0;
    const Eigen::VectorXd g = logistic_gradient(w, b, X, y, 0.0, gb);
    return kkt_from_gradient(w, g, gb, lambda, fit_intercept);
}

LogisticFit fit_lasso_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                               const SolverConfig& cfg, const LogisticFit* warm_start) {
    check_binary_problem(X, y);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be finite and >= 0");
    if (!(cfg.tolerance > 0.0)) throw UsageError("solver tolerance must be positive");

    const Eigen::Index n_rows = X.rows();
    const Eigen::Index dim = X.cols();
    const double n = static_cast<double>(n_rows);
    const bool icpt = cfg.fit_intercept;

    LogisticFit fit;
    fit.penalty = Penalty::L1;
    fit.strength = lambda;

    // Above lambda_max the origin (with the base-rate intercept) is optimal.
    const double b0 = base_intercept(y, icpt);
    if (lambda >= lasso_lambda_max(X, y, icpt)) {
        fit.w = Eigen::VectorXd::Zero(dim);
        fit.b = b0;
        fit.final_objective = lasso_objective(fit.w, fit.b, X, y, lambda);
        fit.grad_norm = lasso_kkt_residual(fit.w, fit.b, X, y, lambda, icpt);
        fit.converged = true;
        return fit;
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    double b = b0;
    if (warm_start && warm_start->w.size() == dim) {
        w = warm_start->w;
        b = icpt ? warm_start->b : 0.0;
    }

    // Linear predictor from the nonzero columns only; recomputed every outer
    // iteration so the final gradient is an exact certificate.
    auto predictor = [&](const Eigen::VectorXd& wv, double bv) {
        Eigen::VectorXd out = Eigen::VectorXd::Constant(n_rows, bv);
        for (Eigen::Index j = 0; j < dim; ++j) {
            if (wv(j) != 0.0) out.noalias() += wv(j) * X.col(j);
        }
        return out;
    };

    std::vector<double> a(static_cast<std::size_t>(dim));
    std::vector<Eigen::Index> active, entrants;

    int iter = 0;
    double kkt = std::numeric_limits<double>::infinity();
    double gb = 0.0;
    for (;; ++iter) {
        const Eigen::VectorXd z = predictor(w, b);
        const Eigen::VectorXd p = z.unaryExpr([](double v) { return sigmoid(v); });
        const Eigen::VectorXd pmy = p - y;
        const Eigen::VectorXd g = residual_gradient(X, pmy);
        gb = icpt ? pmy.sum() / n : 0.0;
        kkt = kkt_from_gradient(w, g, gb, lambda, icpt);
        if (kkt <= cfg.tolerance || iter >= cfg.max_iterations) break;
        double f = 0.0;
        for (Eigen::Index i = 0; i < n_rows; ++i) f += softplus(z(i)) - y(i) * z(i);
        f = f / n + lambda * w.lpNorm<1>();

        // Quadratic model around (w, b) with weights v and working residual
        // r = v * (target - z'). Coordinates outside the active set stay at
        // zero; any that should move show up in the next outer KKT check.
        const Eigen::VectorXd v = (p.array() * (1.0 - p.array())).max(1e-6).matrix();
        const double a_b = v.sum() / n;
        Eigen::VectorXd r = -pmy;
        Eigen::VectorXd w_new = w;
        double b_new = b;

        // Working set: current nonzeros plus the worst KKT violators, at most
        // max(32, 2 * nnz) of them per outer iteration. At small lambda almost
        // every coordinate violates at w = 0 and admitting all of them makes
        // the first coordinate-descent solve cost O(N D) per sweep.
        active.clear();
        entrants.clear();
        for (Eigen::Index j = 0; j < dim; ++j) {
            if (w(j) != 0.0) active.push_back(j);
            else if (std::abs(g(j)) > lambda) entrants.push_back(j);
        }
        const std::size_t cap = std::max<std::size_t>(32, 2 * active.size());
        if (entrants.size() > cap) {
            std::partial_sort(entrants.begin(), entrants.begin() + static_cast<std::ptrdiff_t>(cap), entrants.end(),
                              [&](Eigen::Index i, Eigen::Index j) {
                                  const double gi = std::abs(g(i)), gj = std::abs(g(j));
                                  return gi != gj ? gi > gj : i < j;
                              });
            entrants.resize(cap);
            std::sort(entrants.begin(), entrants.end());
        }
        active.insert(active.end(), entrants.begin(), entrants.end());
        for (Eigen::Index j : active) a[static_cast<std::size_t>(j)] = X.col(j).cwiseAbs2().dot(v) / n;

        // Returns a_j * delta^2, the model decrease scale of this update.
        auto update = [&](Eigen::Index j) {
            const double aj = a[static_cast<std::size_t>(j)];
            if (aj <= 0.0) return 0.0;
            const double c = X.col(j).dot(r) / n + aj * w_new(j);
            const double next = soft_threshold(c, lambda) / aj;
            const double delta = next - w_new(j);
            if (delta == 0.0) return 0.0;
            r.noalias() -= delta * v.cwiseProduct(X.col(j));
            w_new(j) = next;
            return aj * delta * delta;
        };
        auto update_intercept = [&]() {
            if (!icpt) return 0.0;
            const double delta = r.sum() / n / a_b;
            if (delta == 0.0) return 0.0;
            r.noalias() -= delta * v;
            b_new += delta;
            return a_b * delta * delta;
        };

        const double inner_tol = std::max(1e-4 * kkt * kkt, 1e-32);
        for (int sweep = 0; sweep < 1000; ++sweep) {
            double change = update_intercept();
            for (Eigen::Index j : active) change = std::max(change, update(j));
            if (change <= inner_tol) break;
        }

        // Backtracking on the composite objective.
        const Eigen::VectorXd dw = w_new - w;
        const double db = b_new - b;
        const double decrease = g.dot(dw) + gb * db + lambda * (w_new.lpNorm<1>() - w.lpNorm<1>());
        Eigen::VectorXd dz = Eigen::VectorXd::Constant(n_rows, db);
        for (Eigen::Index j : active) {
            if (dw(j) != 0.0) dz.noalias() += dw(j) * X.col(j);
        }
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Eigen::VectorXd w_try = t == 1.0 ? w_new : Eigen::VectorXd(w + t * dw);
            const Eigen::VectorXd z_try = z + t * dz;
            double f_try = 0.0;
            for (Eigen::Index i = 0; i < n_rows; ++i) f_try += softplus(z_try(i)) - y(i) * z_try(i);
            f_try = f_try / n + lambda * w_try.lpNorm<1>();
            if (f_try <= f + 1e-4 * t * decrease + slack) {
                w = w_try;
                b += t * db;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
    }

    fit.w = std::move(w);
    fit.b = b;
    fit.final_objective = lasso_objective(fit.w, fit.b, X, y, lambda);
    fit.grad_norm = kkt;
    fit.iterations = iter;
    fit.converged = kkt <= cfg.tolerance;
    return fit;
}

}  // namespace gramprobe::solvers
