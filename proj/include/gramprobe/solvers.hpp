#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace gramprobe::solvers {

struct SolverConfig {
    double tolerance = 1e-8;  ///< gradient-norm (l2) or KKT-residual (l1) target
    int max_iterations = 1000;
    bool fit_intercept = true;  ///< the intercept is never penalised
};

enum class Penalty { L2, L1 };

struct LogisticFit {
    Eigen::VectorXd w;
    double b = 0.0;
    Penalty penalty = Penalty::L2;
    double strength = 0.0;  ///< alpha for L2, lambda for L1
    double final_objective = 0.0;
    double grad_norm = 0.0;  ///< ||grad||_2 for L2, max KKT violation for L1
    int iterations = 0;
    bool converged = false;

    std::size_t nonzeros() const;
};

struct RidgeFit {
    Eigen::VectorXd w;
    double b = 0.0;
    double lambda = 0.0;
    double relative_residual = 0.0;  ///< ||A w - rhs|| / ||rhs|| of the normal equations
};

// ---------------------------------------------------------------------------
// Logistic loss
// ---------------------------------------------------------------------------

/// log(1 + exp(z)) without overflow.
double softplus(double z) noexcept;
/// 1 / (1 + exp(-z)) without overflow.
double sigmoid(double z) noexcept;

/// Mean NLL of sigma(Xw + b) against y in {0,1}, plus alpha * ||w||^2.
double logistic_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double alpha);

/// Analytic gradient of logistic_objective; `grad_b` receives d/db.
Eigen::VectorXd logistic_gradient(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y, double alpha, double& grad_b);

/// l2-regularised logistic regression by Newton-CG with Armijo backtracking,
/// started at (0, 0). Converged when ||grad|| <= tol * max(1, ||grad(0,0)||).
LogisticFit fit_logistic_l2(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                            const SolverConfig& cfg = {});

Eigen::VectorXd decision_function(const LogisticFit& fit, const Eigen::MatrixXd& X);
Eigen::VectorXd predict_proba(const LogisticFit& fit, const Eigen::MatrixXd& X);

// ---------------------------------------------------------------------------
// l1 (LASSO) logistic regression
// ---------------------------------------------------------------------------

/// Smallest lambda at which w = 0 is optimal: max_j |dNLL/dw_j| at w = 0 and
/// the intercept set to the logit of the positive rate.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool fit_intercept = true);

/// Largest violation of the l1 subgradient optimality conditions.
double lasso_kkt_residual(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double lambda, bool fit_intercept = true);

double lasso_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       double lambda);

/// Mean NLL + lambda * ||w||_1 by proximal Newton with coordinate-descent
/// inner solves. `warm_start`, when given, seeds (w, b); it changes only the
/// path to the optimum, not the certificate.
LogisticFit fit_lasso_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                               const SolverConfig& cfg = {}, const LogisticFit* warm_start = nullptr);

// ---------------------------------------------------------------------------
// Ridge regression
// ---------------------------------------------------------------------------

/// Minimises ||Xw + b - y||^2 / N + lambda ||w||^2 with an unpenalised
/// intercept. Solved in closed form on centred data.
RidgeFit fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const SolverConfig& cfg = {});

Eigen::VectorXd ridge_predict(const RidgeFit& fit, const Eigen::MatrixXd& X);

/// Throws DataError unless y is 0/1 with both classes present, shapes agree,
/// and every feature is finite.
void check_binary_problem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

}  // namespace gramprobe::solvers
