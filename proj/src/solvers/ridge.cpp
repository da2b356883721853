#include <cmath>

#include "gramprobe/error.hpp"
#include "gramprobe/solvers.hpp"

namespace gramprobe::solvers {

RidgeFit fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const SolverConfig& cfg) {
    if (X.rows() != y.size()) throw DataError("ridge: feature rows != targets");
    if (X.rows() < 1) throw DataError("ridge: no rows");
    if (!X.allFinite() || !y.allFinite()) throw DataError("ridge: non-finite input");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be finite and >= 0");

    const double n = static_cast<double>(X.rows());
    const Eigen::Index dim = X.cols();

    // With an unpenalised intercept the optimum centres both sides:
    //   (Xc^T Xc + N lambda I) w = Xc^T yc,   b = mean(y) - mean(X) w.
    Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(dim);
    double y_mean = 0.0;
    if (cfg.fit_intercept) {
        x_mean = X.colwise().mean();
        y_mean = y.mean();
    }
    const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::MatrixXd A = Xc.transpose() * Xc;
    A.diagonal().array() += n * lambda;
    const Eigen::VectorXd rhs = Xc.transpose() * yc;

    RidgeFit fit;
    fit.lambda = lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        fit.w = ldlt.solve(rhs);
        ok = fit.w.allFinite();
    }
    if (!ok || (A * fit.w - rhs).norm() > 1e-10 * std::max(1.0, rhs.norm())) {
        // Singular system (lambda = 0 with rank-deficient X): minimum-norm solution.
        fit.w = A.completeOrthogonalDecomposition().solve(rhs);
    }
    fit.b = y_mean - x_mean.dot(fit.w);
    const double scale = rhs.norm();
    fit.relative_residual = (A * fit.w - rhs).norm() / (scale > 0.0 ? scale : 1.0);
    return fit;
}

Eigen::VectorXd ridge_predict(const RidgeFit& fit, const Eigen::MatrixXd& X) {
    if (X.cols() != fit.w.size()) throw DataError("ridge model feature count mismatch");
    Eigen::VectorXd out = X * fit.w;
    out.array() += fit.b;
    return out;
}

}  // namespace gramprobe::solvers
