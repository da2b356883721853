#include <cmath>
#include <limits>

#include "gramprobe/error.hpp"
#include "gramprobe/solvers.hpp"

namespace gramprobe::solvers {

std::size_t LogisticFit::nonzeros() const {
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < w.size(); ++j) k += (w(j) != 0.0);
    return k;
}

// For |z| > 30 the correction term exp(-|z|) < 1e-13 underflows gracefully in
// log1p; both branches stay finite for any finite z.
double softplus(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_binary_problem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) {
        throw DataError("feature rows (" + std::to_string(X.rows()) + ") != labels (" + std::to_string(y.size()) + ")");
    }
    if (X.rows() < 2) throw DataError("logistic fit needs at least 2 rows");
    if (!X.allFinite()) throw DataError("non-finite feature value");
    bool pos = false, neg = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) == 1.0) pos = true;
        else if (y(i) == 0.0) neg = true;
        else throw DataError("labels must be 0 or 1");
    }
    if (!pos || !neg) throw DataError("logistic fit needs both classes present");
}

namespace {

double mean_nll(const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += softplus(z(i)) - y(i) * z(i);
    return s / static_cast<double>(z.size());
}

void check_dims(const Eigen::VectorXd& w, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.cols() != w.size() || X.rows() != y.size()) throw DataError("logistic objective: dimension mismatch");
}

struct State {
    Eigen::VectorXd z;  // X w + b
    Eigen::VectorXd p;  // sigma(z)
    double f = 0.0;
};

State evaluate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
               double alpha) {
    State s;
    s.z = X * w;
    s.z.array() += b;
    s.p = s.z.unaryExpr([](double v) { return sigmoid(v); });
    s.f = mean_nll(s.z, y) + alpha * w.squaredNorm();
    return s;
}

}  // namespace

double logistic_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double alpha) {
    check_dims(w, X, y);
    Eigen::VectorXd z = X * w;
    z.array() += b;
    return mean_nll(z, y) + alpha * w.squaredNorm();
}

Eigen::VectorXd logistic_gradient(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y, double alpha, double& grad_b) {
    check_dims(w, X, y);
    Eigen::VectorXd z = X * w;
    z.array() += b;
    const Eigen::VectorXd r = z.unaryExpr([](double v) { return sigmoid(v); }) - y;
    const double n = static_cast<double>(X.rows());
    grad_b = r.sum() / n;
    return X.transpose() * r / n + 2.0 * alpha * w;
}

LogisticFit fit_logistic_l2(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                            const SolverConfig& cfg) {
    check_binary_problem(X, y);
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw UsageError("alpha must be finite and >= 0");
    if (!(cfg.tolerance > 0.0)) throw UsageError("solver tolerance must be positive");

    const Eigen::Index n_rows = X.rows();
    const Eigen::Index dim = X.cols();
    const double n = static_cast<double>(n_rows);
    const bool icpt = cfg.fit_intercept;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    double b = 0.0;
    State st = evaluate(X, y, w, b, alpha);

    auto gradient = [&](const State& s, Eigen::VectorXd& gw, double& gb) {
        const Eigen::VectorXd r = s.p - y;
        gw = X.transpose() * r / n + 2.0 * alpha * w;
        gb = icpt ? r.sum() / n : 0.0;
    };

    Eigen::VectorXd gw;
    double gb = 0.0;
    gradient(st, gw, gb);
    const double g0 = std::sqrt(gw.squaredNorm() + gb * gb);
    const double target = cfg.tolerance * std::max(1.0, g0);

    LogisticFit fit;
    fit.penalty = Penalty::L2;
    fit.strength = alpha;

    int iter = 0;
    double gnorm = g0;
    for (; iter < cfg.max_iterations; ++iter) {
        if (gnorm <= target) break;

        // Newton direction by preconditioned CG on H d = -g.
        const Eigen::VectorXd curv = st.p.array() * (1.0 - st.p.array());
        Eigen::VectorXd diag_w(dim);
        for (Eigen::Index j = 0; j < dim; ++j) diag_w(j) = X.col(j).cwiseAbs2().dot(curv) / n + 2.0 * alpha;
        const double diag_b = icpt ? curv.sum() / n : 1.0;

        auto hess_vec = [&](const Eigen::VectorXd& vw, double vb, Eigen::VectorXd& hw, double& hb) {
            Eigen::VectorXd u = X * vw;
            if (icpt) u.array() += vb;
            u.array() *= curv.array();
            hw = X.transpose() * u / n + 2.0 * alpha * vw;
            hb = icpt ? u.sum() / n : 0.0;
        };
        auto precond = [&](const Eigen::VectorXd& rw, double rb, Eigen::VectorXd& zw, double& zb) {
            zw = rw.array() / diag_w.array().max(1e-300);
            zb = icpt ? rb / std::max(diag_b, 1e-300) : 0.0;
        };

        Eigen::VectorXd dw = Eigen::VectorXd::Zero(dim);
        double db = 0.0;
        Eigen::VectorXd rw = -gw;
        double rb = -gb;
        Eigen::VectorXd zw;
        double zb;
        precond(rw, rb, zw, zb);
        Eigen::VectorXd pw = zw;
        double pb = zb;
        double rz = rw.dot(zw) + rb * zb;
        const double forcing = std::min(0.1, std::sqrt(gnorm)) * gnorm;
        const Eigen::Index max_cg = std::max<Eigen::Index>(50, 2 * (dim + 1));
        for (Eigen::Index k = 0; k < max_cg; ++k) {
            Eigen::VectorXd hw;
            double hb;
            hess_vec(pw, pb, hw, hb);
            const double php = pw.dot(hw) + pb * hb;
            if (!(php > 0.0)) {
                if (k == 0) {
                    dw = -gw;
                    db = -gb;
                }
                break;
            }
            const double step = rz / php;
            dw += step * pw;
            db += step * pb;
            rw -= step * hw;
            rb -= step * hb;
            if (std::sqrt(rw.squaredNorm() + rb * rb) <= forcing) break;
            precond(rw, rb, zw, zb);
            const double rz_next = rw.dot(zw) + rb * zb;
            const double beta = rz_next / rz;
            rz = rz_next;
            pw = zw + beta * pw;
            pb = zb + beta * pb;
        }

        // Armijo backtracking. The slack absorbs rounding in f once the
        // predicted decrease is below machine resolution.
        const double slope = gw.dot(dw) + gb * db;
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(st.f));
        double t = 1.0;
        bool accepted = false;
        State trial;
        for (int ls = 0; ls < 60; ++ls) {
            trial = evaluate(X, y, w + t * dw, b + t * db, alpha);
            if (trial.f <= st.f + 1e-4 * t * slope + slack) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        w += t * dw;
        b += t * db;
        st = std::move(trial);
        gradient(st, gw, gb);
        gnorm = std::sqrt(gw.squaredNorm() + gb * gb);
    }

    fit.w = std::move(w);
    fit.b = b;
    fit.final_objective = st.f;
    fit.grad_norm = gnorm;
    fit.iterations = iter;
    fit.converged = gnorm <= target;
    return fit;
}

Eigen::VectorXd decision_function(const LogisticFit& fit, const Eigen::MatrixXd& X) {
    if (X.cols() != fit.w.size()) {
        throw DataError("model expects " + std::to_string(fit.w.size()) + " features, got " + std::to_string(X.cols()));
    }
    Eigen::VectorXd z = X * fit.w;
    z.array() += fit.b;
    return z;
}

Eigen::VectorXd predict_proba(const LogisticFit& fit, const Eigen::MatrixXd& X) {
    return decision_function(fit, X).unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace gramprobe::solvers
