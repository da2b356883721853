#include <doctest.h>

#include <cstdio>
#include <set>

#include "gramprobe/error.hpp"
#include "gramprobe/solvers.hpp"
#include "gramprobe/synthetic.hpp"
#include "support.hpp"

using namespace gramprobe;
using namespace gramprobe::solvers;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

/// Labels drawn from a logistic model so classes overlap.
Eigen::VectorXd noisy_labels(testing::Gen& g, const Eigen::MatrixXd& X, double scale) {
    const Eigen::VectorXd w = g.vector(X.cols(), scale);
    Eigen::VectorXd y(X.rows());
    do {
        for (long i = 0; i < X.rows(); ++i) y(i) = g.coin(testing::oracle::sigmoid(X.row(i).dot(w))) ? 1.0 : 0.0;
    } while (y.sum() == 0.0 || y.sum() == static_cast<double>(X.rows()));
    return y;
}

/// Root of 2w = sigmoid(-w) by bisection: the stationary point of
/// softplus(-w) + w^2, which is the objective of X=[[1],[-1]], y=[1,0] at
/// alpha = 1 once symmetry fixes b = 0.
double two_point_oracle_w() {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (2.0 * mid - testing::oracle::sigmoid(-mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("logistic objective: examples and extended-precision oracle") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 2, -1, 0.5, 3, -2, 0, 0;
    Eigen::VectorXd y(4);
    y << 1, 0, 0, 1;
    CHECK(logistic_objective(Eigen::VectorXd::Zero(2), 0.0, X, y, 3.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    Eigen::VectorXd w(2);
    w << 0.3, -0.7;
    CHECK(logistic_objective(w, 0.1, X, y, 0.0) ==
          doctest::Approx(static_cast<double>(testing::oracle::logistic_objective(w, 0.1, X, y, 0.0))).epsilon(1e-12));

    testing::Gen g(1);
    for (int trial = 0; trial < 200; ++trial) {
        const long n = g.integer(2, 50), d = g.integer(1, 20);
        const Eigen::MatrixXd Xr = g.matrix(n, d, g.uniform(0.1, 5.0));
        const Eigen::VectorXd yr = g.labels(n);
        const Eigen::VectorXd wr = g.vector(d, g.uniform(0.0, 3.0));
        const double b = g.normal() * 2.0, alpha = g.coin() ? 0.0 : g.uniform(0.0, 10.0);
        const double got = logistic_objective(wr, b, Xr, yr, alpha);
        const auto want = static_cast<double>(testing::oracle::logistic_objective(wr, b, Xr, yr, alpha));
        REQUIRE(std::abs(got - want) <= 1e-12 * std::abs(want));
    }

    CHECK_THROWS_AS(logistic_objective(Eigen::VectorXd::Zero(3), 0.0, X, y, 0.0), DataError);
}

TEST_CASE("softplus and sigmoid stay finite at extreme inputs") {
    CHECK(softplus(1000.0) == 1000.0);
    CHECK(softplus(-1000.0) == 0.0);
    CHECK(sigmoid(1000.0) == 1.0);
    CHECK(sigmoid(-1000.0) == 0.0);
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("logistic gradient matches central differences") {
    testing::Gen g(2);
    for (int trial = 0; trial < 100; ++trial) {
        const long n = g.integer(2, 50), d = g.integer(1, 20);
        const Eigen::MatrixXd X = g.matrix(n, d);
        const Eigen::VectorXd y = g.labels(n);
        const Eigen::VectorXd w = g.vector(d, 0.5);
        const double b = g.normal(), alpha = g.uniform(0.0, 4.0);
        double gb = 0.0;
        const Eigen::VectorXd grad = logistic_gradient(w, b, X, y, alpha, gb);

        const double h = 1e-5;
        Eigen::VectorXd fd(d + 1);
        for (long j = 0; j <= d; ++j) {
            Eigen::VectorXd wp = w, wm = w;
            double bp = b, bm = b;
            if (j < d) {
                wp(j) += h;
                wm(j) -= h;
            } else {
                bp += h;
                bm -= h;
            }
            fd(j) = (logistic_objective(wp, bp, X, y, alpha) - logistic_objective(wm, bm, X, y, alpha)) / (2 * h);
        }
        Eigen::VectorXd analytic(d + 1);
        analytic << grad, gb;
        REQUIRE((analytic - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
    }
}

TEST_CASE("fit_logistic_l2: two-point separable set at alpha = 1") {
    const double w_star = two_point_oracle_w();
    // Frozen from the bisection above and an independent 2-D ternary search.
    CHECK(w_star == doctest::Approx(0.2223234712783291).epsilon(1e-12));
    const double f_star = std::log1p(std::exp(-w_star)) + w_star * w_star;
    CHECK(f_star == doctest::Approx(0.6375789538303829).epsilon(1e-12));

    Eigen::MatrixXd X(2, 1);
    X << 1, -1;
    Eigen::VectorXd y(2);
    y << 1, 0;
    const auto fit = fit_logistic_l2(X, y, 1.0);
    CHECK(fit.converged);
    CHECK(std::abs(fit.final_objective - 0.6375789538303829) < 1e-6);
    CHECK(std::abs(fit.w(0) - w_star) < 1e-6);
    CHECK(std::abs(fit.b) < 1e-6);
}

TEST_CASE("fit_logistic_l2: heavy penalty drives w to zero") {
    Eigen::MatrixXd X(2, 1);
    X << 1, -1;
    Eigen::VectorXd y(2);
    y << 1, 0;
    const auto fit = fit_logistic_l2(X, y, 1e9);
    CHECK(std::abs(fit.w(0)) < 1e-9);
    CHECK(std::abs(fit.b) < 1e-9);
    const auto p = predict_proba(fit, X);
    CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(p(1) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("fit_logistic_l2: certificate, descent, path monotonicity, determinism") {
    testing::Gen g(3);
    const std::vector<double> grid = {0.25, 0.5, 1, 2, 4, 8, 16, 32};
    for (int trial = 0; trial < 25; ++trial) {
        const long n = g.integer(10, 80), d = g.integer(1, 30);
        const Eigen::MatrixXd X = g.matrix(n, d, g.uniform(0.2, 3.0));
        const Eigen::VectorXd y = g.coin() ? g.labels(n) : noisy_labels(g, X, 1.0);

        double grad_b0 = 0.0;
        const Eigen::VectorXd g0 = logistic_gradient(Eigen::VectorXd::Zero(d), 0.0, X, y, 0.0, grad_b0);
        const double g0_norm = std::sqrt(g0.squaredNorm() + grad_b0 * grad_b0);

        double prev_norm = INFINITY;
        for (double alpha : grid) {
            const auto fit = fit_logistic_l2(X, y, alpha);
            REQUIRE(fit.converged);
            REQUIRE(fit.w.allFinite());
            double gb = 0.0;
            const Eigen::VectorXd gw = logistic_gradient(fit.w, fit.b, X, y, alpha, gb);
            REQUIRE(std::sqrt(gw.squaredNorm() + gb * gb) <= 1e-8 * std::max(1.0, g0_norm) * 1.0000001);
            REQUIRE(fit.final_objective <= logistic_objective(Eigen::VectorXd::Zero(d), 0.0, X, y, alpha));
            REQUIRE(fit.w.norm() <= prev_norm + 1e-9);
            prev_norm = fit.w.norm();

            const auto again = fit_logistic_l2(X, y, alpha);
            REQUIRE(again.w == fit.w);
            REQUIRE(again.b == fit.b);
        }
    }
}

TEST_CASE("fit_logistic_l2: input errors") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd one_class = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(fit_logistic_l2(X, one_class, 1.0), DataError);
    Eigen::VectorXd y(3);
    y << 1, 0, 1;
    Eigen::MatrixXd bad = X;
    bad(1, 1) = NAN;
    CHECK_THROWS_AS(fit_logistic_l2(bad, y, 1.0), DataError);
    CHECK_THROWS_AS(fit_logistic_l2(X, Eigen::VectorXd::Ones(2), 1.0), DataError);
    Eigen::VectorXd y2(3);
    y2 << 1, 0, 2;
    CHECK_THROWS_AS(fit_logistic_l2(X, y2, 1.0), DataError);
    CHECK_THROWS_AS(fit_logistic_l2(X, y, -1.0), UsageError);
    SolverConfig cfg;
    cfg.tolerance = 0.0;
    CHECK_THROWS_AS(fit_logistic_l2(X, y, 1.0, cfg), UsageError);
    CHECK_THROWS_AS(fit_lasso_logistic(X, one_class, 1.0), DataError);
}

TEST_CASE("predict_proba") {
    LogisticFit fit;
    fit.w = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd X(3, 2);
    X << 1, 2, -3, 4, 100, -100;
    CHECK(predict_proba(fit, X) == Eigen::VectorXd::Constant(3, 0.5));
    fit.b = 1e6;
    CHECK(predict_proba(fit, X) == Eigen::VectorXd::Ones(3));
    CHECK_THROWS_AS(predict_proba(fit, Eigen::MatrixXd(1, 3)), DataError);

    fit.b = 0.0;
    fit.w << 0.5, -0.25;
    const auto z = decision_function(fit, X);
    const auto p = predict_proba(fit, X);
    for (int i = 0; i < 3; ++i) CHECK(p(i) == doctest::Approx(testing::oracle::sigmoid(z(i))));
    // Strictly monotone in the decision value.
    CHECK((z(0) < z(1)) == (p(0) < p(1)));
}

TEST_CASE("predict_proba: fixture fit against golden scores") {
    testing::Gen g(77);
    const Eigen::MatrixXd X = g.matrix(30, 4);
    const Eigen::VectorXd y = noisy_labels(g, X, 1.0);
    const auto fit = fit_logistic_l2(X, y, 0.5);
    const Eigen::VectorXd p = predict_proba(fit, X);

    std::string text;
    char buf[64];
    for (long i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12f\n", p(i));
        text += buf;
    }
    const auto path = testing::source_path("tests/golden/logistic_fixture_scores.txt");
    if (testing::update_goldens()) testing::write_file(path, text);
    std::istringstream in(testing::read_file(path));
    double v;
    long i = 0;
    for (; in >> v; ++i) {
        REQUIRE(i < p.size());
        CHECK(std::abs(p(i) - v) < 1e-9);
    }
    CHECK(i == p.size());
}

TEST_CASE("lasso: lambda_max zeroes every weight") {
    testing::Gen g(4);
    for (int trial = 0; trial < 20; ++trial) {
        const long n = g.integer(5, 60), d = g.integer(1, 40);
        const Eigen::MatrixXd X = g.matrix(n, d);
        const Eigen::VectorXd y = g.labels(n);
        const double lmax = lasso_lambda_max(X, y);
        const auto above = fit_lasso_logistic(X, y, lmax * 1.0001);
        REQUIRE(above.nonzeros() == 0);
        REQUIRE(above.w.isZero(0.0));
        const double rate = y.mean();
        REQUIRE(above.b == doctest::Approx(std::log(rate / (1 - rate))).epsilon(1e-7));
        const auto below = fit_lasso_logistic(X, y, lmax * 0.9);
        REQUIRE(below.nonzeros() >= 1);
    }
}

TEST_CASE("lasso: lambda = 0 agrees with unpenalised l2") {
    testing::Gen g(5);
    const Eigen::MatrixXd X = g.matrix(20, 5);
    const Eigen::VectorXd y = g.labels(20);  // labels independent of X: classes overlap
    const auto l2 = fit_logistic_l2(X, y, 0.0);
    SolverConfig cfg;
    cfg.tolerance = 1e-10;
    const auto l1 = fit_lasso_logistic(X, y, 0.0, cfg);
    REQUIRE(l2.converged);
    REQUIRE(l1.converged);
    CHECK(l2.w.norm() < 20.0);
    CHECK((l1.w - l2.w).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(std::abs(l1.b - l2.b) < 1e-5);
}

TEST_CASE("lasso: planted data against a FISTA oracle") {
    const auto pc = synthetic::planted_classification(400, 2000, 10, 6, 1.0);
    const double lambda = 0.4 * lasso_lambda_max(pc.X, pc.y);
    SolverConfig cfg;
    cfg.tolerance = 1e-9;
    const auto fit = fit_lasso_logistic(pc.X, pc.y, lambda, cfg);
    REQUIRE(fit.converged);
    CHECK(lasso_kkt_residual(fit.w, fit.b, pc.X, pc.y, lambda) <= 1e-9);

    const auto [w_o, b_o] = testing::oracle::lasso_fista(pc.X, pc.y, lambda, 3000);
    const double f_fit = testing::oracle::lasso_objective(fit.w, fit.b, pc.X, pc.y, lambda);
    const double f_oracle = testing::oracle::lasso_objective(w_o, b_o, pc.X, pc.y, lambda);
    CHECK(f_fit <= f_oracle + 1e-9);
    CHECK(f_oracle - f_fit < 1e-4);
    CHECK(std::abs(fit.final_objective - f_fit) < 1e-10);

    // Weights agree with the oracle wherever either is clearly nonzero, and
    // the support is the planted set plus a small spillover.
    std::set<std::size_t> support(pc.support.begin(), pc.support.end());
    std::size_t inside = 0, spill = 0;
    for (long j = 0; j < fit.w.size(); ++j) {
        if (std::abs(w_o(j)) > 0.05) CHECK(fit.w(j) != 0.0);
        if (fit.w(j) == 0.0) continue;
        (support.count(static_cast<std::size_t>(j)) ? inside : spill)++;
        if (std::abs(fit.w(j)) > 0.05) CHECK(std::abs(w_o(j) - fit.w(j)) < 0.02);
    }
    CHECK(inside == 10);
    CHECK(spill <= 10);
}

TEST_CASE("lasso: KKT certificate on random instances and warm starts") {
    testing::Gen g(8);
    for (int trial = 0; trial < 20; ++trial) {
        const long n = g.integer(20, 100), d = g.integer(5, 300);
        const Eigen::MatrixXd X = g.matrix(n, d);
        const Eigen::VectorXd y = noisy_labels(g, X, 0.3);
        const double lmax = lasso_lambda_max(X, y);
        LogisticFit prev;
        bool have_prev = false;
        for (double frac : {0.5, 0.2, 0.05}) {
            const double lambda = frac * lmax;
            const auto cold = fit_lasso_logistic(X, y, lambda);
            REQUIRE(cold.converged);
            REQUIRE(lasso_kkt_residual(cold.w, cold.b, X, y, lambda) <= 1e-8);
            REQUIRE(cold.grad_norm <= 1e-8);
            const auto warm = fit_lasso_logistic(X, y, lambda, {}, have_prev ? &prev : nullptr);
            REQUIRE(warm.converged);
            REQUIRE(std::abs(warm.final_objective - cold.final_objective) < 1e-8);
            const auto again = fit_lasso_logistic(X, y, lambda);
            REQUIRE(again.w == cold.w);
            prev = warm;
            have_prev = true;
        }
    }
}

TEST_CASE("ridge: identity design, large-lambda limit and errors") {
    SolverConfig no_icpt;
    no_icpt.fit_intercept = false;
    Eigen::VectorXd y(4);
    y << 1.5, -2, 0.25, 7;
    const auto fit = fit_ridge(Eigen::MatrixXd::Identity(4, 4), y, 0.0, no_icpt);
    CHECK((fit.w - y).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(fit.b == 0.0);

    testing::Gen g(9);
    const Eigen::MatrixXd X = g.matrix(12, 3);
    const Eigen::VectorXd t = g.vector(12);
    const auto big = fit_ridge(X, t, 1e12);
    CHECK(big.w.norm() < 1e-9);
    CHECK(big.b == doctest::Approx(t.mean()).epsilon(1e-9));

    CHECK_THROWS_AS(fit_ridge(X, g.vector(5), 1.0), DataError);
    CHECK_THROWS_AS(fit_ridge(Eigen::MatrixXd(0, 3), Eigen::VectorXd(0), 1.0), DataError);
    Eigen::MatrixXd bad = X;
    bad(0, 0) = INFINITY;
    CHECK_THROWS_AS(fit_ridge(bad, t, 1.0), DataError);
    CHECK_THROWS_AS(fit_ridge(X, t, -1.0), UsageError);
}

TEST_CASE("ridge: normal-equation oracle") {
    testing::Gen g(10);
    for (int trial = 0; trial < 100; ++trial) {
        const long n = g.integer(1, 40), d = g.integer(1, 12);
        const Eigen::MatrixXd X = g.matrix(n, d, g.uniform(0.1, 4.0));
        const Eigen::VectorXd y = g.vector(n, 3.0).array() + g.normal();
        // lambda = 0 only where the system is well posed.
        const double lambda = n > d + 2 && g.coin(0.2) ? 0.0 : std::pow(2.0, g.integer(-4, 5));
        const auto fit = fit_ridge(X, y, lambda);
        const auto [w, b] = testing::oracle::ridge(X, y, lambda);
        REQUIRE(fit.relative_residual <= 1e-8);
        const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
        REQUIRE((fit.w - w).cwiseAbs().maxCoeff() <= 1e-8 * scale);
        REQUIRE(std::abs(fit.b - b) <= 1e-8 * std::max(1.0, std::abs(b)));
        REQUIRE(rel_err(ridge_predict(fit, X)(0), X.row(0).dot(w) + b) < 1e-8);
    }
}
