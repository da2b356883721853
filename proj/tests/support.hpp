#pragma once

// Shared helpers for the unit and acceptance tests: a generator that does not
// go through gramprobe::Rng, and brute-force oracles written independently of
// the library code they check.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#ifndef GRAMPROBE_SOURCE_DIR
#error "GRAMPROBE_SOURCE_DIR must be defined by the build"
#endif

namespace testing {

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(GRAMPROBE_SOURCE_DIR) / rel;
}

inline bool update_goldens() {
    const char* v = std::getenv("GRAMPROBE_UPDATE_GOLDENS");
    return v != nullptr && std::string(v) == "1";
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("gramprobe-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Test-side generator. Kept separate from the library RNG so a bug there
/// cannot hide in both the code and its test inputs.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed * 0x9E3779B97F4A7C15ULL + 12345) {}

    double uniform() { return static_cast<double>(eng_() >> 11) / 9007199254740992.0; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [lo, hi].
    long integer(long lo, long hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do x = eng_();
        while (x >= limit);
        return lo + static_cast<long>(x % span);
    }
    double normal() {
        double u1;
        do u1 = uniform();
        while (u1 <= 0.0);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * uniform());
    }
    bool coin(double p = 0.5) { return uniform() < p; }

    Eigen::MatrixXd matrix(long rows, long cols, double scale = 1.0) {
        Eigen::MatrixXd m(rows, cols);
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) m(i, j) = scale * normal();
        return m;
    }
    Eigen::VectorXd vector(long n, double scale = 1.0) {
        Eigen::VectorXd v(n);
        for (long i = 0; i < n; ++i) v(i) = scale * normal();
        return v;
    }
    /// Binary labels with both classes present.
    Eigen::VectorXd labels(long n) {
        Eigen::VectorXd y(n);
        do {
            for (long i = 0; i < n; ++i) y(i) = coin() ? 1.0 : 0.0;
        } while (y.sum() == 0.0 || y.sum() == static_cast<double>(n));
        return y;
    }

private:
    std::mt19937_64 eng_;
};

namespace oracle {

/// AUC by the pairwise double sum, ties counting one half.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double total = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) total += 1.0;
            else if (scores[i] == scores[j]) total += 0.5;
        }
    }
    return total / static_cast<double>(pairs);
}

/// log(1 + e^z) in long double.
inline long double softplus(long double z) {
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

/// Mean NLL plus alpha * ||w||^2, summed in long double.
inline long double logistic_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y, double alpha) {
    long double s = 0.0L;
    for (long i = 0; i < X.rows(); ++i) {
        long double z = b;
        for (long j = 0; j < X.cols(); ++j) z += static_cast<long double>(X(i, j)) * w(j);
        s += softplus(z) - static_cast<long double>(y(i)) * z;
    }
    long double pen = 0.0L;
    for (long j = 0; j < w.size(); ++j) pen += static_cast<long double>(w(j)) * w(j);
    return s / X.rows() + alpha * pen;
}

/// Solves A x = rhs by Gaussian elimination with partial pivoting in long double.
inline std::vector<long double> solve(std::vector<std::vector<long double>> A, std::vector<long double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        std::swap(rhs[c], rhs[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const long double f = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            rhs[r] -= f * rhs[c];
        }
    }
    std::vector<long double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        long double s = rhs[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
        x[i] = s / A[i][i];
    }
    return x;
}

/// Ridge with unpenalised intercept from the full (D+1)-dimensional normal
/// equations [X'X + N lambda I, X'1; 1'X, N] [w; b] = [X'y; 1'y].
inline std::pair<Eigen::VectorXd, double> ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    const long n = X.rows(), d = X.cols();
    std::vector<std::vector<long double>> A(static_cast<std::size_t>(d + 1),
                                            std::vector<long double>(static_cast<std::size_t>(d + 1), 0.0L));
    std::vector<long double> rhs(static_cast<std::size_t>(d + 1), 0.0L);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j <= d; ++j) {
            const long double xj = j < d ? X(i, j) : 1.0L;
            rhs[j] += xj * y(i);
            for (long k = 0; k <= d; ++k) A[j][k] += xj * (k < d ? X(i, k) : 1.0L);
        }
    }
    for (long j = 0; j < d; ++j) A[j][j] += static_cast<long double>(n) * lambda;
    const auto sol = solve(A, rhs);
    Eigen::VectorXd w(d);
    for (long j = 0; j < d; ++j) w(j) = static_cast<double>(sol[static_cast<std::size_t>(j)]);
    return {w, static_cast<double>(sol[static_cast<std::size_t>(d)])};
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// FISTA for mean NLL + lambda ||w||_1 with an unpenalised intercept, with a
/// fixed step from the Lipschitz bound ||[X 1]||_2^2 / (4N).
inline std::pair<Eigen::VectorXd, double> lasso_fista(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                                      double lambda, int iterations) {
    const long n = X.rows(), d = X.cols();
    Eigen::MatrixXd Xa(n, d + 1);
    Xa << X, Eigen::VectorXd::Ones(n);
    const double smax = Eigen::JacobiSVD<Eigen::MatrixXd>(Xa).singularValues()(0);
    const double step = 4.0 * static_cast<double>(n) / (smax * smax);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1), prev = theta, mom = theta;
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd z = Xa * mom;
        Eigen::VectorXd r(n);
        for (long i = 0; i < n; ++i) r(i) = sigmoid(z(i)) - y(i);
        Eigen::VectorXd g = Xa.transpose() * r / static_cast<double>(n);
        Eigen::VectorXd next = mom - step * g;
        for (long j = 0; j < d; ++j) {
            const double v = next(j), thr = step * lambda;
            next(j) = v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        mom = next + ((t - 1.0) / t_next) * (next - prev);
        prev = next;
        theta = next;
        t = t_next;
    }
    return {theta.head(d), theta(d)};
}

inline double lasso_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double lambda) {
    return static_cast<double>(logistic_objective(w, b, X, y, 0.0)) + lambda * w.cwiseAbs().sum();
}

}  // namespace oracle
}  // namespace testing
