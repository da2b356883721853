#include <cmath>
#include <unordered_map>

#include "gramprobe/error.hpp"
#include "gramprobe/featurestore.hpp"

namespace gramprobe::featurestore {
namespace {

void require_last_token(const FeatureDump& dump) {
    if (dump.mode != DumpMode::LastToken) {
        throw DataError("operation requires a last_token dump, got per_token");
    }
}

std::vector<std::string> record_ids(const FeatureDump& dump) {
    std::vector<std::string> ids;
    ids.reserve(dump.records.size());
    for (const auto& r : dump.records) ids.push_back(r.id);
    return ids;
}

}  // namespace

FeatureMatrix select_layer(const FeatureDump& dump, std::size_t layer) {
    require_last_token(dump);
    if (layer >= dump.n_layers) {
        throw DataError("layer " + std::to_string(layer) + " out of range (dump has " + std::to_string(dump.n_layers) +
                        " layers)");
    }
    const auto n = static_cast<Eigen::Index>(dump.records.size());
    const auto d = static_cast<Eigen::Index>(dump.hidden_dim);
    FeatureMatrix m;
    m.values.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = dump.last_token_state(static_cast<std::size_t>(i), layer);
        for (Eigen::Index j = 0; j < d; ++j) m.values(i, j) = row[static_cast<std::size_t>(j)];
    }
    m.row_ids = record_ids(dump);
    m.layers = {static_cast<int>(layer)};
    return m;
}

FeatureMatrix concat_layers(const FeatureDump& dump) {
    require_last_token(dump);
    const auto n = static_cast<Eigen::Index>(dump.records.size());
    const auto width = static_cast<Eigen::Index>(dump.n_layers) * dump.hidden_dim;
    FeatureMatrix m;
    m.values.resize(n, width);
    for (Eigen::Index i = 0; i < n; ++i) {
        // last_token payload is already layer-major.
        const auto& h = dump.records[static_cast<std::size_t>(i)].hidden;
        for (Eigen::Index j = 0; j < width; ++j) m.values(i, j) = h[static_cast<std::size_t>(j)];
    }
    m.row_ids = record_ids(dump);
    for (std::uint32_t l = 0; l < dump.n_layers; ++l) m.layers.push_back(static_cast<int>(l));
    m.all_layers = true;
    return m;
}

FeatureMatrix align_rows(const FeatureMatrix& m, const std::vector<std::string>& ids) {
    std::unordered_map<std::string_view, Eigen::Index> index;
    index.reserve(m.row_ids.size());
    for (std::size_t i = 0; i < m.row_ids.size(); ++i) index.emplace(m.row_ids[i], static_cast<Eigen::Index>(i));

    std::vector<std::string> missing;
    std::size_t n_missing = 0;
    for (const auto& id : ids) {
        if (!index.contains(id)) {
            if (missing.size() < 10) missing.push_back(id);
            ++n_missing;
        }
    }
    if (n_missing) {
        std::string msg = std::to_string(n_missing) + " dataset id(s) missing from features; first: ";
        for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
        throw DataError(msg);
    }

    FeatureMatrix out;
    out.values.resize(static_cast<Eigen::Index>(ids.size()), m.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) out.values.row(static_cast<Eigen::Index>(i)) = m.values.row(index.at(ids[i]));
    out.row_ids = ids;
    out.layers = m.layers;
    out.all_layers = m.all_layers;
    return out;
}

FeatureMatrix select_columns(const FeatureMatrix& m, std::span<const std::size_t> columns) {
    FeatureMatrix out;
    out.values.resize(m.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] >= static_cast<std::size_t>(m.cols())) throw DataError("column index out of range");
        out.values.col(static_cast<Eigen::Index>(c)) = m.values.col(static_cast<Eigen::Index>(columns[c]));
    }
    out.row_ids = m.row_ids;
    out.layers = m.layers;
    out.all_layers = m.all_layers;
    return out;
}

NormStats zscore_fit(const Eigen::MatrixXd& train) {
    if (train.rows() < 2) throw DataError("zscore_fit needs at least 2 rows");
    const double n = static_cast<double>(train.rows());
    NormStats s;
    s.mean = train.colwise().sum().transpose() / n;
    s.std.resize(train.cols());
    for (Eigen::Index j = 0; j < train.cols(); ++j) {
        const double var = (train.col(j).array() - s.mean(j)).square().sum() / n;
        s.std(j) = std::sqrt(var);
    }
    s.fit_count = static_cast<std::size_t>(train.rows());
    return s;
}

Eigen::MatrixXd zscore_apply(const Eigen::MatrixXd& m, const NormStats& stats) {
    if (m.cols() != stats.mean.size() || stats.mean.size() != stats.std.size()) {
        throw DataError("zscore_apply: matrix has " + std::to_string(m.cols()) + " columns, stats have " +
                        std::to_string(stats.mean.size()));
    }
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (stats.std(j) < kZeroVarianceThreshold) {
            out.col(j).setZero();
        } else {
            out.col(j) = (m.col(j).array() - stats.mean(j)) / stats.std(j);
        }
    }
    return out;
}

FeatureMatrix zscore_apply(const FeatureMatrix& m, const NormStats& stats) {
    FeatureMatrix out;
    out.values = zscore_apply(m.values, stats);
    out.row_ids = m.row_ids;
    out.layers = m.layers;
    out.all_layers = m.all_layers;
    return out;
}

}  // namespace gramprobe::featurestore
