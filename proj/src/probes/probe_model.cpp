#include <fstream>

#include "gramprobe/error.hpp"
#include "gramprobe/probe_model.hpp"
#include "gramprobe/probes.hpp"
#include "gramprobe/solvers.hpp"

namespace gramprobe::probes {
namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string_view to_string(ProbeKind k) {
    switch (k) {
        case ProbeKind::LogisticL2: return "logistic_l2";
        case ProbeKind::Lasso: return "lasso";
        case ProbeKind::Ridge: return "ridge";
    }
    return "";
}

ProbeKind probe_kind_from_string(std::string_view s) {
    if (s == "logistic_l2") return ProbeKind::LogisticL2;
    if (s == "lasso") return ProbeKind::Lasso;
    if (s == "ridge") return ProbeKind::Ridge;
    throw DataError("unknown probe kind '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const ProbeModel& m) {
    nlohmann::ordered_json j;
    j["schema_version"] = ProbeModel::kSchemaVersion;
    j["kind"] = std::string(to_string(m.kind));
    j["weights"] = to_vec(m.weights);
    j["bias"] = m.bias;
    j["alpha_or_lambda"] = m.alpha_or_lambda;
    if (m.all_layers) {
        j["layer_provenance"] = "all-layers";
    } else {
        j["layer_provenance"] = m.layers;
    }
    j["neuron_indices"] = m.neuron_indices ? nlohmann::ordered_json(*m.neuron_indices) : nlohmann::ordered_json(nullptr);
    j["logprob_feature"] = m.logprob_feature;
    j["norm_stats"] = {{"mean", to_vec(m.norm.mean)}, {"std", to_vec(m.norm.std)}, {"fit_count", m.norm.fit_count}};
    j["trained_on"] = m.trained_on;
    return j;
}

ProbeModel probe_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != ProbeModel::kSchemaVersion) {
            throw DataError("unsupported probe schema_version");
        }
        ProbeModel m;
        m.kind = probe_kind_from_string(j.at("kind").get<std::string>());
        m.weights = from_vec(j.at("weights").get<std::vector<double>>());
        m.bias = j.at("bias").get<double>();
        m.alpha_or_lambda = j.at("alpha_or_lambda").get<double>();
        const auto& prov = j.at("layer_provenance");
        if (prov.is_string()) {
            if (prov.get<std::string>() != "all-layers") throw DataError("layer_provenance must be a list or \"all-layers\"");
            m.all_layers = true;
        } else {
            m.layers = prov.get<std::vector<int>>();
        }
        if (auto it = j.find("neuron_indices"); it != j.end() && !it->is_null()) {
            m.neuron_indices = it->get<std::vector<std::size_t>>();
        }
        m.logprob_feature = j.value("logprob_feature", false);
        const auto& ns = j.at("norm_stats");
        m.norm.mean = from_vec(ns.at("mean").get<std::vector<double>>());
        m.norm.std = from_vec(ns.at("std").get<std::vector<double>>());
        m.norm.fit_count = ns.value("fit_count", std::size_t{0});
        m.trained_on = j.value("trained_on", std::string());
        if (m.norm.mean.size() != m.weights.size() || m.norm.std.size() != m.weights.size()) {
            throw DataError("probe norm_stats size does not match weights");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed probe model: ") + e.what());
    }
}

void save_probe_model(const ProbeModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json(m).dump(2) << '\n';
}

ProbeModel load_probe_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read probe model " + path.string());
    try {
        return probe_model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("probe model " + path.string() + ": " + e.what());
    }
}

featurestore::FeatureMatrix model_features(const ProbeModel& m, const featurestore::FeatureDump& dump) {
    featurestore::FeatureMatrix f;
    if (m.all_layers || m.layers.size() != 1) {
        if (!m.all_layers) throw DataError("probe models over several explicit layers are not supported");
        f = featurestore::concat_layers(dump);
    } else {
        f = featurestore::select_layer(dump, static_cast<std::size_t>(m.layers.front()));
    }
    if (m.neuron_indices) f = featurestore::select_columns(f, *m.neuron_indices);
    if (m.logprob_feature) f = augment_with_logprob(f, dump);
    if (f.cols() != m.weights.size()) {
        throw DataError("dump yields " + std::to_string(f.cols()) + " features, probe expects " +
                        std::to_string(m.weights.size()));
    }
    return f;
}

Eigen::VectorXd model_scores(const ProbeModel& m, const Eigen::MatrixXd& raw_features) {
    const Eigen::MatrixXd z = featurestore::zscore_apply(raw_features, m.norm);
    Eigen::VectorXd s = z * m.weights;
    s.array() += m.bias;
    if (m.kind != ProbeKind::Ridge) s = s.unaryExpr([](double v) { return solvers::sigmoid(v); });
    return s;
}

}  // namespace gramprobe::probes
