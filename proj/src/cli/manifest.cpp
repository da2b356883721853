#include <fstream>

#include <nlohmann/json.hpp>

#include "gramprobe/cli.hpp"
#include "gramprobe/error.hpp"

namespace gramprobe::cli {

namespace {

nlohmann::ordered_json digests_to_json(const std::vector<FileDigest>& files) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : files) arr.push_back({{"path", f.path}, {"checksum", f.checksum}});
    return arr;
}

std::vector<FileDigest> digests_from_json(const nlohmann::json& arr) {
    std::vector<FileDigest> out;
    for (const auto& f : arr) out.push_back({f.at("path").get<std::string>(), f.at("checksum").get<std::string>()});
    return out;
}

}  // namespace

std::string manifest_path(const std::filesystem::path& primary_output) {
    return primary_output.string() + ".manifest.json";
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["config_checksum"] = m.config_checksum;
    j["inputs"] = digests_to_json(m.inputs);
    j["seed"] = m.seed;
    j["toolkit_version"] = m.toolkit_version;
    j["wall_clock_seconds"] = m.wall_clock_seconds;
    j["outputs"] = digests_to_json(m.outputs);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read manifest " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.config_checksum = j.at("config_checksum").get<std::string>();
        m.inputs = digests_from_json(j.at("inputs"));
        m.seed = j.at("seed").get<std::uint64_t>();
        m.toolkit_version = j.at("toolkit_version").get<std::string>();
        m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
        m.outputs = digests_from_json(j.at("outputs"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest " + path.string() + ": " + e.what());
    }
}

}  // namespace gramprobe::cli
