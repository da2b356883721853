#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gramprobe/dataset.hpp"
#include "gramprobe/error.hpp"

namespace gramprobe::dataset {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json opt(const std::optional<std::string>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<std::string> get_opt(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "";
}

Split split_from_string(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "test") return Split::Test;
    throw DataError("unknown split '" + std::string(s) + "'");
}

std::string to_jsonl_line(const LabeledSentence& s) {
    ordered_json j;
    j["id"] = s.id;
    j["text"] = s.text;
    j["label"] = s.label;
    j["pair_id"] = opt(s.pair_id);
    j["group"] = opt(s.group);
    j["split"] = std::string(to_string(s.split));
    j["language"] = s.language;
    j["perturbation"] = s.perturbation ? ordered_json(std::string(to_string(*s.perturbation))) : ordered_json(nullptr);
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void write_jsonl(std::ostream& out, const Dataset& data) {
    for (const auto& s : data) out << to_jsonl_line(s) << '\n';
}

void write_jsonl(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_jsonl(out, data);
}

Dataset read_jsonl(std::istream& in) {
    Dataset data;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            LabeledSentence s;
            s.id = j.at("id").get<std::string>();
            s.text = j.at("text").get<std::string>();
            s.label = j.at("label").get<int>();
            s.pair_id = get_opt(j, "pair_id");
            s.group = get_opt(j, "group");
            s.split = split_from_string(j.value("split", std::string("test")));
            s.language = j.value("language", std::string("en"));
            if (auto p = get_opt(j, "perturbation")) s.perturbation = perturbation_from_string(*p);
            if (s.label != 0 && s.label != 1) throw DataError("label must be 0 or 1");
            data.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    validate(data);
    return data;
}

Dataset read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read dataset " + path.string());
    return read_jsonl(in);
}

void validate(const Dataset& data) {
    std::set<std::string_view> ids;
    std::map<std::string_view, std::vector<const LabeledSentence*>> pairs;
    for (const auto& s : data) {
        if (!ids.insert(s.id).second) throw DataError("duplicate sentence id '" + s.id + "'");
        if (s.pair_id) pairs[*s.pair_id].push_back(&s);
    }
    for (const auto& [pid, members] : pairs) {
        if (members.size() != 2 || members[0]->label == members[1]->label) {
            throw DataError("pair '" + std::string(pid) + "' must have exactly two members with opposite labels");
        }
    }
}

}  // namespace gramprobe::dataset
