#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "gramprobe/error.hpp"
#include "gramprobe/featurestore.hpp"

namespace gramprobe::featurestore {
namespace {

constexpr char kMagic[4] = {'G', 'P', 'D', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_str(std::string& out, std::string_view s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t offset() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ == bytes_.size(); }

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated ") + what, pos_);
    }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(bytes_[pos_ + i])} << (8 * i);
        pos_ += 4;
        return v;
    }

    std::string str(const char* what) {
        const std::uint32_t len = u32(what);
        need(len, what);
        std::string s(bytes_.substr(pos_, len));
        pos_ += len;
        return s;
    }

    void floats(std::vector<float>& out, std::uint64_t count, const char* what) {
        if (count > (bytes_.size() - pos_) / 4) throw FormatError(std::string("truncated ") + what, pos_);
        out.resize(count);
        for (std::uint64_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(u32(what));
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::uint64_t hidden_count(const FeatureDump& d, std::uint64_t n_tokens) {
    const std::uint64_t per = std::uint64_t{d.n_layers} * d.hidden_dim;
    if (d.mode == DumpMode::LastToken) return per;
    if (per != 0 && n_tokens > ~std::uint64_t{0} / per) return ~std::uint64_t{0};
    return per * n_tokens;
}

}  // namespace

std::string_view to_string(DumpMode m) { return m == DumpMode::PerToken ? "per_token" : "last_token"; }

std::span<const float> FeatureDump::last_token_state(std::size_t record, std::size_t layer) const {
    const auto& r = records.at(record);
    if (layer >= n_layers) throw DataError("layer " + std::to_string(layer) + " out of range");
    if (mode == DumpMode::LastToken) {
        return std::span<const float>(r.hidden).subspan(layer * hidden_dim, hidden_dim);
    }
    if (r.n_tokens() == 0) throw DataError("record '" + r.id + "' has no tokens");
    return token_state(record, r.n_tokens() - 1, layer);
}

std::span<const float> FeatureDump::token_state(std::size_t record, std::size_t t, std::size_t layer) const {
    if (mode != DumpMode::PerToken) throw DataError("per-token states require a per_token dump");
    const auto& r = records.at(record);
    if (t >= r.n_tokens() || layer >= n_layers) throw DataError("token/layer index out of range");
    const std::size_t offset = (t * n_layers + layer) * hidden_dim;
    return std::span<const float>(r.hidden).subspan(offset, hidden_dim);
}

std::size_t FeatureDump::find(std::string_view id) const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].id == id) return i;
    }
    throw DataError("id '" + std::string(id) + "' not present in dump");
}

void FeatureDump::validate() const {
    std::unordered_set<std::string_view> ids;
    for (const auto& r : records) {
        if (!ids.insert(r.id).second) throw DataError("duplicate id '" + r.id + "' in dump");
        if (r.n_tokens() == 0) throw DataError("record '" + r.id + "' has no tokens");
        if (r.hidden.size() != hidden_count(*this, r.n_tokens())) {
            throw DataError("record '" + r.id + "' hidden payload size does not match mode/L/D/T");
        }
        for (float v : r.hidden) {
            if (!std::isfinite(v)) throw DataError("record '" + r.id + "' has a non-finite hidden value");
        }
        for (float v : r.logprobs) {
            if (!std::isfinite(v) || v > 0.0f) throw DataError("record '" + r.id + "' has a logprob that is not finite and <= 0");
        }
    }
}

std::string encode_dump(const FeatureDump& dump) {
    dump.validate();
    std::string out(kMagic, 4);
    put_u32(out, kFormatVersion);
    out.push_back(static_cast<char>(dump.mode));
    put_u32(out, static_cast<std::uint32_t>(dump.records.size()));
    put_u32(out, dump.n_layers);
    put_u32(out, dump.hidden_dim);
    put_str(out, dump.model_name);
    for (const auto& r : dump.records) {
        put_str(out, r.id);
        put_u32(out, r.n_tokens());
        for (float v : r.hidden) put_f32(out, v);
        for (float v : r.logprobs) put_f32(out, v);
    }
    return out;
}

FeatureDump decode_dump(std::string_view bytes) {
    Reader in(bytes);
    in.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected GPD1", 0);
    for (int i = 0; i < 4; ++i) in.u8("magic");

    const std::uint64_t version_at = in.offset();
    if (const auto version = in.u32("version"); version != kFormatVersion) {
        throw FormatError("unsupported version " + std::to_string(version), version_at);
    }
    FeatureDump dump;
    const std::uint64_t mode_at = in.offset();
    const std::uint8_t mode = in.u8("mode");
    if (mode > 1) throw FormatError("unknown mode " + std::to_string(mode), mode_at);
    dump.mode = static_cast<DumpMode>(mode);
    const std::uint32_t n = in.u32("n_sentences");
    dump.n_layers = in.u32("n_layers");
    dump.hidden_dim = in.u32("hidden_dim");
    dump.model_name = in.str("model name");

    dump.records.reserve(std::min<std::uint64_t>(n, bytes.size() / 12));
    for (std::uint32_t i = 0; i < n; ++i) {
        SentenceRecord r;
        r.id = in.str("sentence id");
        const std::uint32_t t = in.u32("token count");
        in.floats(r.hidden, hidden_count(dump, t), "hidden-state payload");
        in.floats(r.logprobs, t, "token logprobs");
        dump.records.push_back(std::move(r));
    }
    if (!in.at_end()) throw FormatError("trailing bytes after last record", in.offset());
    dump.validate();
    return dump;
}

void write_dump(const FeatureDump& dump, const std::filesystem::path& path) {
    const std::string bytes = encode_dump(dump);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + path.string());
}

FeatureDump read_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read dump " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_dump(bytes);
}

}  // namespace gramprobe::featurestore
