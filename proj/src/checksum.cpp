#include "gramprobe/checksum.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "gramprobe/error.hpp"

namespace gramprobe {

std::string Fnv1a64::hex() const {
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(state_));
    return std::string("fnv1a64:") + buf.data();
}

std::string checksum_bytes(std::string_view bytes) {
    Fnv1a64 h;
    h.update(bytes);
    return h.hex();
}

std::string checksum_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    Fnv1a64 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
    }
    return h.hex();
}

}  // namespace gramprobe
