#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace gramprobe {

// 64-bit FNV-1a. Used for dataset/config/output fingerprints, not for security.
class Fnv1a64 {
public:
    void update(std::string_view bytes) noexcept {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
    }
    std::uint64_t value() const noexcept { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string checksum_bytes(std::string_view bytes);
std::string checksum_file(const std::filesystem::path& path);

}  // namespace gramprobe
