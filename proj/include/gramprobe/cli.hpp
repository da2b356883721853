#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace gramprobe::cli {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Stable process exit codes.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Parses and runs one command. Never throws; errors are reported on `err`
/// and mapped to an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests: argv[0] is supplied.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct FileDigest {
    std::string path;
    std::string checksum;
};

/// Reproducibility record written next to every command's primary output.
struct RunManifest {
    std::string command;
    std::string config_checksum;  ///< over the effective option values
    std::vector<FileDigest> inputs;
    std::uint64_t seed = 0;
    std::string toolkit_version = kToolkitVersion;
    double wall_clock_seconds = 0.0;
    std::vector<FileDigest> outputs;
};

std::string manifest_path(const std::filesystem::path& primary_output);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace gramprobe::cli
