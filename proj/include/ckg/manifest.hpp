#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ckg {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct FileRecord {
    std::string role;  // e.g. "train", "model", "stdout"
    std::string path;
    std::string sha256;

    friend bool operator==(const FileRecord&, const FileRecord&) = default;
};

/// Everything needed to rerun a command: its arguments, resolved configuration,
/// and checksums of what it read and wrote.
struct RunManifest {
    std::string command;
    std::vector<std::string> args;  // command line after the program name
    std::vector<std::pair<std::string, std::string>> config;
    std::optional<std::uint64_t> seed;
    std::vector<FileRecord> inputs;
    std::vector<FileRecord> outputs;
    double duration_seconds = 0.0;
    std::string status;  // "ok" or "failed"
    std::string tool_version{kToolVersion};

    friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Key-value text, one "key<TAB>value..." line per entry. Tabs, newlines and
/// backslashes inside values are escaped as \t, \n and \\.
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace ckg
