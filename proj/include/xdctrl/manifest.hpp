#ifndef XDCTRL_MANIFEST_HPP
#define XDCTRL_MANIFEST_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace xdctrl
{

inline constexpr const char* version_string = "0.1.0";

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

/// Record of one command invocation. Output paths are stored relative to
/// the manifest directory when possible.
struct RunManifest
{
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::filesystem::path> outputs;

    /// SHA-256 of the canonical (sorted-key, compact) config dump.
    std::string config_hash() const;
    nlohmann::json to_json(const std::filesystem::path& base) const;
    void write(const std::filesystem::path& path) const;
};

/// UTC time as ISO 8601.
std::string utc_timestamp();

struct VerifyResult
{
    std::size_t checked = 0;
    std::vector<std::string> mismatched;
    std::vector<std::string> missing;
    bool ok() const { return mismatched.empty() && missing.empty(); }
};

/// Re-hashes every output listed in a manifest.
VerifyResult verify_manifest(const std::filesystem::path& manifest);

} // namespace xdctrl

#endif // XDCTRL_MANIFEST_HPP
