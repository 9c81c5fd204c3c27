#include "xdctrl/manifest.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "xdctrl/common.hpp"

namespace xdctrl
{

namespace
{

struct Digest
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

    Digest()
    {
        if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
            throw Error("sha256: digest initialisation failed");
    }
    void update(const void* data, std::size_t len)
    {
        if (EVP_DigestUpdate(ctx.get(), data, len) != 1)
            throw Error("sha256: digest update failed");
    }
    std::string hex()
    {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
            throw Error("sha256: digest finalisation failed");
        std::ostringstream os;
        for (unsigned i = 0; i < len; ++i)
            os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
        return os.str();
    }
};

} // namespace

std::string sha256_hex(const std::string& data)
{
    Digest d;
    d.update(data.data(), data.size());
    return d.hex();
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    Digest d;
    char buf[1 << 16];
    while (in)
    {
        in.read(buf, sizeof(buf));
        if (in.gcount() > 0)
            d.update(buf, static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

std::string RunManifest::config_hash() const
{
    return sha256_hex(config.dump());
}

nlohmann::json RunManifest::to_json(const std::filesystem::path& base) const
{
    nlohmann::json files = nlohmann::json::array();
    for (const auto& p : outputs)
    {
        std::filesystem::path rel = p.lexically_relative(base);
        if (rel.empty() || rel.native().starts_with(".."))
            rel = p;
        files.push_back({{"path", rel.generic_string()}, {"sha256", sha256_file(p)}});
    }
    return {{"command", command},
            {"config", config},
            {"config_hash", config_hash()},
            {"seed", seed},
            {"versions", {{"xdctrl", version_string}}},
            {"outputs", files},
            {"timestamps", {{"started", started}, {"finished", finished}}}};
}

void RunManifest::write(const std::filesystem::path& path) const
{
    const auto j = to_json(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

VerifyResult verify_manifest(const std::filesystem::path& manifest)
{
    std::ifstream in(manifest);
    if (!in)
        throw ConfigError("cannot open " + manifest.string());
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(manifest.string() + ": " + e.what());
    }
    VerifyResult r;
    const auto base = manifest.parent_path();
    for (const auto& f : j.at("outputs"))
    {
        std::filesystem::path p = f.at("path").get<std::string>();
        if (p.is_relative())
            p = base / p;
        ++r.checked;
        if (!std::filesystem::exists(p))
        {
            r.missing.push_back(p.string());
            continue;
        }
        if (sha256_file(p) != f.at("sha256").get<std::string>())
            r.mismatched.push_back(p.string());
    }
    return r;
}

} // namespace xdctrl
