#include "green/manifest.hpp"

#include "green/core.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

namespace green {

std::string RunManifest::to_json() const
{
    nlohmann::json j;
    j["command"] = command;
    j["seed"] = seed;
    j["input_digests"] = input_digests;
    j["parameters"] = parameters;
    j["tool_version"] = tool_version;
    return j.dump(2) + "\n";
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot read '" + path.string() + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest initialization failed");
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount())) != 1)
            throw Error("sha256: digest update failed");
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        throw Error("sha256: digest finalization failed");
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", md[i]);
        hex += byte;
    }
    return hex;
}

std::filesystem::path manifest_path(const std::filesystem::path& output)
{
    return output.string() + ".manifest.json";
}

void write_manifest(const std::filesystem::path& output, const RunManifest& manifest)
{
    std::ofstream out(manifest_path(output), std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError("cannot write manifest for '" + output.string() + "'");
    out << manifest.to_json();
}

} // namespace green
