#include "manifest.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#ifndef WLHMM_VERSION
#define WLHMM_VERSION "unknown"
#endif

namespace wlhmm::cli {

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 unavailable");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

void Manifest::input(const std::filesystem::path& path)
{
    inputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

nlohmann::json Manifest::to_json() const
{
    nlohmann::json j{{"command", command_},
                     {"version", WLHMM_VERSION},
                     {"inputs", inputs_},
                     {"outputs", outputs_},
                     {"parameters", params_}};
    j["seed"] = seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr);
    return j;
}

void Manifest::write(const std::filesystem::path& primary) const
{
    const auto path = primary.string() + ".manifest.json";
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << to_json().dump(2) << '\n';
}

}  // namespace wlhmm::cli
