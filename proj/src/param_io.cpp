#include "stockcast/param_io.hpp"

#include "stockcast/errors.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace stockcast {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix) {
    auto p = base;
    p += suffix;
    return p;
}

}  // namespace

std::string params_manifest(const ParamSet& params) {
    nlohmann::json tensors = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& [name, tensor] : params) {
        tensors.push_back({{"name", name}, {"shape", tensor.shape()}, {"offset", offset}});
        offset += tensor.size();
    }
    nlohmann::json manifest = {{"format", "stockcast-params"},
                               {"version", 1},
                               {"dtype", "float64-le"},
                               {"count", offset},
                               {"tensors", tensors}};
    return manifest.dump(2) + "\n";
}

void save_params(const ParamSet& params, const std::filesystem::path& base) {
    {
        std::ofstream bin(with_suffix(base, ".bin"), std::ios::binary | std::ios::trunc);
        if (!bin) throw FileNotFound("cannot write " + with_suffix(base, ".bin").string());
        for (const auto& entry : params) {
            const Tensor& t = entry.second;
            bin.write(reinterpret_cast<const char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        }
    }
    std::ofstream manifest(with_suffix(base, ".json"), std::ios::trunc);
    if (!manifest) throw FileNotFound("cannot write " + with_suffix(base, ".json").string());
    manifest << params_manifest(params);
}

ParamSet load_params(const std::filesystem::path& base) {
    std::ifstream manifest_in(with_suffix(base, ".json"));
    if (!manifest_in) throw FileNotFound("missing checkpoint manifest " + with_suffix(base, ".json").string());
    std::ifstream bin(with_suffix(base, ".bin"), std::ios::binary);
    if (!bin) throw FileNotFound("missing checkpoint blob " + with_suffix(base, ".bin").string());

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_in);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInput(std::string("checkpoint manifest: ") + e.what());
    }
    if (manifest.value("format", "") != "stockcast-params" || manifest.value("dtype", "") != "float64-le") {
        throw MalformedInput("checkpoint manifest has an unknown format");
    }

    std::vector<char> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    ParamSet params;
    std::size_t expected_offset = 0;
    for (const auto& entry : manifest.at("tensors")) {
        const auto shape = entry.at("shape").get<Shape>();
        const auto offset = entry.at("offset").get<std::size_t>();
        const std::size_t n = shape_size(shape);
        if (offset != expected_offset || (offset + n) * sizeof(double) > blob.size()) {
            throw MalformedInput("checkpoint tensor '" + entry.at("name").get<std::string>() + "' is out of range");
        }
        std::vector<double> data(n);
        std::memcpy(data.data(), blob.data() + offset * sizeof(double), n * sizeof(double));
        params.add(entry.at("name").get<std::string>(), Tensor(shape, std::move(data)));
        expected_offset += n;
    }
    if (expected_offset * sizeof(double) != blob.size()) {
        throw MalformedInput("checkpoint blob size does not match its manifest");
    }
    return params;
}

}  // namespace stockcast
