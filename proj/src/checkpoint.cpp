#include "vlm/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace vlm {

using nlohmann::json;

static_assert(sizeof(float) == 4, "checkpoint format assumes 4-byte floats");

namespace {

bool is_little_endian() {
    const uint32_t probe = 1;
    return *reinterpret_cast<const unsigned char*>(&probe) == 1;
}

json read_manifest(const std::string& base_path) {
    std::ifstream in(base_path + ".json");
    if (!in) throw IoError("cannot open checkpoint manifest " + base_path + ".json");
    json m;
    in >> m;
    return m;
}

} // namespace

void save_checkpoint(const ParamStore<float>& store, const std::string& base_path) {
    if (!is_little_endian()) throw IoError("checkpoint format requires a little-endian host");
    json manifest;
    manifest["format"] = "tilevlm-checkpoint-v1";
    manifest["blob"] = base_path.substr(base_path.find_last_of('/') + 1) + ".bin";
    json tensors = json::array();

    std::ofstream blob(base_path + ".bin", std::ios::binary);
    if (!blob) throw IoError("cannot open " + base_path + ".bin for writing");
    uint64_t offset = 0;
    for (const auto& p : store.params()) {
        json t;
        t["name"] = p.name;
        t["shape"] = p.tensor.shape();
        t["dtype"] = "f32";
        t["offset"] = offset;
        tensors.push_back(t);
        const auto& v = p.tensor.value();
        blob.write(reinterpret_cast<const char*>(v.data()),
                   static_cast<std::streamsize>(v.size() * sizeof(float)));
        offset += v.size() * sizeof(float);
    }
    if (!blob) throw IoError("write failed for " + base_path + ".bin");
    manifest["tensors"] = tensors;
    manifest["total_bytes"] = offset;

    std::ofstream mf(base_path + ".json");
    if (!mf) throw IoError("cannot open " + base_path + ".json for writing");
    mf << manifest.dump(2) << "\n";
    if (!mf) throw IoError("write failed for " + base_path + ".json");
}

void load_checkpoint(ParamStore<float>& store, const std::string& base_path) {
    if (!is_little_endian()) throw IoError("checkpoint format requires a little-endian host");
    json manifest = read_manifest(base_path);
    std::ifstream blob(base_path + ".bin", std::ios::binary);
    if (!blob) throw IoError("cannot open checkpoint blob " + base_path + ".bin");

    for (const auto& t : manifest.at("tensors")) {
        std::string name = t.at("name");
        std::vector<int> shape = t.at("shape").get<std::vector<int>>();
        uint64_t offset = t.at("offset");
        if (t.at("dtype") != "f32") throw IoError("checkpoint tensor " + name + " has unsupported dtype");
        auto& p = store.at(name);
        if (p.tensor.shape() != shape)
            throw ShapeError("checkpoint tensor " + name + " has shape " + shape_str(shape) +
                             ", model expects " + shape_str(p.tensor.shape()));
        auto& v = p.tensor.value_mut();
        blob.seekg(static_cast<std::streamoff>(offset));
        blob.read(reinterpret_cast<char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(float)));
        if (!blob) throw IoError("checkpoint blob too short for tensor " + name);
    }
}

std::string describe_checkpoint(const std::string& base_path) {
    json manifest = read_manifest(base_path);
    return manifest.dump(2);
}

} // namespace vlm
