#include "mlsgan/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mlsgan {

namespace {
constexpr const char* kMagic = "MLSGANCKPT1";
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    os << kMagic << "\n";
    os << "meta " << checkpoint.meta.size() << "\n";
    for (const auto& [key, value] : checkpoint.meta) {
        if (key.find_first_of(" \n") != std::string::npos ||
            value.find('\n') != std::string::npos) {
            throw ContractError("checkpoint meta keys must be atoms and values single-line");
        }
        os << key << " " << value << "\n";
    }
    os << "params " << checkpoint.params.size() << "\n";
    char buf[40];
    for (const auto& [name, tensor] : checkpoint.params) {
        os << name << " " << tensor.rank();
        for (int d : tensor.shape()) os << " " << d;
        os << "\n";
        const std::vector<double>& data = tensor.data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", data[i]);
            os << (i ? " " : "") << buf;
        }
        os << "\n";
    }
    if (!os) {
        throw IoError("write to '" + path + "' failed");
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open '" + path + "'");
    }
    std::string magic;
    if (!std::getline(is, magic) || magic != kMagic) {
        throw ParseError("'" + path + "': not a checkpoint file");
    }
    Checkpoint ckpt;
    std::string tag;
    std::size_t count = 0;
    if (!(is >> tag >> count) || tag != "meta") {
        throw ParseError("'" + path + "': bad meta header");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::string key, value;
        if (!(is >> key >> std::ws) || !std::getline(is, value)) {
            throw ParseError("'" + path + "': truncated meta");
        }
        ckpt.meta[key] = value;
    }
    if (!(is >> tag >> count) || tag != "params") {
        throw ParseError("'" + path + "': bad params header");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::string name;
        int rank = 0;
        if (!(is >> name >> rank) || rank < 0 || rank > 8) {
            throw ParseError("'" + path + "': bad parameter header at index " + std::to_string(i));
        }
        std::vector<int> shape(static_cast<std::size_t>(rank));
        std::size_t numel = 1;
        for (int& d : shape) {
            if (!(is >> d) || d < 0) {
                throw ParseError("'" + path + "': bad shape for '" + name + "'");
            }
            numel *= static_cast<std::size_t>(d);
        }
        std::vector<double> data(numel);
        for (double& v : data) {
            if (!(is >> v)) {
                throw ParseError("'" + path + "': truncated values for '" + name + "'");
            }
        }
        Tensor t = Tensor::from(shape, std::move(data));
        t.set_name(name);
        ckpt.params.emplace_back(name, t);
    }
    return ckpt;
}

void apply_checkpoint(const Checkpoint& checkpoint, std::span<const Tensor> live_params) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, tensor] : checkpoint.params) by_name[name] = &tensor;
    for (const Tensor& live : live_params) {
        auto it = by_name.find(live.name());
        if (it == by_name.end()) {
            throw FormatError("checkpoint is missing parameter '" + live.name() + "'");
        }
        if (it->second->shape() != live.shape()) {
            throw FormatError("checkpoint parameter '" + live.name() + "' has shape " +
                              shape_str(it->second->shape()) + ", model expects " +
                              shape_str(live.shape()));
        }
        const_cast<Tensor&>(live).data() = it->second->data();
    }
}

}  // namespace mlsgan
