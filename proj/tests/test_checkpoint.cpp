#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mlsgan/checkpoint.hpp"
#include "mlsgan/train.hpp"

using namespace mlsgan;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("mlsgan_ckpt_" + name)).string();
}

std::vector<double> flatten(std::span<const Tensor> params) {
    std::vector<double> flat;
    for (const Tensor& p : params) flat.insert(flat.end(), p.data().begin(), p.data().end());
    return flat;
}

ModelConfig tiny_model() {
    ModelConfig cfg;
    cfg.n_agents = 2;
    cfg.time_steps = 3;
    cfg.feature_dim = 2;
    cfg.classes = 2;
    cfg.hidden = 4;
    cfg.z_dim = 2;
    cfg.fused = 4;
    return cfg;
}

}  // namespace

TEST_CASE("checkpoint round-trips every variant's parameters exactly") {
    const std::string path = temp_path("roundtrip.ckpt");
    for (Variant v : all_variants()) {
        ModelConfig cfg = tiny_model();
        Rng rng(3);
        ModelAssembly model = build_variant(v, cfg, rng);

        Checkpoint ckpt;
        ckpt.meta["variant"] = to_string(v);
        ckpt.meta["epoch"] = "7";
        for (const Tensor& p : model.parameters()) ckpt.params.emplace_back(p.name(), p);
        save_checkpoint(ckpt, path);

        Checkpoint loaded = load_checkpoint(path);
        CHECK(loaded.meta.at("variant") == to_string(v));
        CHECK(loaded.meta.at("epoch") == "7");

        Rng rng2(99);  // different init; apply must overwrite it completely
        ModelAssembly fresh = build_variant(v, cfg, rng2);
        apply_checkpoint(loaded, fresh.parameters());
        CHECK(flatten(fresh.parameters()) == flatten(model.parameters()));
    }
    std::remove(path.c_str());
}

TEST_CASE("checkpoint errors: missing param, wrong shape, bad file") {
    ModelConfig cfg = tiny_model();
    Rng rng(5);
    ModelAssembly model = build_variant(Variant::MlsGan, cfg, rng);

    Checkpoint partial;
    for (const Tensor& p : model.gen.parameters()) partial.params.emplace_back(p.name(), p);
    CHECK_THROWS_AS(apply_checkpoint(partial, model.parameters()), FormatError);

    Checkpoint wrong;
    for (const Tensor& p : model.parameters()) wrong.params.emplace_back(p.name(), p);
    wrong.params[0].second = Tensor::zeros({1, 1});
    CHECK_THROWS_AS(apply_checkpoint(wrong, model.parameters()), FormatError);

    const std::string garbage = temp_path("garbage.ckpt");
    {
        std::ofstream os(garbage);
        os << "not a checkpoint\n";
    }
    CHECK_THROWS_AS(load_checkpoint(garbage), ParseError);
    std::remove(garbage.c_str());
    CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), IoError);
}

TEST_CASE("checkpoint files are byte-identical across saves") {
    ModelConfig cfg = tiny_model();
    Rng rng(7);
    ModelAssembly model = build_variant(Variant::MlsGan, cfg, rng);
    Checkpoint ckpt;
    ckpt.meta["epoch"] = "3";
    for (const Tensor& p : model.parameters()) ckpt.params.emplace_back(p.name(), p);

    const std::string p1 = temp_path("bytes1.ckpt");
    const std::string p2 = temp_path("bytes2.ckpt");
    save_checkpoint(ckpt, p1);
    save_checkpoint(ckpt, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(!s1.empty());
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}
