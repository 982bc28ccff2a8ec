#include <benchmark/benchmark.h>

#include "mlsgan/gan.hpp"
#include "mlsgan/ops.hpp"
#include "mlsgan/train.hpp"

using namespace mlsgan;

namespace {

ModelConfig paper_scale_config() {
    ModelConfig cfg;
    cfg.n_agents = 12;
    cfg.time_steps = 10;
    cfg.feature_dim = 8;
    cfg.classes = 8;
    cfg.hidden = 300;
    cfg.z_dim = 16;
    cfg.fused = 300;
    return cfg;
}

SceneSample make_sample(const ModelConfig& cfg, Rng& rng) {
    SceneSample s;
    for (int n = 0; n < cfg.n_agents; ++n) {
        Tensor seq = Tensor::zeros({cfg.time_steps, cfg.feature_dim});
        for (double& v : seq.data()) v = rng.normal();
        s.person_seqs.push_back(seq);
        s.presence_mask.push_back(true);
    }
    Tensor scene = Tensor::zeros({cfg.time_steps, cfg.feature_dim});
    for (double& v : scene.data()) v = rng.normal();
    s.scene_seq = scene;
    return s;
}

void BM_LstmStepBatch(benchmark::State& state) {
    const int hidden = static_cast<int>(state.range(0));
    Rng rng(1);
    LSTMCell cell = LSTMCell::init(8, hidden, rng, "bench");
    Tensor x = Tensor::zeros({32, 8});
    Tensor h = Tensor::zeros({32, hidden});
    Tensor c = Tensor::zeros({32, hidden});
    for (double& v : x.data()) v = rng.normal();
    for (auto _ : state) {
        auto [h2, c2] = lstm_step(cell, x, h, c);
        benchmark::DoNotOptimize(h2.data().data());
    }
}
BENCHMARK(BM_LstmStepBatch)->Arg(32)->Arg(300);

void BM_GfuForward(benchmark::State& state) {
    const int streams = static_cast<int>(state.range(0));
    const int width = 300;
    Rng rng(2);
    GatedFusionUnit unit =
        GatedFusionUnit::init(std::vector<int>(static_cast<std::size_t>(streams), width), width,
                              rng, "bench");
    std::vector<Tensor> zs;
    for (int n = 0; n < streams; ++n) {
        Tensor z = Tensor::zeros({width});
        for (double& v : z.data()) v = rng.normal();
        zs.push_back(z);
    }
    for (auto _ : state) {
        Tensor c = gfu_forward(unit, zs);
        benchmark::DoNotOptimize(c.data().data());
    }
}
BENCHMARK(BM_GfuForward)->Arg(2)->Arg(13);

void BM_GeneratorInference(benchmark::State& state) {
    ModelConfig cfg = paper_scale_config();
    Rng rng(3);
    GeneratorParams gen = GeneratorParams::make(cfg, true, true, rng);
    SceneSample sample = make_sample(cfg, rng);
    Tensor z = Tensor::zeros({cfg.z_dim});
    GeneratorInput input = make_generator_input(sample, z);
    for (auto _ : state) {
        Tensor code = generator_forward(gen, input);
        benchmark::DoNotOptimize(code.data().data());
    }
}
BENCHMARK(BM_GeneratorInference);

void BM_ClassifyEndToEnd(benchmark::State& state) {
    ModelConfig cfg = paper_scale_config();
    Rng rng(4);
    ModelAssembly model = build_variant(Variant::MlsGan, cfg, rng);
    SceneSample sample = make_sample(cfg, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(classify(model, sample));
    }
}
BENCHMARK(BM_ClassifyEndToEnd);

}  // namespace

BENCHMARK_MAIN();
