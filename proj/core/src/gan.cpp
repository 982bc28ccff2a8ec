#include "mlsgan/gan.hpp"

#include <string>

#include "mlsgan/ops.hpp"

namespace mlsgan {

void ModelConfig::validate() const {
    if (n_agents < 1 || time_steps < 1 || feature_dim < 1 || classes < 1) {
        throw ContractError("ModelConfig: n_agents, time_steps, feature_dim, classes must be >= 1");
    }
    if (hidden < 1 || z_dim < 0 || fused < 0) {
        throw ContractError("ModelConfig: hidden must be >= 1 and z_dim/fused >= 0");
    }
}

GeneratorInput make_generator_input(const SceneSample& padded, Tensor z) {
    GeneratorInput input;
    input.person_seqs = padded.person_seqs;
    input.scene_seq = padded.scene_seq;
    input.presence_mask = padded.presence_mask;
    input.z = std::move(z);
    return input;
}

GeneratorParams GeneratorParams::make(const ModelConfig& cfg, bool use_gfu, bool use_scene,
                                      Rng& rng) {
    cfg.validate();
    GeneratorParams g;
    g.cfg = cfg;
    g.use_gfu = use_gfu;
    g.use_scene = use_scene;
    for (int n = 0; n < cfg.n_agents; ++n) {
        g.person_cells.push_back(
            LSTMCell::init(cfg.feature_dim, cfg.hidden, rng, "gen.person" + std::to_string(n)));
    }
    if (use_scene) {
        g.scene_cell = LSTMCell::init(cfg.feature_dim, cfg.hidden, rng, "gen.scene");
    }
    const int m = g.stream_count();
    const int fused = cfg.fused_dim();
    if (use_gfu) {
        g.gfu = GatedFusionUnit::init(std::vector<int>(static_cast<std::size_t>(m), cfg.hidden),
                                      fused, rng, "gen.gfu");
    } else {
        g.fuse_dense = DenseLayer::init(m * cfg.hidden, fused, Activation::Tanh, rng, "gen.fuse");
    }
    g.out = DenseLayer::init(fused + cfg.z_dim, cfg.classes, Activation::Sigmoid, rng, "gen.out");
    return g;
}

std::vector<Tensor> GeneratorParams::parameters() const {
    std::vector<Tensor> params;
    for (const LSTMCell& cell : person_cells)
        for (const Tensor& p : cell.parameters()) params.push_back(p);
    if (scene_cell)
        for (const Tensor& p : scene_cell->parameters()) params.push_back(p);
    if (gfu)
        for (const Tensor& p : gfu->parameters()) params.push_back(p);
    if (fuse_dense)
        for (const Tensor& p : fuse_dense->parameters()) params.push_back(p);
    for (const Tensor& p : out.parameters()) params.push_back(p);
    return params;
}

namespace {

void check_generator_input(const GeneratorParams& params, const GeneratorInput& input) {
    const ModelConfig& cfg = params.cfg;
    if (static_cast<int>(input.person_seqs.size()) != cfg.n_agents) {
        throw DimensionError("generator_forward: expected " + std::to_string(cfg.n_agents) +
                             " person slots, got " + std::to_string(input.person_seqs.size()));
    }
    for (const Tensor& seq : input.person_seqs) {
        if (seq.rank() != 2 || seq.dim(0) != cfg.time_steps || seq.dim(1) != cfg.feature_dim) {
            throw DimensionError("generator_forward: person sequence shape " +
                                 shape_str(seq.shape()) + " does not match [T x d]");
        }
    }
    if (input.scene_seq.rank() != 2 || input.scene_seq.dim(0) != cfg.time_steps ||
        input.scene_seq.dim(1) != cfg.feature_dim) {
        throw DimensionError("generator_forward: scene sequence shape " +
                             shape_str(input.scene_seq.shape()) + " does not match [T x d]");
    }
    if (input.z.numel() != cfg.z_dim) {
        throw DimensionError("generator_forward: z has " + std::to_string(input.z.numel()) +
                             " elements, expected " + std::to_string(cfg.z_dim));
    }
}

Tensor fuse_and_output(const GeneratorParams& params, std::span<const Tensor> streams,
                       const Tensor& z, int axis) {
    Tensor fused = params.use_gfu ? gfu_forward(*params.gfu, streams)
                                  : dense_forward(*params.fuse_dense, concat(streams, axis));
    Tensor with_z = params.cfg.z_dim > 0
                        ? [&] {
                              const Tensor parts[2] = {fused, z};
                              return concat(std::span<const Tensor>(parts, 2), axis);
                          }()
                        : fused;
    return dense_forward(params.out, with_z);
}

}  // namespace

std::vector<Tensor> generator_streams(const GeneratorParams& params, const GeneratorInput& input) {
    check_generator_input(params, input);
    std::vector<Tensor> streams;
    for (int n = 0; n < params.cfg.n_agents; ++n) {
        streams.push_back(
            lstm_encode(params.person_cells[static_cast<std::size_t>(n)], input.person_seqs[static_cast<std::size_t>(n)]));
    }
    if (params.use_scene) {
        streams.push_back(lstm_encode(*params.scene_cell, input.scene_seq));
    }
    return streams;
}

Tensor generator_forward(const GeneratorParams& params, const GeneratorInput& input) {
    std::vector<Tensor> streams = generator_streams(params, input);
    return fuse_and_output(params, streams, input.z, 0);
}

Tensor generator_forward_batch(const GeneratorParams& params, std::span<const SceneSample> padded,
                               const Tensor& zs) {
    const ModelConfig& cfg = params.cfg;
    const int batch = static_cast<int>(padded.size());
    if (batch == 0) {
        throw ContractError("generator_forward_batch: empty batch");
    }
    if (zs.rank() != 2 || zs.dim(0) != batch || zs.dim(1) != cfg.z_dim) {
        throw DimensionError("generator_forward_batch: z batch shape " + shape_str(zs.shape()) +
                             " does not match [B x z_dim]");
    }
    for (const SceneSample& s : padded) {
        if (static_cast<int>(s.person_seqs.size()) != cfg.n_agents) {
            throw DimensionError("generator_forward_batch: sample has " +
                                 std::to_string(s.person_seqs.size()) + " slots, expected " +
                                 std::to_string(cfg.n_agents));
        }
    }

    // Gather batched per-step inputs per stream: steps[t] is [B x d].
    auto gather_steps = [&](auto&& seq_of) {
        std::vector<Tensor> steps;
        for (int t = 0; t < cfg.time_steps; ++t) {
            Tensor x = Tensor::zeros({batch, cfg.feature_dim});
            for (int b = 0; b < batch; ++b) {
                const Tensor& seq = seq_of(padded[static_cast<std::size_t>(b)]);
                for (int j = 0; j < cfg.feature_dim; ++j) x(b, j) = seq(t, j);
            }
            steps.push_back(x);
        }
        return steps;
    };

    std::vector<Tensor> streams;
    for (int n = 0; n < cfg.n_agents; ++n) {
        std::vector<Tensor> steps =
            gather_steps([n](const SceneSample& s) -> const Tensor& { return s.person_seqs[static_cast<std::size_t>(n)]; });
        streams.push_back(lstm_encode_steps(params.person_cells[static_cast<std::size_t>(n)], steps));
    }
    if (params.use_scene) {
        std::vector<Tensor> steps =
            gather_steps([](const SceneSample& s) -> const Tensor& { return s.scene_seq; });
        streams.push_back(lstm_encode_steps(*params.scene_cell, steps));
    }
    return fuse_and_output(params, streams, zs, 1);
}

DiscriminatorParams DiscriminatorParams::make(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    DiscriminatorParams d;
    d.cfg = cfg;
    const int fused = cfg.fused_dim();
    d.scene_cell = LSTMCell::init(cfg.feature_dim, cfg.hidden, rng, "disc.scene");
    d.code_embed = DenseLayer::init(cfg.classes, fused, Activation::Tanh, rng, "disc.embed");
    d.gfu = GatedFusionUnit::init({fused, cfg.hidden}, fused, rng, "disc.gfu");
    d.adv_head = DenseLayer::init(fused, 1, Activation::Sigmoid, rng, "disc.adv");
    d.cls_head = DenseLayer::init(fused, cfg.classes, Activation::Softmax, rng, "disc.cls");
    return d;
}

std::vector<Tensor> DiscriminatorParams::parameters() const {
    std::vector<Tensor> params;
    for (const Tensor& p : scene_cell.parameters()) params.push_back(p);
    for (const Tensor& p : code_embed.parameters()) params.push_back(p);
    for (const Tensor& p : gfu.parameters()) params.push_back(p);
    for (const Tensor& p : adv_head.parameters()) params.push_back(p);
    for (const Tensor& p : cls_head.parameters()) params.push_back(p);
    return params;
}

namespace {

DiscriminatorOut discriminator_heads(const DiscriminatorParams& params, const Tensor& scene_enc,
                                     const Tensor& code) {
    Tensor code_emb = dense_forward(params.code_embed, code);
    Tensor fused = gfu_pair_forward(params.gfu, code_emb, scene_enc);
    DiscriminatorOut out;
    out.p_real = dense_forward(params.adv_head, fused);
    out.class_probs = dense_forward(params.cls_head, fused);
    return out;
}

}  // namespace

DiscriminatorOut discriminator_forward(const DiscriminatorParams& params, const Tensor& scene_seq,
                                       const Tensor& code) {
    if (code.rank() != 1 || code.dim(0) != params.cfg.classes) {
        throw DimensionError("discriminator_forward: code shape " + shape_str(code.shape()) +
                             " does not match [k]");
    }
    Tensor scene_enc = lstm_encode(params.scene_cell, scene_seq);
    return discriminator_heads(params, scene_enc, code);
}

DiscriminatorOut discriminator_forward_batch(const DiscriminatorParams& params,
                                             std::span<const SceneSample> samples,
                                             const Tensor& codes) {
    const ModelConfig& cfg = params.cfg;
    const int batch = static_cast<int>(samples.size());
    if (batch == 0) {
        throw ContractError("discriminator_forward_batch: empty batch");
    }
    if (codes.rank() != 2 || codes.dim(0) != batch || codes.dim(1) != cfg.classes) {
        throw DimensionError("discriminator_forward_batch: codes shape " +
                             shape_str(codes.shape()) + " does not match [B x k]");
    }
    std::vector<Tensor> steps;
    for (int t = 0; t < cfg.time_steps; ++t) {
        Tensor x = Tensor::zeros({batch, cfg.feature_dim});
        for (int b = 0; b < batch; ++b)
            for (int j = 0; j < cfg.feature_dim; ++j) x(b, j) = samples[static_cast<std::size_t>(b)].scene_seq(t, j);
        steps.push_back(x);
    }
    Tensor scene_enc = lstm_encode_steps(params.scene_cell, steps);
    return discriminator_heads(params, scene_enc, codes);
}

Tensor d_loss(const Tensor& p_real_on_real, const Tensor& p_real_on_fake,
              const Tensor& class_probs_real, std::span<const int> labels, double lambda_c) {
    Tensor adv = add(bce_loss(p_real_on_real, 1), bce_loss(p_real_on_fake, 0));
    if (lambda_c == 0.0) return adv;
    return add(adv, scale(categorical_ce_loss(class_probs_real, labels), lambda_c));
}

Tensor g_loss(const Tensor& p_real_on_fake, const Tensor& class_probs_fake,
              std::span<const int> labels, double lambda_c, bool non_saturating,
              bool class_term) {
    Tensor adv = non_saturating
                     ? bce_loss(p_real_on_fake, 1)
                     : [&] {  // literal minimax surrogate: minimize log(1 - D(fake))
                           Tensor pc = clamp(p_real_on_fake, kProbClamp, 1.0 - kProbClamp);
                           Tensor ones = Tensor::full(p_real_on_fake.shape(), 1.0);
                           return mean(log(sub(ones, pc)));
                       }();
    if (lambda_c == 0.0 || !class_term) return adv;
    return add(adv, scale(categorical_ce_loss(class_probs_fake, labels), lambda_c));
}

}  // namespace mlsgan
