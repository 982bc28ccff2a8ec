#include "mlsgan/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mlsgan/action_code.hpp"
#include "mlsgan/ops.hpp"

namespace mlsgan {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::MlsGan: return "mls_gan";
        case Variant::GGfuAblated: return "g_gfu_ablated";
        case Variant::GSupervised: return "g_supervised";
        case Variant::CganNoGfuNoScene: return "cgan_no_gfu_no_scene";
        case Variant::CganGfu: return "cgan_gfu";
        case Variant::MlsGanNoScene: return "mls_gan_no_scene";
    }
    return "mls_gan";
}

Variant variant_from_string(const std::string& s) {
    for (Variant v : all_variants()) {
        if (to_string(v) == s) return v;
    }
    throw ContractError("unknown variant '" + s + "'");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> variants = {
        Variant::MlsGan,  Variant::GGfuAblated, Variant::GSupervised,
        Variant::CganNoGfuNoScene, Variant::CganGfu, Variant::MlsGanNoScene,
    };
    return variants;
}

bool is_supervised(Variant v) {
    return v == Variant::GGfuAblated || v == Variant::GSupervised;
}

bool has_gfu(Variant v) {
    return v == Variant::MlsGan || v == Variant::GSupervised || v == Variant::MlsGanNoScene;
}

namespace {

bool has_scene_stream(Variant v) {
    return v != Variant::CganNoGfuNoScene && v != Variant::MlsGanNoScene;
}

}  // namespace

std::vector<Tensor> ModelAssembly::parameters() const {
    std::vector<Tensor> params = gen.parameters();
    if (disc) {
        for (const Tensor& p : disc->parameters()) params.push_back(p);
    }
    if (cls_head) {
        for (const Tensor& p : cls_head->parameters()) params.push_back(p);
    }
    return params;
}

std::vector<Tensor> ModelAssembly::gen_side_parameters() const {
    std::vector<Tensor> params = gen.parameters();
    if (cls_head) {
        for (const Tensor& p : cls_head->parameters()) params.push_back(p);
    }
    return params;
}

ModelAssembly build_variant(Variant variant, const ModelConfig& cfg, Rng& init_rng) {
    ModelAssembly model;
    model.variant = variant;
    model.cfg = cfg;
    model.gen = GeneratorParams::make(cfg, has_gfu(variant), has_scene_stream(variant), init_rng);
    if (is_supervised(variant)) {
        model.cls_head = DenseLayer::init(cfg.classes, cfg.classes, Activation::Softmax, init_rng,
                                          "cls_head");
    } else {
        model.disc = DiscriminatorParams::make(cfg, init_rng);
    }
    return model;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ContractError("TrainConfig: epochs must be >= 1");
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw ContractError("TrainConfig: batch_size must be even and >= 2 "
                            "(half-real/half-fake discriminator batches)");
    }
    if (lambda_c < 0.0) throw ContractError("TrainConfig: lambda_c must be >= 0");
    if (!(lr > 0.0)) throw ContractError("TrainConfig: lr must be positive");
    if (eval_every < 1) throw ContractError("TrainConfig: eval_every must be >= 1");
    if (lr_drop_epoch < 0) throw ContractError("TrainConfig: lr_drop_epoch must be >= 0");
}

AdamSchedule TrainConfig::schedule() const {
    const int total = start_epoch + epochs;
    if (lr_drop_epoch > 0) {
        return {lr, lr_drop_epoch, lr / 10.0, total - lr_drop_epoch};
    }
    return AdamSchedule::quarter_drop(lr, total);
}

Trainer::Trainer(ModelAssembly& model, const TrainConfig& config, const Dataset& train_set,
                 const Dataset& test_set)
    : model_(model),
      config_(config),
      test_set_(test_set),
      gen_opt_(AdamState::init(std::vector<Tensor>{}, {})),
      z_rng_(derive_seed(config.seed, "z")),
      shuffle_rng_(derive_seed(config.seed, "shuffle")) {
    config_.validate();
    if (train_set.samples.empty()) {
        throw ContractError("Trainer: empty training set");
    }
    if (train_set.k_group != model.cfg.classes) {
        throw ContractError("Trainer: dataset has " + std::to_string(train_set.k_group) +
                            " classes, model expects " + std::to_string(model.cfg.classes));
    }
    for (const SceneSample& s : train_set.samples) {
        train_padded_.push_back(pad_dummy(s, model.cfg.n_agents));
        train_labels_.push_back(s.group_label);
    }
    std::vector<Tensor> gen_params = model_.gen_side_parameters();
    gen_opt_ = AdamState::init(gen_params, config_.schedule());
    if (model_.disc) {
        disc_opt_ = AdamState::init(model_.disc->parameters(), config_.schedule());
    }
}

Tensor Trainer::sample_z_batch(int batch) {
    Tensor zs = Tensor::zeros({batch, model_.cfg.z_dim});
    for (double& v : zs.data()) v = z_rng_.normal();
    return zs;
}

void Trainer::maybe_inject_nan(std::span<const Tensor> params) {
    if (config_.debug_inject_nan_at_step >= 0 &&
        steps_total_ == config_.debug_inject_nan_at_step && !params.empty()) {
        Tensor p = params[0];
        const_cast<Tensor&>(p).zero_grad();
        p.ptr()->ensure_grad();
        p.ptr()->grad[0] = std::nan("");
    }
}

double Trainer::d_step(std::span<const int> batch, int epoch) {
    if (!model_.disc) {
        throw ContractError("d_step: variant has no discriminator");
    }
    const int half = static_cast<int>(batch.size()) / 2;
    if (half < 1 || batch.size() % 2 != 0) {
        throw ContractError("d_step: batch must be even and >= 2");
    }
    std::vector<Tensor> gen_params = model_.gen.parameters();
    std::vector<Tensor> disc_params = model_.disc->parameters();

    // Fake codes come from a plain (no-tape) generator pass; no gradient
    // flows into G during the D step.
    std::vector<SceneSample> fake_samples;
    std::vector<int> fake_ids(batch.begin() + half, batch.end());
    for (int id : fake_ids) fake_samples.push_back(train_padded_[static_cast<std::size_t>(id)]);
    Tensor zs = sample_z_batch(half);
    Tensor fake_codes = generator_forward_batch(model_.gen, fake_samples, zs).clone();

    std::vector<SceneSample> real_samples;
    std::vector<int> real_labels;
    Tensor real_codes = Tensor::zeros({half, model_.cfg.classes});
    for (int i = 0; i < half; ++i) {
        const int id = batch[static_cast<std::size_t>(i)];
        real_samples.push_back(train_padded_[static_cast<std::size_t>(id)]);
        real_labels.push_back(train_labels_[static_cast<std::size_t>(id)]);
        Tensor gt = ground_truth_internal(train_labels_[static_cast<std::size_t>(id)], model_.cfg.classes);
        for (int j = 0; j < model_.cfg.classes; ++j) real_codes(i, j) = gt(j);
    }

    set_requires_grad(disc_params, true);
    zero_grads(disc_params);
    double loss_value = 0.0;
    {
        Tape tape;
        DiscriminatorOut on_real = discriminator_forward_batch(*model_.disc, real_samples, real_codes);
        DiscriminatorOut on_fake = discriminator_forward_batch(*model_.disc, fake_samples, fake_codes);
        Tensor loss = d_loss(on_real.p_real, on_fake.p_real, on_real.class_probs, real_labels,
                             config_.lambda_c);
        loss_value = loss.value();
        if (std::isnan(loss_value)) {
            throw TrainingError("d_step: NaN loss at epoch " + std::to_string(epoch));
        }
        tape.backward(loss);
    }
    maybe_inject_nan(disc_params);
    adam_step(*disc_opt_, disc_params, epoch);
    steps_total_ += 1;
    d_steps_ += 1;
    return loss_value;
}

double Trainer::g_step(std::span<const int> batch, int epoch) {
    if (!model_.disc) {
        throw ContractError("g_step: variant has no discriminator");
    }
    std::vector<Tensor> gen_params = model_.gen.parameters();
    std::vector<Tensor> disc_params = model_.disc->parameters();

    std::vector<SceneSample> samples;
    std::vector<int> labels;
    for (int id : batch) {
        samples.push_back(train_padded_[static_cast<std::size_t>(id)]);
        labels.push_back(train_labels_[static_cast<std::size_t>(id)]);
    }
    Tensor zs = sample_z_batch(static_cast<int>(batch.size()));

    // D frozen: no gradient accumulates into its parameters, though the
    // gradient still flows through D into the generated codes.
    set_requires_grad(disc_params, false);
    set_requires_grad(gen_params, true);
    zero_grads(gen_params);
    double loss_value = 0.0;
    {
        Tape tape;
        Tensor codes = generator_forward_batch(model_.gen, samples, zs);
        DiscriminatorOut on_fake = discriminator_forward_batch(*model_.disc, samples, codes);
        Tensor loss = g_loss(on_fake.p_real, on_fake.class_probs, labels, config_.lambda_c,
                             config_.non_saturating, config_.g_class_term);
        loss_value = loss.value();
        if (std::isnan(loss_value)) {
            throw TrainingError("g_step: NaN loss at epoch " + std::to_string(epoch));
        }
        tape.backward(loss);
    }
    set_requires_grad(disc_params, true);
    maybe_inject_nan(gen_params);
    adam_step(gen_opt_, gen_params, epoch);
    steps_total_ += 1;
    g_steps_ += 1;
    return loss_value;
}

double Trainer::supervised_step(std::span<const int> batch, int epoch) {
    if (!model_.cls_head) {
        throw ContractError("supervised_step: variant has no softmax head");
    }
    std::vector<SceneSample> samples;
    std::vector<int> labels;
    for (int id : batch) {
        samples.push_back(train_padded_[static_cast<std::size_t>(id)]);
        labels.push_back(train_labels_[static_cast<std::size_t>(id)]);
    }
    Tensor zs = Tensor::zeros({static_cast<int>(batch.size()), model_.cfg.z_dim});

    std::vector<Tensor> params = model_.gen_side_parameters();
    set_requires_grad(params, true);
    zero_grads(params);
    double loss_value = 0.0;
    {
        Tape tape;
        Tensor codes = generator_forward_batch(model_.gen, samples, zs);
        Tensor probs = dense_forward(*model_.cls_head, codes);
        Tensor loss = categorical_ce_loss(probs, labels);
        loss_value = loss.value();
        if (std::isnan(loss_value)) {
            throw TrainingError("supervised_step: NaN loss at epoch " + std::to_string(epoch));
        }
        tape.backward(loss);
    }
    maybe_inject_nan(params);
    adam_step(gen_opt_, params, epoch);
    steps_total_ += 1;
    g_steps_ += 1;
    return loss_value;
}

TrainSummary Trainer::run() {
    const int n = static_cast<int>(train_padded_.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    TrainSummary summary;
    MetricsReport latest;
    latest.mca = 0.0;
    latest.mpca = 0.0;
    bool have_eval = false;

    const int first = config_.start_epoch;
    const int last = config_.start_epoch + config_.epochs;
    for (int epoch = first; epoch < last; ++epoch) {
        shuffle_rng_.shuffle(order);
        double d_total = 0.0, g_total = 0.0;
        int batches = 0;
        for (int start = 0; start + config_.batch_size <= n; start += config_.batch_size) {
            std::span<const int> batch(order.data() + start, static_cast<std::size_t>(config_.batch_size));
            try {
                if (is_supervised(config_.variant)) {
                    g_total += supervised_step(batch, epoch);
                } else {
                    d_total += d_step(batch, epoch);
                    g_total += g_step(batch, epoch);
                }
            } catch (const TrainingError& e) {
                throw TrainingError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batches) + ")");
            } catch (const NumericError& e) {
                throw TrainingError(std::string("numeric abort: ") + e.what() + " (epoch " +
                                    std::to_string(epoch) + ", batch " + std::to_string(batches) +
                                    ")");
            }
            batches += 1;
        }
        const bool eval_now = ((epoch - first) % config_.eval_every == 0) || epoch + 1 == last;
        if (eval_now) {
            latest = evaluate(model_, test_set_, config_.infer_z_samples, config_.seed);
            have_eval = true;
        }
        EpochRow row;
        row.epoch = epoch;
        row.d_loss = batches > 0 ? d_total / batches : 0.0;
        row.g_loss = batches > 0 ? g_total / batches : 0.0;
        row.mca = latest.mca;
        row.mpca = latest.mpca;
        summary.report.history.push_back(row);
        summary.epochs_run += 1;
        if (config_.on_epoch) config_.on_epoch(row);
        if (config_.stop_at_mca > 0.0 && have_eval && latest.mca >= config_.stop_at_mca) {
            break;
        }
    }
    if (!have_eval) {
        latest = evaluate(model_, test_set_, config_.infer_z_samples, config_.seed);
    }
    summary.report.confusion = latest.confusion;
    summary.report.mca = latest.mca;
    summary.report.mpca = latest.mpca;
    summary.d_steps = d_steps_;
    summary.g_steps = g_steps_;
    return summary;
}

TrainSummary train(ModelAssembly& model, const TrainConfig& config, const Dataset& train_set,
                   const Dataset& test_set) {
    Trainer trainer(model, config, train_set, test_set);
    return trainer.run();
}

namespace {

std::vector<double> class_probabilities(const ModelAssembly& model, const SceneSample& padded,
                                        const Tensor& z) {
    GeneratorInput input = make_generator_input(padded, z);
    Tensor code = generator_forward(model.gen, input);
    Tensor probs = is_supervised(model.variant)
                       ? dense_forward(*model.cls_head, code)
                       : discriminator_forward(*model.disc, padded.scene_seq, code).class_probs;
    return probs.data();
}

}  // namespace

int classify(const ModelAssembly& model, const SceneSample& sample, int z_samples,
             std::uint64_t z_seed) {
    if (!model.disc && !model.cls_head) {
        throw ContractError("classify: model has neither discriminator nor softmax head");
    }
    SceneSample padded = pad_dummy(sample, model.cfg.n_agents);
    std::vector<double> probs;
    if (z_samples <= 0 || is_supervised(model.variant)) {
        // z at its distribution mean: deterministic inference.
        probs = class_probabilities(model, padded, Tensor::zeros({model.cfg.z_dim}));
    } else {
        Rng rng(derive_seed(z_seed, "infer_z"));
        probs.assign(static_cast<std::size_t>(model.cfg.classes), 0.0);
        for (int s = 0; s < z_samples; ++s) {
            Tensor z = Tensor::zeros({model.cfg.z_dim});
            for (double& v : z.data()) v = rng.normal();
            std::vector<double> p = class_probabilities(model, padded, z);
            for (std::size_t i = 0; i < probs.size(); ++i) probs[i] += p[i];
        }
    }
    int best = 0;
    for (int i = 1; i < static_cast<int>(probs.size()); ++i) {
        if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
}

MetricsReport evaluate(const ModelAssembly& model, const Dataset& dataset, int z_samples,
                       std::uint64_t z_seed) {
    MetricsReport report;
    report.confusion = make_confusion(model.cfg.classes);
    for (const SceneSample& s : dataset.samples) {
        count_prediction(report.confusion, s.group_label, classify(model, s, z_samples, z_seed));
    }
    report.mca = mca(report.confusion);
    report.mpca = mpca(report.confusion);
    return report;
}

namespace {

std::vector<double> snapshot(std::span<const Tensor> params) {
    std::vector<double> flat;
    for (const Tensor& p : params) flat.insert(flat.end(), p.data().begin(), p.data().end());
    return flat;
}

}  // namespace

MetricsReport probe_codes(const ModelAssembly& trained, const Dataset& train_set,
                          const Dataset& test_set, const ProbeConfig& config) {
    std::vector<Tensor> frozen = trained.parameters();
    const std::vector<double> before = snapshot(frozen);
    set_requires_grad(frozen, false);

    // Codes are generated once, with z at its mean.
    auto codes_of = [&](const Dataset& ds) {
        std::vector<Tensor> codes;
        Tensor z = Tensor::zeros({trained.cfg.z_dim});
        for (const SceneSample& s : ds.samples) {
            GeneratorInput input = make_generator_input(pad_dummy(s, trained.cfg.n_agents), z);
            codes.push_back(generator_forward(trained.gen, input));
        }
        return codes;
    };
    std::vector<Tensor> train_codes = codes_of(train_set);
    std::vector<Tensor> test_codes = codes_of(test_set);

    const int k = trained.cfg.classes;
    Rng rng(derive_seed(config.seed, "probe_init"));
    DenseLayer probe = DenseLayer::init(k, k, Activation::Softmax, rng, "probe");
    std::vector<Tensor> probe_params = probe.parameters();
    AdamState opt = AdamState::init(probe_params, AdamSchedule::constant(config.lr));

    const int n = static_cast<int>(train_codes.size());
    Tensor x = Tensor::zeros({n, k});
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) x(i, j) = train_codes[static_cast<std::size_t>(i)](j);
        labels.push_back(train_set.samples[static_cast<std::size_t>(i)].group_label);
    }
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        zero_grads(probe_params);
        Tape tape;
        Tensor loss = categorical_ce_loss(dense_forward(probe, x), labels);
        tape.backward(loss);
        adam_step(opt, probe_params, epoch);
    }

    const std::vector<double> after = snapshot(frozen);
    set_requires_grad(frozen, true);
    if (before != after) {
        throw ContractError("probe_codes: frozen generator weights changed during probe training");
    }

    MetricsReport report;
    report.confusion = make_confusion(k);
    for (std::size_t i = 0; i < test_codes.size(); ++i) {
        Tensor probs = dense_forward(probe, test_codes[i]);
        int best = 0;
        for (int j = 1; j < k; ++j) {
            if (probs(j) > probs(best)) best = j;
        }
        count_prediction(report.confusion, test_set.samples[i].group_label, best);
    }
    report.mca = mca(report.confusion);
    report.mpca = mpca(report.confusion);
    return report;
}

std::vector<SlotGateStats> gate_attention_report(const ModelAssembly& model,
                                                 const Dataset& dataset) {
    if (!model.gen.use_gfu) {
        throw ContractError("gate_attention_report: variant " + to_string(model.variant) +
                            " has no gated fusion unit");
    }
    const int slots = model.gen.stream_count();
    std::vector<SlotGateStats> stats(static_cast<std::size_t>(slots));
    for (int s = 0; s < slots; ++s) stats[static_cast<std::size_t>(s)].slot = s;

    Tensor z = Tensor::zeros({model.cfg.z_dim});
    for (const SceneSample& raw : dataset.samples) {
        SceneSample padded = pad_dummy(raw, model.cfg.n_agents);
        GeneratorInput input = make_generator_input(padded, z);
        std::vector<Tensor> streams = generator_streams(model.gen, input);
        Tensor gates = gate_activations(*model.gen.gfu, streams);
        for (int s = 0; s < slots; ++s) {
            double total = 0.0;
            for (int f = 0; f < model.cfg.fused_dim(); ++f) total += gates(s, f);
            const double slot_mean = total / model.cfg.fused_dim();
            const bool present =
                s >= model.cfg.n_agents || padded.presence_mask[static_cast<std::size_t>(s)];
            SlotGateStats& entry = stats[static_cast<std::size_t>(s)];
            if (present) {
                entry.mean_present += slot_mean;
                entry.n_present += 1;
            } else {
                entry.mean_dummy += slot_mean;
                entry.n_dummy += 1;
            }
        }
    }
    for (SlotGateStats& entry : stats) {
        if (entry.n_present > 0) entry.mean_present /= static_cast<double>(entry.n_present);
        if (entry.n_dummy > 0) entry.mean_dummy /= static_cast<double>(entry.n_dummy);
    }
    return stats;
}

}  // namespace mlsgan
