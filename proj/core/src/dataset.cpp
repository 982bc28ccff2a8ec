#include "mlsgan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mlsgan/rng.hpp"

namespace mlsgan {

int SceneSample::real_agents() const {
    int n = 0;
    for (bool p : presence_mask) n += p ? 1 : 0;
    return n;
}

std::vector<long long> Dataset::class_histogram() const {
    std::vector<long long> hist(static_cast<std::size_t>(k_group), 0);
    for (const SceneSample& s : samples) hist[static_cast<std::size_t>(s.group_label)] += 1;
    return hist;
}

std::string to_string(LabelingRule r) {
    return r == LabelingRule::Majority ? "majority" : "key_agent";
}

LabelingRule labeling_rule_from_string(const std::string& s) {
    if (s == "majority") return LabelingRule::Majority;
    if (s == "key_agent") return LabelingRule::KeyAgent;
    throw ContractError("unknown labeling rule '" + s + "'");
}

void SyntheticConfig::validate() const {
    if (k_group < 1) throw ContractError("SyntheticConfig: k_group must be >= 1");
    if (k_ind != 0 && k_ind < k_group) {
        throw ContractError("SyntheticConfig: k_ind must be 0 (same as k_group) or >= k_group");
    }
    if (n_slots < 1 || time_steps < 1 || feature_dim < 1) {
        throw ContractError("SyntheticConfig: n_slots, time_steps, feature_dim must be >= 1");
    }
    if (agents_min < 1 || agents_min > agents_max) {
        throw ContractError("SyntheticConfig: need 1 <= agents_min <= agents_max");
    }
    if (agents_max > n_slots) {
        throw ContractError("SyntheticConfig: agents_max (" + std::to_string(agents_max) +
                            ") must be <= n_slots (" + std::to_string(n_slots) + ")");
    }
    if (noise_std < 0.0) throw ContractError("SyntheticConfig: noise_std must be >= 0");
    if (scene_context < 0.0) throw ContractError("SyntheticConfig: scene_context must be >= 0");
    if (transition_prob < 0.0 || transition_prob > 1.0) {
        throw ContractError("SyntheticConfig: transition_prob must be in [0, 1]");
    }
    if (!class_weights.empty()) {
        if (static_cast<int>(class_weights.size()) != k_group) {
            throw ContractError("SyntheticConfig: class_weights must have k_group entries");
        }
        double total = 0.0;
        for (double w : class_weights) {
            if (w < 0.0) throw ContractError("SyntheticConfig: class_weights must be >= 0");
            total += w;
        }
        if (total <= 0.0) throw ContractError("SyntheticConfig: class_weights sum to zero");
    }
    if (sample_count < 1) throw ContractError("SyntheticConfig: sample_count must be >= 1");
}

int majority_label(std::span<const int> labels) {
    if (labels.empty()) {
        throw ContractError("majority_label: empty label set");
    }
    std::map<int, int> counts;
    for (int l : labels) counts[l] += 1;
    int best = labels[0];
    int best_count = 0;
    for (const auto& [label, count] : counts) {  // ascending label order -> ties pick lowest
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

namespace {

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

int draw_class(Rng& rng, const std::vector<double>& weights, int k) {
    if (weights.empty()) return rng.uniform_int(k);
    double total = 0.0;
    for (double w : weights) total += w;
    double u = rng.uniform() * total;
    for (int c = 0; c < k; ++c) {
        u -= weights[static_cast<std::size_t>(c)];
        if (u < 0.0) return c;
    }
    return k - 1;
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& config) {
    config.validate();
    const int k_ind = config.k_ind == 0 ? config.k_group : config.k_ind;
    const int t_steps = config.time_steps;
    const int d = config.feature_dim;

    // Fixed per-action anchor trajectories, shared by the whole dataset.
    Rng anchor_rng(derive_seed(config.seed, "anchors"));
    std::vector<std::vector<double>> anchors(static_cast<std::size_t>(k_ind));
    for (int c = 0; c < k_ind; ++c) {
        anchors[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(t_steps * d));
        for (double& v : anchors[static_cast<std::size_t>(c)]) {
            v = f32(config.class_separation * anchor_rng.normal());
        }
    }
    // Per-group-class scene context trajectories (zero when disabled).
    Rng context_rng(derive_seed(config.seed, "scene_context"));
    std::vector<std::vector<double>> contexts(static_cast<std::size_t>(config.k_group));
    for (int c = 0; c < config.k_group; ++c) {
        contexts[static_cast<std::size_t>(c)].assign(static_cast<std::size_t>(t_steps * d), 0.0);
        for (double& v : contexts[static_cast<std::size_t>(c)]) {
            v = f32(config.scene_context * config.class_separation * context_rng.normal());
        }
    }

    Dataset dataset;
    dataset.n_slots = config.n_slots;
    dataset.time_steps = t_steps;
    dataset.feature_dim = d;
    dataset.k_group = config.k_group;
    dataset.k_ind = k_ind;
    dataset.samples.reserve(static_cast<std::size_t>(config.sample_count));

    for (int si = 0; si < config.sample_count; ++si) {
        // Per-sample derived seed: generation order never affects content.
        Rng rng(derive_seed(config.seed, "sample", static_cast<std::uint64_t>(si)));
        const int agents = config.agents_min + rng.uniform_int(config.agents_max - config.agents_min + 1);
        const int dominant = draw_class(rng, config.class_weights, config.k_group);

        // Assign actions so the dominant class holds a strict majority
        // (or sits in the key-agent slot under that rule).
        std::vector<int> actions(static_cast<std::size_t>(agents));
        if (config.labeling == LabelingRule::Majority) {
            const int majority = agents / 2 + 1;
            std::vector<int> order(static_cast<std::size_t>(agents));
            for (int a = 0; a < agents; ++a) order[static_cast<std::size_t>(a)] = a;
            rng.shuffle(order);
            for (int a = 0; a < agents; ++a) {
                actions[static_cast<std::size_t>(order[static_cast<std::size_t>(a)])] =
                    a < majority ? dominant : rng.uniform_int(k_ind);
            }
        } else {
            actions[0] = dominant;
            for (int a = 1; a < agents; ++a) actions[static_cast<std::size_t>(a)] = rng.uniform_int(k_ind);
        }

        SceneSample sample;
        std::vector<double> scene_acc(static_cast<std::size_t>(t_steps * d), 0.0);
        for (int a = 0; a < agents; ++a) {
            const int action = actions[static_cast<std::size_t>(a)];
            int post_action = action;
            int switch_step = t_steps;  // no transition
            if (config.transition_prob > 0.0 && rng.uniform() < config.transition_prob &&
                k_ind > 1) {
                post_action = rng.uniform_int(k_ind - 1);
                if (post_action >= action) post_action += 1;
                const int lo = (t_steps + 1) / 2;
                switch_step = t_steps > lo ? lo + rng.uniform_int(t_steps - lo) : lo;
            }
            std::vector<double> seq(static_cast<std::size_t>(t_steps * d));
            for (int t = 0; t < t_steps; ++t) {
                const std::vector<double>& anchor =
                    anchors[static_cast<std::size_t>(t < switch_step ? action : post_action)];
                for (int j = 0; j < d; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(t * d + j);
                    seq[idx] = f32(anchor[idx] + config.noise_std * rng.normal());
                    scene_acc[idx] += seq[idx];
                }
            }
            sample.person_seqs.push_back(Tensor::from({t_steps, d}, std::move(seq)));
            sample.presence_mask.push_back(true);
            // The label is the pre-transition action.
            sample.individual_labels.push_back(action);
        }

        // The dominant class is the group label by construction (strict
        // majority, or the key agent's action), so the scene context can
        // be mixed in before the label is recomputed below.
        const std::vector<double>& context = contexts[static_cast<std::size_t>(dominant)];
        std::vector<double> scene(static_cast<std::size_t>(t_steps * d));
        for (std::size_t i = 0; i < scene.size(); ++i) {
            scene[i] = f32(scene_acc[i] / static_cast<double>(agents) + context[i] +
                           config.noise_std * rng.normal());
        }
        sample.scene_seq = Tensor::from({t_steps, d}, std::move(scene));
        sample.group_label = config.labeling == LabelingRule::Majority
                                 ? majority_label(sample.individual_labels)
                                 : sample.individual_labels[0];
        dataset.samples.push_back(std::move(sample));
    }
    return dataset;
}

SceneSample pad_dummy(const SceneSample& sample, int n_slots) {
    const int real = static_cast<int>(sample.person_seqs.size());
    if (real < 1) {
        throw ContractError("pad_dummy: sample has no real agents");
    }
    if (real > n_slots) {
        throw ContractError("pad_dummy: " + std::to_string(real) + " agents exceed " +
                            std::to_string(n_slots) + " slots");
    }
    SceneSample padded = sample;
    const int t_steps = sample.scene_seq.dim(0);
    const int d = sample.scene_seq.dim(1);
    for (int slot = real; slot < n_slots; ++slot) {
        padded.person_seqs.push_back(Tensor::zeros({t_steps, d}));
        padded.presence_mask.push_back(false);
    }
    return padded;
}

namespace {

constexpr char kBinaryMagic[9] = "MLSGANB1";
constexpr char kTextMagic[9] = "MLSGANT1";

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    buf[0] = static_cast<unsigned char>(v & 0xff);
    buf[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    buf[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    buf[3] = static_cast<unsigned char>((v >> 24) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
    unsigned char buf[4];
    if (!is.read(reinterpret_cast<char*>(buf), 4)) {
        throw ParseError(std::string("dataset file truncated while reading ") + what);
    }
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

void write_f32(std::ostream& os, double v) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(os, bits);
}

double read_f32(std::istream& is, const char* what) {
    std::uint32_t bits = read_u32(is, what);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

void write_seq_text(std::ostream& os, const Tensor& seq) {
    char buf[64];
    for (int t = 0; t < seq.dim(0); ++t) {
        for (int j = 0; j < seq.dim(1); ++j) {
            // %.9g round-trips float32-representable values exactly.
            std::snprintf(buf, sizeof buf, "%.9g", seq(t, j));
            os << (j ? " " : "") << buf;
        }
        os << "\n";
    }
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path, bool text) {
    std::ofstream os(path, text ? std::ios::out : (std::ios::out | std::ios::binary));
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    if (text) {
        os.write(kTextMagic, 8);
        os << "\n";
        os << dataset.n_slots << " " << dataset.time_steps << " " << dataset.feature_dim << " "
           << dataset.k_group << " " << dataset.k_ind << " " << dataset.samples.size() << "\n";
        for (const SceneSample& s : dataset.samples) {
            os << s.real_agents() << " " << s.group_label << "\n";
            for (std::size_t a = 0; a < s.individual_labels.size(); ++a) {
                os << (a ? " " : "") << s.individual_labels[a];
            }
            os << "\n";
            for (int a = 0; a < s.real_agents(); ++a) write_seq_text(os, s.person_seqs[static_cast<std::size_t>(a)]);
            write_seq_text(os, s.scene_seq);
        }
    } else {
        os.write(kBinaryMagic, 8);
        write_u32(os, static_cast<std::uint32_t>(dataset.n_slots));
        write_u32(os, static_cast<std::uint32_t>(dataset.time_steps));
        write_u32(os, static_cast<std::uint32_t>(dataset.feature_dim));
        write_u32(os, static_cast<std::uint32_t>(dataset.k_group));
        write_u32(os, static_cast<std::uint32_t>(dataset.k_ind));
        write_u32(os, static_cast<std::uint32_t>(dataset.samples.size()));
        for (const SceneSample& s : dataset.samples) {
            write_u32(os, static_cast<std::uint32_t>(s.real_agents()));
            write_u32(os, static_cast<std::uint32_t>(s.group_label));
            for (int l : s.individual_labels) write_u32(os, static_cast<std::uint32_t>(l));
            for (int a = 0; a < s.real_agents(); ++a) {
                for (double v : s.person_seqs[static_cast<std::size_t>(a)].data()) write_f32(os, v);
            }
            for (double v : s.scene_seq.data()) write_f32(os, v);
        }
    }
    if (!os) {
        throw IoError("write to '" + path + "' failed");
    }
}

namespace {

Dataset load_dataset_text(std::istream& is, const std::string& path) {
    Dataset ds;
    std::size_t count = 0;
    if (!(is >> ds.n_slots >> ds.time_steps >> ds.feature_dim >> ds.k_group >> ds.k_ind >> count)) {
        throw ParseError("'" + path + "': bad text header");
    }
    if (ds.n_slots < 1 || ds.time_steps < 1 || ds.feature_dim < 1 || ds.k_group < 1) {
        throw FormatError("'" + path + "': nonsensical header values");
    }
    for (std::size_t si = 0; si < count; ++si) {
        const std::string where = "'" + path + "' sample " + std::to_string(si);
        SceneSample s;
        int real = 0;
        if (!(is >> real >> s.group_label)) throw ParseError(where + ": truncated record");
        if (real < 1 || real > ds.n_slots) throw FormatError(where + ": agent count " + std::to_string(real) + " outside [1, n_slots]");
        if (s.group_label < 0 || s.group_label >= ds.k_group) {
            throw FormatError(where + ": group label " + std::to_string(s.group_label) +
                              " outside [0, " + std::to_string(ds.k_group) + ")");
        }
        s.individual_labels.resize(static_cast<std::size_t>(real));
        for (int& l : s.individual_labels) {
            if (!(is >> l)) throw ParseError(where + ": truncated labels");
            if (l < 0 || l >= ds.k_ind) throw FormatError(where + ": individual label out of range");
        }
        auto read_seq = [&]() {
            std::vector<double> vals(static_cast<std::size_t>(ds.time_steps * ds.feature_dim));
            for (double& v : vals) {
                if (!(is >> v)) throw ParseError(where + ": truncated sequence");
                if (!std::isfinite(v)) throw FormatError(where + ": non-finite feature");
                // Text features are float32 by contract; quantize so text
                // and binary loads agree bit-for-bit.
                v = static_cast<double>(static_cast<float>(v));
            }
            return Tensor::from({ds.time_steps, ds.feature_dim}, std::move(vals));
        };
        for (int a = 0; a < real; ++a) {
            s.person_seqs.push_back(read_seq());
            s.presence_mask.push_back(true);
        }
        s.scene_seq = read_seq();
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset load_dataset_binary(std::istream& is, const std::string& path) {
    Dataset ds;
    ds.n_slots = static_cast<int>(read_u32(is, "header"));
    ds.time_steps = static_cast<int>(read_u32(is, "header"));
    ds.feature_dim = static_cast<int>(read_u32(is, "header"));
    ds.k_group = static_cast<int>(read_u32(is, "header"));
    ds.k_ind = static_cast<int>(read_u32(is, "header"));
    const std::uint32_t count = read_u32(is, "header");
    if (ds.n_slots < 1 || ds.time_steps < 1 || ds.feature_dim < 1 || ds.k_group < 1) {
        throw FormatError("'" + path + "': nonsensical header values");
    }
    for (std::uint32_t si = 0; si < count; ++si) {
        const std::string where = "'" + path + "' sample " + std::to_string(si);
        SceneSample s;
        const int real = static_cast<int>(read_u32(is, "agent count"));
        if (real < 1 || real > ds.n_slots) throw FormatError(where + ": agent count " + std::to_string(real) + " outside [1, n_slots]");
        s.group_label = static_cast<int>(read_u32(is, "group label"));
        if (s.group_label < 0 || s.group_label >= ds.k_group) {
            throw FormatError(where + ": group label " + std::to_string(s.group_label) +
                              " outside [0, " + std::to_string(ds.k_group) + ")");
        }
        s.individual_labels.resize(static_cast<std::size_t>(real));
        for (int& l : s.individual_labels) {
            l = static_cast<int>(read_u32(is, "individual label"));
            if (l < 0 || l >= ds.k_ind) throw FormatError(where + ": individual label out of range");
        }
        auto read_seq = [&]() {
            std::vector<double> vals(static_cast<std::size_t>(ds.time_steps * ds.feature_dim));
            for (double& v : vals) {
                v = read_f32(is, "feature");
                if (!std::isfinite(v)) throw FormatError(where + ": non-finite feature");
            }
            return Tensor::from({ds.time_steps, ds.feature_dim}, std::move(vals));
        };
        for (int a = 0; a < real; ++a) {
            s.person_seqs.push_back(read_seq());
            s.presence_mask.push_back(true);
        }
        s.scene_seq = read_seq();
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::in | std::ios::binary);
    if (!is) {
        throw IoError("cannot open '" + path + "'");
    }
    char magic[16] = {};
    if (!is.read(magic, 8)) {
        throw ParseError("'" + path + "': file too short for magic");
    }
    if (std::memcmp(magic, kBinaryMagic, 8) == 0) {
        return load_dataset_binary(is, path);
    }
    if (std::memcmp(magic, kTextMagic, 8) == 0) {
        return load_dataset_text(is, path);
    }
    throw ParseError("'" + path + "': not a dataset file (bad magic)");
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        throw ContractError("split: train_fraction must be strictly inside (0, 1)");
    }
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(dataset.k_group));
    for (int i = 0; i < static_cast<int>(dataset.samples.size()); ++i) {
        by_class[static_cast<std::size_t>(dataset.samples[static_cast<std::size_t>(i)].group_label)].push_back(i);
    }
    Rng rng(derive_seed(seed, "split"));
    std::vector<int> train_ids, test_ids;
    for (int c = 0; c < dataset.k_group; ++c) {
        std::vector<int>& ids = by_class[static_cast<std::size_t>(c)];
        if (ids.empty()) continue;
        if (ids.size() < 2) {
            std::cerr << "split: class " << c << " has fewer than 2 samples; placing in train\n";
            train_ids.insert(train_ids.end(), ids.begin(), ids.end());
            continue;
        }
        rng.shuffle(ids);
        const int n = static_cast<int>(ids.size());
        int n_train = static_cast<int>(std::llround(train_fraction * n));
        n_train = std::clamp(n_train, 1, n - 1);
        for (int i = 0; i < n; ++i) {
            (i < n_train ? train_ids : test_ids).push_back(ids[static_cast<std::size_t>(i)]);
        }
    }
    std::sort(train_ids.begin(), train_ids.end());
    std::sort(test_ids.begin(), test_ids.end());
    auto subset = [&](const std::vector<int>& ids) {
        Dataset out = dataset;
        out.samples.clear();
        for (int i : ids) out.samples.push_back(dataset.samples[static_cast<std::size_t>(i)]);
        return out;
    };
    return {subset(train_ids), subset(test_ids)};
}

std::uint64_t dataset_fingerprint(const Dataset& dataset) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* p, std::size_t n) {
        const unsigned char* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    mix(&dataset.n_slots, sizeof dataset.n_slots);
    mix(&dataset.k_group, sizeof dataset.k_group);
    for (const SceneSample& s : dataset.samples) {
        mix(&s.group_label, sizeof s.group_label);
        for (const Tensor& t : s.person_seqs) mix(t.data().data(), t.data().size() * sizeof(double));
        mix(s.scene_seq.data().data(), s.scene_seq.data().size() * sizeof(double));
    }
    return h;
}

}  // namespace mlsgan
