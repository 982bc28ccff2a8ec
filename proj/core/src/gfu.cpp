#include "mlsgan/gfu.hpp"

#include <algorithm>
#include <cmath>

#include "mlsgan/nn.hpp"

namespace mlsgan {

namespace {

bool g_corrupt_backward = false;

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Sum in ascending value order; invariant under any permutation of the
/// inputs because IEEE addition is commutative and the order is canonical.
double ordered_sum(std::vector<double>& vals) {
    std::sort(vals.begin(), vals.end());
    double acc = 0.0;
    for (double v : vals) acc += v;
    return acc;
}

struct GfuActivations {
    int batch = 1;
    bool batched = false;
    // h[n], q[n] are batch*fused arrays.
    std::vector<std::vector<double>> h, q;
    std::vector<double> c;  // batch*fused
};

GfuActivations run_forward(const GatedFusionUnit& unit, std::span<const Tensor> streams) {
    const int m = unit.streams();
    if (static_cast<int>(streams.size()) != m) {
        throw DimensionError("gfu_forward: expected " + std::to_string(m) + " streams, got " +
                             std::to_string(streams.size()));
    }
    const bool batched = streams[0].rank() == 2;
    const int batch = batched ? streams[0].dim(0) : 1;
    for (int n = 0; n < m; ++n) {
        const Tensor& z = streams[static_cast<std::size_t>(n)];
        const int dim = batched ? (z.rank() == 2 ? z.dim(1) : -1) : (z.rank() == 1 ? z.dim(0) : -1);
        if (dim != unit.stream_dims[static_cast<std::size_t>(n)] ||
            (batched && z.dim(0) != batch)) {
            throw DimensionError("gfu_forward: stream " + std::to_string(n) + " has shape " +
                                 shape_str(z.shape()) + ", expected width " +
                                 std::to_string(unit.stream_dims[static_cast<std::size_t>(n)]));
        }
    }
    const int fused = unit.fused;

    GfuActivations act;
    act.batch = batch;
    act.batched = batched;
    act.h.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(batch * fused), 0.0));
    act.q = act.h;
    act.c.assign(static_cast<std::size_t>(batch * fused), 0.0);

    std::vector<int> offsets(static_cast<std::size_t>(m), 0);
    for (int n = 1; n < m; ++n)
        offsets[static_cast<std::size_t>(n)] = offsets[static_cast<std::size_t>(n - 1)] + unit.stream_dims[static_cast<std::size_t>(n - 1)];

    std::vector<double> partials(static_cast<std::size_t>(m));
    std::vector<double> contribs(static_cast<std::size_t>(m));
    for (int r = 0; r < batch; ++r) {
        for (int n = 0; n < m; ++n) {
            const int dim_n = unit.stream_dims[static_cast<std::size_t>(n)];
            const double* zn = streams[static_cast<std::size_t>(n)].data().data() + static_cast<std::size_t>(r) * dim_n;
            const double* we = unit.encode_w[static_cast<std::size_t>(n)].data().data();
            const double* wg = unit.gate_w[static_cast<std::size_t>(n)].data().data();
            const double* bg = unit.gate_b[static_cast<std::size_t>(n)].data().data();
            const int total = unit.total_dim();
            double* hn = act.h[static_cast<std::size_t>(n)].data() + static_cast<std::size_t>(r) * fused;
            double* qn = act.q[static_cast<std::size_t>(n)].data() + static_cast<std::size_t>(r) * fused;
            for (int f = 0; f < fused; ++f) {
                double a = 0.0;
                const double* we_row = we + static_cast<std::size_t>(f) * dim_n;
                for (int d = 0; d < dim_n; ++d) a += we_row[d] * zn[d];
                hn[f] = std::tanh(a);

                const double* wg_row = wg + static_cast<std::size_t>(f) * total;
                for (int j = 0; j < m; ++j) {
                    const int dim_j = unit.stream_dims[static_cast<std::size_t>(j)];
                    const double* zj = streams[static_cast<std::size_t>(j)].data().data() + static_cast<std::size_t>(r) * dim_j;
                    const double* block = wg_row + offsets[static_cast<std::size_t>(j)];
                    double p = 0.0;
                    for (int d = 0; d < dim_j; ++d) p += block[d] * zj[d];
                    partials[static_cast<std::size_t>(j)] = p;
                }
                qn[f] = stable_sigmoid(ordered_sum(partials) + bg[f]);
            }
        }
        for (int f = 0; f < fused; ++f) {
            for (int n = 0; n < m; ++n)
                contribs[static_cast<std::size_t>(n)] =
                    act.h[static_cast<std::size_t>(n)][static_cast<std::size_t>(r) * fused + f] *
                    act.q[static_cast<std::size_t>(n)][static_cast<std::size_t>(r) * fused + f];
            act.c[static_cast<std::size_t>(r) * fused + f] = ordered_sum(contribs);
        }
    }
    return act;
}

}  // namespace

int GatedFusionUnit::total_dim() const {
    int total = 0;
    for (int d : stream_dims) total += d;
    return total;
}

std::vector<Tensor> GatedFusionUnit::parameters() const {
    std::vector<Tensor> params;
    for (const Tensor& t : encode_w) params.push_back(t);
    for (const Tensor& t : gate_w) params.push_back(t);
    for (const Tensor& t : gate_b) params.push_back(t);
    return params;
}

GatedFusionUnit GatedFusionUnit::init(std::vector<int> stream_dims, int fused, Rng& rng,
                                      const std::string& name) {
    if (stream_dims.empty() || fused <= 0) {
        throw ContractError("GatedFusionUnit::init: needs at least one stream and positive width");
    }
    GatedFusionUnit unit;
    unit.fused = fused;
    unit.stream_dims = std::move(stream_dims);
    const int total = unit.total_dim();
    for (int n = 0; n < unit.streams(); ++n) {
        const int dim = unit.stream_dims[static_cast<std::size_t>(n)];
        Tensor we = Tensor::zeros({fused, dim}, true).set_name(name + ".enc" + std::to_string(n));
        glorot_init(we, dim, fused, rng);
        Tensor wg = Tensor::zeros({fused, total}, true).set_name(name + ".gate" + std::to_string(n));
        glorot_init(wg, total, fused, rng);
        Tensor bg = Tensor::zeros({fused}, true).set_name(name + ".gate_b" + std::to_string(n));
        unit.encode_w.push_back(we);
        unit.gate_w.push_back(wg);
        unit.gate_b.push_back(bg);
    }
    return unit;
}

Tensor gfu_forward(const GatedFusionUnit& unit, std::span<const Tensor> streams) {
    GfuActivations act = run_forward(unit, streams);
    const int m = unit.streams();
    const int fused = unit.fused;
    Tensor out = act.batched ? Tensor::zeros({act.batch, fused}) : Tensor::zeros({fused});
    out.data() = act.c;
    for (double v : out.data()) {
        if (!std::isfinite(v)) throw NumericError("gfu_forward: non-finite output");
    }

    bool any_grad = false;
    for (const Tensor& z : streams) any_grad = any_grad || z.requires_grad();
    for (const Tensor& p : unit.parameters()) any_grad = any_grad || p.requires_grad();
    if (Tape::active() == nullptr || !any_grad) return out;

    out.set_requires_grad(true);
    std::vector<std::shared_ptr<detail::TensorData>> zs;
    for (const Tensor& z : streams) zs.push_back(z.ptr());
    std::vector<std::shared_ptr<detail::TensorData>> enc_w, gate_w, gate_b;
    for (int n = 0; n < m; ++n) {
        enc_w.push_back(unit.encode_w[static_cast<std::size_t>(n)].ptr());
        gate_w.push_back(unit.gate_w[static_cast<std::size_t>(n)].ptr());
        gate_b.push_back(unit.gate_b[static_cast<std::size_t>(n)].ptr());
    }
    std::vector<int> dims = unit.stream_dims;
    std::vector<int> offsets(static_cast<std::size_t>(m), 0);
    for (int n = 1; n < m; ++n) offsets[static_cast<std::size_t>(n)] = offsets[static_cast<std::size_t>(n - 1)] + dims[static_cast<std::size_t>(n - 1)];
    const int total = unit.total_dim();
    const int batch = act.batch;

    Tape::active()->record(out.ptr(), [zs, enc_w, gate_w, gate_b, dims, offsets, total, batch,
                                       fused, m, h = std::move(act.h), q = std::move(act.q),
                                       od = out.ptr()] {
        const std::vector<double>& dc = od->grad;
        std::vector<double> da(static_cast<std::size_t>(fused));
        std::vector<double> dlogit(static_cast<std::size_t>(fused));
        const double gate_sign = g_corrupt_backward ? -1.0 : 1.0;
        for (int r = 0; r < batch; ++r) {
            const double* dc_r = dc.data() + static_cast<std::size_t>(r) * fused;
            for (int n = 0; n < m; ++n) {
                const double* hn = h[static_cast<std::size_t>(n)].data() + static_cast<std::size_t>(r) * fused;
                const double* qn = q[static_cast<std::size_t>(n)].data() + static_cast<std::size_t>(r) * fused;
                const int dim_n = dims[static_cast<std::size_t>(n)];
                for (int f = 0; f < fused; ++f) {
                    da[static_cast<std::size_t>(f)] = dc_r[f] * qn[f] * (1.0 - hn[f] * hn[f]);
                    dlogit[static_cast<std::size_t>(f)] = dc_r[f] * hn[f] * qn[f] * (1.0 - qn[f]);
                }
                // encode path
                if (enc_w[static_cast<std::size_t>(n)]->requires_grad) {
                    enc_w[static_cast<std::size_t>(n)]->ensure_grad();
                    double* gw = enc_w[static_cast<std::size_t>(n)]->grad.data();
                    const double* zn = zs[static_cast<std::size_t>(n)]->data.data() + static_cast<std::size_t>(r) * dim_n;
                    for (int f = 0; f < fused; ++f)
                        for (int d = 0; d < dim_n; ++d)
                            gw[static_cast<std::size_t>(f) * dim_n + d] += da[static_cast<std::size_t>(f)] * zn[d];
                }
                if (zs[static_cast<std::size_t>(n)]->requires_grad) {
                    zs[static_cast<std::size_t>(n)]->ensure_grad();
                    double* gz = zs[static_cast<std::size_t>(n)]->grad.data() + static_cast<std::size_t>(r) * dim_n;
                    const double* we = enc_w[static_cast<std::size_t>(n)]->data.data();
                    for (int f = 0; f < fused; ++f)
                        for (int d = 0; d < dim_n; ++d)
                            gz[d] += we[static_cast<std::size_t>(f) * dim_n + d] * da[static_cast<std::size_t>(f)];
                }
                // gate path
                if (gate_b[static_cast<std::size_t>(n)]->requires_grad) {
                    gate_b[static_cast<std::size_t>(n)]->ensure_grad();
                    double* gb = gate_b[static_cast<std::size_t>(n)]->grad.data();
                    for (int f = 0; f < fused; ++f) gb[f] += dlogit[static_cast<std::size_t>(f)];
                }
                if (gate_w[static_cast<std::size_t>(n)]->requires_grad) {
                    gate_w[static_cast<std::size_t>(n)]->ensure_grad();
                    double* gw = gate_w[static_cast<std::size_t>(n)]->grad.data();
                    for (int j = 0; j < m; ++j) {
                        const int dim_j = dims[static_cast<std::size_t>(j)];
                        const double* zj = zs[static_cast<std::size_t>(j)]->data.data() + static_cast<std::size_t>(r) * dim_j;
                        for (int f = 0; f < fused; ++f) {
                            double* row = gw + static_cast<std::size_t>(f) * total + offsets[static_cast<std::size_t>(j)];
                            const double dl = gate_sign * dlogit[static_cast<std::size_t>(f)];
                            for (int d = 0; d < dim_j; ++d) row[d] += dl * zj[d];
                        }
                    }
                }
                for (int j = 0; j < m; ++j) {
                    if (!zs[static_cast<std::size_t>(j)]->requires_grad) continue;
                    zs[static_cast<std::size_t>(j)]->ensure_grad();
                    const int dim_j = dims[static_cast<std::size_t>(j)];
                    double* gz = zs[static_cast<std::size_t>(j)]->grad.data() + static_cast<std::size_t>(r) * dim_j;
                    const double* wg = gate_w[static_cast<std::size_t>(n)]->data.data();
                    for (int f = 0; f < fused; ++f) {
                        const double* row = wg + static_cast<std::size_t>(f) * total + offsets[static_cast<std::size_t>(j)];
                        const double dl = dlogit[static_cast<std::size_t>(f)];
                        for (int d = 0; d < dim_j; ++d) gz[d] += dl * row[d];
                    }
                }
            }
        }
    });
    return out;
}

Tensor gfu_pair_forward(const GatedFusionUnit& unit, const Tensor& code_embed,
                        const Tensor& scene_embed) {
    if (unit.streams() != 2) {
        throw DimensionError("gfu_pair_forward: unit has " + std::to_string(unit.streams()) +
                             " streams, expected 2");
    }
    const Tensor streams[2] = {code_embed, scene_embed};
    return gfu_forward(unit, std::span<const Tensor>(streams, 2));
}

Tensor gate_activations(const GatedFusionUnit& unit, std::span<const Tensor> streams) {
    for (const Tensor& z : streams) {
        if (z.rank() != 1) {
            throw DimensionError("gate_activations: expects rank-1 streams, got " +
                                 shape_str(z.shape()));
        }
    }
    GfuActivations act = run_forward(unit, streams);
    Tensor out = Tensor::zeros({unit.streams(), unit.fused});
    for (int n = 0; n < unit.streams(); ++n)
        for (int f = 0; f < unit.fused; ++f) out(n, f) = act.q[static_cast<std::size_t>(n)][static_cast<std::size_t>(f)];
    return out;
}

namespace testing {
void gfu_corrupt_backward(bool enable) { g_corrupt_backward = enable; }
}  // namespace testing

}  // namespace mlsgan
