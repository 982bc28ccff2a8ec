#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mlsgan/grad_check.hpp"
#include "mlsgan/nn.hpp"
#include "mlsgan/ops.hpp"
#include "oracles.hpp"

using namespace mlsgan;

namespace {

void randomize(Tensor& t, Rng& rng, double scl = 1.0) {
    for (double& v : t.data()) v = scl * rng.normal();
}

LSTMCell random_cell(int in_dim, int hidden, Rng& rng) {
    LSTMCell cell = LSTMCell::init(in_dim, hidden, rng, "cell");
    // init() already randomizes weights; also perturb the biases so the
    // oracle comparison exercises them.
    randomize(cell.b_i, rng, 0.3);
    randomize(cell.b_f, rng, 0.3);
    randomize(cell.b_o, rng, 0.3);
    randomize(cell.b_g, rng, 0.3);
    return cell;
}

std::vector<std::vector<double>> rows_of(const Tensor& seq) {
    std::vector<std::vector<double>> rows;
    for (int t = 0; t < seq.dim(0); ++t) {
        std::vector<double> row;
        for (int j = 0; j < seq.dim(1); ++j) row.push_back(seq(t, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("dense_forward identity and constant rows") {
    Rng rng(1);
    DenseLayer layer = DenseLayer::init(2, 2, Activation::None, rng, "fc");
    layer.w.data() = {1, 0, 0, 1};
    layer.b.data() = {0, 0};
    Tensor x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor y = dense_forward(layer, x);
    CHECK(y.data() == x.data());

    layer.w.data() = {0, 0, 0, 0};
    layer.b.data() = {1, 2};
    Tensor z = dense_forward(layer, x);
    for (int r = 0; r < 3; ++r) {
        CHECK(z(r, 0) == 1.0);
        CHECK(z(r, 1) == 2.0);
    }
}

TEST_CASE("dense_forward gradient matches finite differences") {
    Rng rng(2);
    DenseLayer layer = DenseLayer::init(3, 2, Activation::Tanh, rng, "fc");
    Tensor x = Tensor::zeros({1, 3}, true);
    randomize(x, rng);
    const Tensor params[3] = {layer.w, layer.b, x};
    auto report = finite_diff_check([&] { return sum(dense_forward(layer, x)); }, params);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("lstm init: forget bias is +1, glorot bounds hold") {
    Rng rng(3);
    LSTMCell cell = LSTMCell::init(4, 8, rng, "cell");
    for (double v : cell.b_f.data()) CHECK(v == 1.0);
    for (double v : cell.b_i.data()) CHECK(v == 0.0);
    const double bound = std::sqrt(6.0 / (12 + 8));
    for (double v : cell.w_i.data()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("lstm_step with all-zero weights and state is a fixpoint at zero") {
    Rng rng(4);
    LSTMCell cell = LSTMCell::init(3, 2, rng, "cell");
    for (auto w : {std::ref(cell.w_i), std::ref(cell.w_f), std::ref(cell.w_o), std::ref(cell.w_g)}) {
        for (double& v : w.get().data()) v = 0.0;
    }
    cell.b_f.data() = {0.0, 0.0};
    Tensor x = Tensor::from({3}, {5, -2, 1});
    auto [h, c] = lstm_step(cell, x, Tensor::zeros({2}), Tensor::zeros({2}));
    for (double v : h.data()) CHECK(v == 0.0);
    for (double v : c.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm_step matches the naive scalar-loop oracle") {
    Rng rng(5);
    LSTMCell cell = random_cell(3, 2, rng);
    Tensor x = Tensor::zeros({3});
    randomize(x, rng);
    auto [h, c] = lstm_step(cell, x, Tensor::zeros({2}), Tensor::zeros({2}));

    mlsgan_test::NaiveLstmState prev;
    prev.h = {0.0, 0.0};
    prev.c = {0.0, 0.0};
    auto next = mlsgan_test::naive_lstm_step(cell, x.data(), prev);
    for (int r = 0; r < 2; ++r) {
        CHECK(std::abs(h(r) - next.h[static_cast<std::size_t>(r)]) < 1e-12);
        CHECK(std::abs(c(r) - next.c[static_cast<std::size_t>(r)]) < 1e-12);
    }
}

TEST_CASE("lstm_step gradient matches finite differences") {
    Rng rng(6);
    LSTMCell cell = random_cell(3, 4, rng);
    Tensor x = Tensor::zeros({3}, true);
    Tensor h0 = Tensor::zeros({4}, true);
    Tensor c0 = Tensor::zeros({4}, true);
    randomize(x, rng);
    randomize(h0, rng, 0.5);
    randomize(c0, rng, 0.5);
    std::vector<Tensor> params = cell.parameters();
    params.push_back(x);
    params.push_back(h0);
    params.push_back(c0);
    auto report = finite_diff_check(
        [&] {
            auto [h, c] = lstm_step(cell, x, h0, c0);
            return sum(h);
        },
        params);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("lstm_encode: T=1 reduces to one step; zero net encodes zero") {
    Rng rng(7);
    LSTMCell cell = random_cell(3, 2, rng);
    Tensor seq = Tensor::zeros({1, 3});
    randomize(seq, rng);
    Tensor enc = lstm_encode(cell, seq);
    auto [h, c] = lstm_step(cell, slice_row(seq, 0), Tensor::zeros({2}), Tensor::zeros({2}));
    CHECK(enc.data() == h.data());

    LSTMCell zero_cell = LSTMCell::init(3, 2, rng, "zero");
    for (auto w : {std::ref(zero_cell.w_i), std::ref(zero_cell.w_f), std::ref(zero_cell.w_o),
                   std::ref(zero_cell.w_g)}) {
        for (double& v : w.get().data()) v = 0.0;
    }
    zero_cell.b_f.data() = {0.0, 0.0};
    Tensor z = lstm_encode(zero_cell, Tensor::zeros({4, 3}));
    for (double v : z.data()) CHECK(v == 0.0);

    CHECK_THROWS_AS(lstm_encode(cell, Tensor::zeros({0, 3})), ContractError);
}

TEST_CASE("lstm_encode matches the naive oracle on 20 random instances") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const int t_steps = 1 + rng.uniform_int(4);
        const int hidden = 1 + rng.uniform_int(3);
        const int d = 1 + rng.uniform_int(3);
        LSTMCell cell = random_cell(d, hidden, rng);
        Tensor seq = Tensor::zeros({t_steps, d});
        randomize(seq, rng);
        Tensor enc = lstm_encode(cell, seq);
        std::vector<double> expect = mlsgan_test::naive_lstm_encode(cell, rows_of(seq));
        for (int r = 0; r < hidden; ++r) {
            CHECK(std::abs(enc(r) - expect[static_cast<std::size_t>(r)]) < 1e-10);
        }
    }
}

TEST_CASE("lstm_encode gradient through three steps") {
    Rng rng(9);
    LSTMCell cell = random_cell(2, 3, rng);
    Tensor seq = Tensor::zeros({3, 2}, true);
    randomize(seq, rng);
    std::vector<Tensor> params = cell.parameters();
    params.push_back(seq);
    auto report = finite_diff_check([&] { return sum(lstm_encode(cell, seq)); }, params);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("batched lstm_encode_steps rows match per-sample encodes bit-exactly") {
    Rng rng(10);
    LSTMCell cell = random_cell(3, 4, rng);
    const int batch = 5, t_steps = 6;
    std::vector<Tensor> seqs;
    for (int b = 0; b < batch; ++b) {
        Tensor seq = Tensor::zeros({t_steps, 3});
        randomize(seq, rng);
        seqs.push_back(seq);
    }
    std::vector<Tensor> steps;
    for (int t = 0; t < t_steps; ++t) {
        Tensor x = Tensor::zeros({batch, 3});
        for (int b = 0; b < batch; ++b)
            for (int j = 0; j < 3; ++j) x(b, j) = seqs[static_cast<std::size_t>(b)](t, j);
        steps.push_back(x);
    }
    Tensor batched = lstm_encode_steps(cell, steps);
    for (int b = 0; b < batch; ++b) {
        Tensor single = lstm_encode(cell, seqs[static_cast<std::size_t>(b)]);
        for (int r = 0; r < 4; ++r) CHECK(batched(b, r) == single(r));
    }
}

TEST_CASE("bce_loss closed forms") {
    CHECK(bce_loss(Tensor::scalar(0.5), 1).value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(Tensor::scalar(0.5), 0).value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(Tensor::scalar(1.0), 1).value() == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(bce_loss(Tensor::scalar(0.0), 0).value() == doctest::Approx(0.0).epsilon(1e-6));
    CHECK_THROWS_AS(bce_loss(Tensor::scalar(0.5), 2), ContractError);
}

TEST_CASE("bce_loss gradient matches finite differences") {
    Rng rng(11);
    Tensor logits = Tensor::zeros({4}, true);
    randomize(logits, rng);
    const Tensor params[1] = {logits};
    auto report = finite_diff_check([&] { return bce_loss(sigmoid(logits), 1); }, params);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("categorical_ce_loss closed forms and errors") {
    Tensor uniform = Tensor::full({1, 5}, 0.2);
    const int zero[1] = {0};
    CHECK(categorical_ce_loss(uniform, std::span<const int>(zero, 1)).value() ==
          doctest::Approx(std::log(5.0)).epsilon(1e-12));

    Tensor onehot = Tensor::from({1, 3}, {0, 1, 0});
    const int one[1] = {1};
    CHECK(categorical_ce_loss(onehot, std::span<const int>(one, 1)).value() ==
          doctest::Approx(0.0).epsilon(1e-6));

    Tensor two = Tensor::from({2, 2}, {0.7, 0.3, 0.2, 0.8});
    const int labels[2] = {0, 1};
    const double expect = -(std::log(0.7) + std::log(0.8)) / 2.0;
    CHECK(std::abs(categorical_ce_loss(two, std::span<const int>(labels, 2)).value() - expect) < 1e-12);

    const int bad[2] = {0, 2};
    CHECK_THROWS_AS(categorical_ce_loss(two, std::span<const int>(bad, 2)), ContractError);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    Tensor p = Tensor::from({2}, {1.0, -2.0}, true);
    const Tensor params[1] = {p};
    AdamState state = AdamState::init(params, AdamSchedule::constant(0.1));
    p.zero_grad();
    adam_step(state, params, 0);
    CHECK(p(0) == 1.0);
    CHECK(p(1) == -2.0);
}

TEST_CASE("adam: first step with unit gradient moves by about lr") {
    Tensor p = Tensor::scalar(1.0, true);
    const Tensor params[1] = {p};
    AdamState state = AdamState::init(params, AdamSchedule::constant(0.1));
    p.ptr()->ensure_grad();
    p.ptr()->grad[0] = 1.0;
    adam_step(state, params, 0);
    // First-step closed form: m_hat = v_hat = 1, update = lr / (1 + eps).
    CHECK(std::abs(p.value() - (1.0 - 0.1 / (1.0 + 1e-8))) < 1e-15);
    CHECK(std::abs((1.0 - p.value()) - 0.1) < 1e-6);
}

TEST_CASE("adam: schedule boundary epoch uses the second learning rate") {
    AdamSchedule sched{0.1, 5, 0.01, 15};
    CHECK(sched.lr_at(4) == 0.1);
    CHECK(sched.lr_at(5) == 0.01);

    Tensor p = Tensor::scalar(0.0, true);
    const Tensor params[1] = {p};
    AdamState state = AdamState::init(params, sched);
    p.ptr()->ensure_grad();
    p.ptr()->grad[0] = 1.0;
    adam_step(state, params, 5);
    CHECK(std::abs(-p.value() - 0.01) < 1e-7);
}

TEST_CASE("adam: NaN gradient aborts naming the parameter") {
    Tensor p = Tensor::scalar(1.0, true).set_name("gen.out.w");
    const Tensor params[1] = {p};
    AdamState state = AdamState::init(params, AdamSchedule::constant(0.1));
    p.ptr()->ensure_grad();
    p.ptr()->grad[0] = std::nan("");
    try {
        adam_step(state, params, 0);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("gen.out.w") != std::string::npos);
    }
}

TEST_CASE("adam: first-step update opposes the gradient") {
    Rng rng(12);
    Tensor p = Tensor::zeros({16}, true);
    randomize(p, rng);
    Tensor start = p.clone();
    const Tensor params[1] = {p};
    AdamState state = AdamState::init(params, AdamSchedule::constant(0.01));
    p.ptr()->ensure_grad();
    for (double& g : p.ptr()->grad) g = rng.normal();
    std::vector<double> grads = p.ptr()->grad;
    adam_step(state, params, 0);
    for (int i = 0; i < 16; ++i) {
        const double update = p(i) - start(i);
        if (grads[static_cast<std::size_t>(i)] != 0.0) {
            CHECK(update * grads[static_cast<std::size_t>(i)] < 0.0);
        }
    }
}
