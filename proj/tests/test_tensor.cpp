#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <thread>

#include "doctest.h"
#include "mlsgan/grad_check.hpp"
#include "mlsgan/ops.hpp"
#include "mlsgan/rng.hpp"
#include "mlsgan/tensor.hpp"

using namespace mlsgan;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, bool requires_grad = true) {
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (double& v : t.data()) v = rng.normal();
    return t;
}

}  // namespace

TEST_CASE("tensor construction enforces shape/data consistency") {
    CHECK_THROWS_AS(Tensor::from({2, 3}, {1.0, 2.0}), DimensionError);
    Tensor t = Tensor::from({2, 2}, {1, 2, 3, 4});
    CHECK(t.numel() == 4);
    CHECK(t(1, 0) == 3.0);
    CHECK_THROWS_AS(Tensor::scalar(1.0).set_requires_grad(true).grad(), ContractError);
}

TEST_CASE("matmul identity and hand cases") {
    Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor col = Tensor::from({2, 1}, {3, 4});
    Tensor out = matmul(eye, col);
    CHECK(out(0, 0) == 3.0);
    CHECK(out(1, 0) == 4.0);

    Tensor row = Tensor::from({1, 2}, {1, 2});
    CHECK(matmul(row, col)(0, 0) == doctest::Approx(11.0).epsilon(1e-15));
}

TEST_CASE("matmul rejects mismatched inner dimensions naming both shapes") {
    Tensor a = Tensor::zeros({3, 4});
    Tensor b = Tensor::zeros({5, 2});
    try {
        matmul(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[3x4]") != std::string::npos);
        CHECK(msg.find("[5x2]") != std::string::npos);
    }
}

TEST_CASE("matmul gradient matches central finite differences") {
    Rng rng(7);
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 2}, rng);
    const Tensor params[2] = {a, b};
    auto report = finite_diff_check([&] { return sum(matmul(a, b)); }, params);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("elementwise basics") {
    CHECK(sigmoid(Tensor::scalar(0.0)).value() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tanh(Tensor::scalar(0.0)).value() == 0.0);
    Tensor prod = mul(Tensor::from({2}, {2, 3}), Tensor::from({2}, {4, 5}));
    CHECK(prod(0) == 8.0);
    CHECK(prod(1) == 15.0);
    CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), DimensionError);
    CHECK_THROWS_AS(log(Tensor::from({2}, {1.0, -0.5})), DomainError);
    CHECK(sub(Tensor::from({2}, {5, 1}), Tensor::from({2}, {2, 4}))(1) == -3.0);
    CHECK(scale(Tensor::from({2}, {2, -3}), 0.5)(1) == -1.5);
}

TEST_CASE("elementwise gradients match finite differences") {
    Rng rng(11);
    Tensor x = random_tensor({5}, rng);
    Tensor y = random_tensor({5}, rng);
    const Tensor params[2] = {x, y};
    auto report = finite_diff_check(
        [&] { return sum(mul(tanh(x), sigmoid(add(x, y)))); }, params);
    CHECK(report.passed);

    Tensor pos = Tensor::from({3}, {0.5, 1.5, 2.5}, true);
    const Tensor lp[1] = {pos};
    CHECK(finite_diff_check([&] { return sum(log(pos)); }, lp).passed);
}

TEST_CASE("concat values and identity") {
    Tensor a = Tensor::from({1, 2}, {1, 2});
    Tensor b = Tensor::from({1, 2}, {3, 4});
    const Tensor parts[2] = {a, b};
    Tensor c = concat(std::span<const Tensor>(parts, 2), 1);
    CHECK(c.shape() == std::vector<int>{1, 4});
    CHECK(c(0, 2) == 3.0);

    const Tensor single[1] = {a};
    Tensor same = concat(std::span<const Tensor>(single, 1), 0);
    CHECK(same.data() == a.data());

    Tensor bad = Tensor::zeros({2, 3});
    const Tensor mix[2] = {a, bad};
    CHECK_THROWS_AS(concat(std::span<const Tensor>(mix, 2), 0), DimensionError);
}

TEST_CASE("concat backward scatters ones to every source") {
    Tensor a = Tensor::from({1, 2}, {1, 2}, true);
    Tensor b = Tensor::from({1, 3}, {3, 4, 5}, true);
    Tape tape;
    const Tensor parts[2] = {a, b};
    Tensor loss = sum(concat(std::span<const Tensor>(parts, 2), 1));
    tape.backward(loss);
    for (double g : a.grad()) CHECK(g == 1.0);
    for (double g : b.grad()) CHECK(g == 1.0);
}

TEST_CASE("reductions") {
    CHECK(sum(Tensor::from({3}, {1, 2, 3})).value() == 6.0);
    CHECK(mean(Tensor::from({2}, {2, 4})).value() == 3.0);
    Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor cols = sum(m, 0);
    CHECK(cols(0) == 4.0);
    CHECK(cols(1) == 6.0);
    Tensor rows = mean(m, 1);
    CHECK(rows(0) == 1.5);
    CHECK_THROWS_AS(sum(m, 2), DimensionError);
}

TEST_CASE("axis reduction gradients match finite differences") {
    Rng rng(13);
    Tensor m = random_tensor({3, 4}, rng);
    const Tensor params[1] = {m};
    CHECK(finite_diff_check([&] { return sum(mul(sum(m, 0), sum(m, 0))); }, params).passed);
    CHECK(finite_diff_check([&] { return sum(mul(mean(m, 1), mean(m, 1))); }, params).passed);
}

TEST_CASE("softmax closed forms and stability") {
    Tensor flat = softmax(Tensor::from({2}, {0, 0}));
    CHECK(flat(0) == doctest::Approx(0.5).epsilon(1e-14));

    Tensor big = softmax(Tensor::from({2}, {1000, 1000}));
    CHECK(big(0) == doctest::Approx(0.5).epsilon(1e-14));

    Tensor skew = softmax(Tensor::from({2}, {0.0, std::log(3.0)}));
    CHECK(std::abs(skew(0) - 0.25) < 1e-12);
    CHECK(std::abs(skew(1) - 0.75) < 1e-12);
}

TEST_CASE("softmax rows sum to one for magnitudes up to 1e3") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = Tensor::zeros({4, 6});
        for (double& v : x.data()) v = rng.uniform(-1e3, 1e3);
        Tensor y = softmax(x);
        for (int r = 0; r < 4; ++r) {
            double total = 0.0;
            for (int j = 0; j < 6; ++j) {
                CHECK(y(r, j) >= 0.0);
                total += y(r, j);
            }
            CHECK(std::abs(total - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("softmax gradient matches finite differences") {
    Rng rng(19);
    Tensor x = random_tensor({3, 4}, rng);
    Tensor w = random_tensor({3, 4}, rng, false);
    const Tensor params[1] = {x};
    CHECK(finite_diff_check([&] { return sum(mul(softmax(x), w)); }, params).passed);
}

TEST_CASE("backward: square function") {
    Tensor x = Tensor::scalar(3.0, true);
    Tape tape;
    Tensor loss = mul(x, x);
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("backward: fan-out accumulates both contributions") {
    // y = x*x + x: dy/dx = 2x + 1
    Tensor x = Tensor::scalar(1.5, true);
    Tape tape;
    Tensor loss = add(mul(x, x), x);
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(4.0).epsilon(1e-14));

    const Tensor params[1] = {x};
    CHECK(finite_diff_check([&] { return add(mul(x, x), x); }, params).passed);
}

TEST_CASE("backward: sum(sigmoid(Wx)) matches finite differences") {
    Rng rng(23);
    Tensor w = random_tensor({4, 3}, rng);
    Tensor x = random_tensor({3}, rng);
    const Tensor params[2] = {w, x};
    auto report = finite_diff_check([&] { return sum(sigmoid(matmul(w, x))); }, params);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("backward: non-scalar loss rejected, non-participating leaf has no grad") {
    Tensor x = Tensor::from({2}, {1, 2}, true);
    Tensor frozen = Tensor::from({2}, {3, 4}, false);
    Tape tape;
    Tensor y = mul(x, frozen);
    CHECK_THROWS_AS(tape.backward(y), ContractError);
    tape.backward(sum(y));
    CHECK(x.has_grad());
    CHECK_FALSE(frozen.has_grad());
}

TEST_CASE("backward: repeated calls accumulate into leaves") {
    Tensor x = Tensor::scalar(3.0, true);
    Tape tape;
    Tensor loss = mul(x, x);
    tape.backward(loss);
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(12.0).epsilon(1e-14));
}

TEST_CASE("ops are deterministic: identical inputs give bit-identical outputs") {
    Rng rng(29);
    Tensor a = random_tensor({4, 4}, rng, false);
    Tensor b = random_tensor({4, 4}, rng, false);
    Tensor r1 = matmul(tanh(a), sigmoid(b));
    Tensor r2 = matmul(tanh(a), sigmoid(b));
    CHECK(r1.data() == r2.data());
}

TEST_CASE("linear matches matmul-plus-bias and its gradient checks out") {
    Rng rng(31);
    Tensor x = random_tensor({3, 4}, rng);
    Tensor w = random_tensor({2, 4}, rng);
    Tensor b = random_tensor({2}, rng);
    Tensor y = linear(x, w, b);
    for (int r = 0; r < 3; ++r)
        for (int o = 0; o < 2; ++o) {
            double expect = b(o);
            for (int i = 0; i < 4; ++i) expect += x(r, i) * w(o, i);
            CHECK(y(r, o) == doctest::Approx(expect).epsilon(1e-14));
        }
    const Tensor params[3] = {x, w, b};
    CHECK(finite_diff_check([&] { return sum(tanh(linear(x, w, b))); }, params).passed);
}

TEST_CASE("finite_diff_check: linear map is exact to 1e-9") {
    Rng rng(37);
    Tensor w = random_tensor({3, 3}, rng);
    Tensor x = random_tensor({3}, rng, false);
    const Tensor params[1] = {w};
    auto report = finite_diff_check([&] { return sum(matmul(w, x)); }, params, 1e-5, 1e-9);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-9);
}

TEST_CASE("finite_diff_check: deliberately corrupted gradient is flagged") {
    // A hand-recorded op with a wrong backward: y = 2x claiming dy/dx = -2.
    Tensor x = Tensor::scalar(1.25, true);
    auto wrong = [&] {
        Tensor out = Tensor::scalar(2.0 * x.value());
        if (Tape::active() != nullptr) {
            out.set_requires_grad(true);
            Tape::active()->record(out.ptr(), [xd = x.ptr(), od = out.ptr()] {
                xd->ensure_grad();
                xd->grad[0] += -2.0 * od->grad[0];
            });
        }
        return out;
    };
    const Tensor params[1] = {x};
    auto report = finite_diff_check(wrong, params);
    CHECK_FALSE(report.passed);
    CHECK(report.max_rel_error > 1e-2);
}

TEST_CASE("slice_row values and gradient") {
    Tensor m = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    Tensor r = slice_row(m, 1);
    CHECK(r(2) == 6.0);
    CHECK_THROWS_AS(slice_row(m, 2), DimensionError);
    const Tensor params[1] = {m};
    CHECK(finite_diff_check([&] { return sum(mul(slice_row(m, 0), slice_row(m, 1))); }, params)
              .passed);
}

TEST_CASE("independent tapes on separate threads do not interfere") {
    // Tapes are thread-local; two threads with their own parameters and
    // tapes must each see exactly their own gradients.
    auto worker = [](double x0, double* grad_out) {
        Tensor x = Tensor::scalar(x0, true);
        Tape tape;
        Tensor loss = mul(x, x);
        tape.backward(loss);
        *grad_out = x.grad()[0];
    };
    double g1 = 0.0, g2 = 0.0;
    std::thread t1(worker, 3.0, &g1);
    std::thread t2(worker, -5.0, &g2);
    t1.join();
    t2.join();
    CHECK(g1 == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(g2 == doctest::Approx(-10.0).epsilon(1e-14));
}

TEST_CASE("select_index picks per-row entries and validates labels") {
    Tensor probs = Tensor::from({2, 3}, {0.1, 0.7, 0.2, 0.5, 0.25, 0.25});
    const int labels[2] = {1, 0};
    Tensor picked = select_index(probs, std::span<const int>(labels, 2));
    CHECK(picked(0) == 0.7);
    CHECK(picked(1) == 0.5);
    const int bad[2] = {1, 3};
    CHECK_THROWS_AS(select_index(probs, std::span<const int>(bad, 2)), ContractError);
}
