#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mlsgan/action_code.hpp"
#include "mlsgan/error.hpp"

using namespace mlsgan;

TEST_CASE("ground-truth codes are 255 at the class index") {
    ActionCode code = encode_ground_truth(5, 7);
    CHECK(code.k() == 7);
    for (int i = 0; i < 7; ++i) {
        CHECK(code.values[static_cast<std::size_t>(i)] == (i == 5 ? 255.0 : 0.0));
    }
    ActionCode single = encode_ground_truth(0, 1);
    CHECK(single.values == std::vector<double>{255.0});
    CHECK_THROWS_AS(encode_ground_truth(7, 7), ContractError);
    CHECK_THROWS_AS(encode_ground_truth(-1, 7), ContractError);
}

TEST_CASE("decode is argmax with lowest-index ties") {
    CHECK(decode(ActionCode{{0, 255, 0}}) == 1);
    CHECK(decode(ActionCode{{7, 7, 7}}) == 0);
    CHECK(decode(ActionCode{{10, 200, 45}}) == 1);
    CHECK_THROWS_AS(decode(ActionCode{{}}), ContractError);
}

TEST_CASE("encode/decode round-trip for every class, k in 1..16") {
    for (int k = 1; k <= 16; ++k) {
        for (int c = 0; c < k; ++c) {
            CHECK(decode(encode_ground_truth(c, k)) == c);
        }
    }
}

TEST_CASE("normalize/denormalize is the exact affine bijection") {
    CHECK(normalize(ActionCode{{255.0}}) == std::vector<double>{1.0});
    CHECK(normalize(ActionCode{{0.0}}) == std::vector<double>{0.0});
    CHECK(denormalize({1.0}).values == std::vector<double>{255.0});
    CHECK(denormalize({0.0}).values == std::vector<double>{0.0});
    CHECK(normalize(ActionCode{{127.5}}) == std::vector<double>{0.5});
    CHECK(denormalize({0.5}).values == std::vector<double>{127.5});

    for (double v : {0.0, 1.0, 17.25, 127.5, 200.0, 255.0}) {
        const double round_trip = denormalize(normalize(ActionCode{{v}})).values[0];
        CHECK(std::abs(round_trip - v) < 1e-12);
    }
    CHECK_THROWS_AS(normalize(ActionCode{{256.5}}), ContractError);
    CHECK_THROWS_AS(normalize(ActionCode{{-3.0}}), ContractError);
    CHECK_THROWS_AS(denormalize({1.5}), ContractError);
}

TEST_CASE("distinct classes sit at L-inf distance 255") {
    const int k = 6;
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) {
            ActionCode ca = encode_ground_truth(a, k);
            ActionCode cb = encode_ground_truth(b, k);
            double linf = 0.0;
            for (int i = 0; i < k; ++i) {
                linf = std::max(linf, std::abs(ca.values[static_cast<std::size_t>(i)] -
                                               cb.values[static_cast<std::size_t>(i)]));
            }
            CHECK(linf == 255.0);
        }
    }
}

TEST_CASE("ground_truth_internal is the normalized one-hot tensor") {
    Tensor t = ground_truth_internal(2, 4);
    CHECK(t.shape() == std::vector<int>{4});
    CHECK(t(2) == 1.0);
    CHECK(t(0) == 0.0);
}
