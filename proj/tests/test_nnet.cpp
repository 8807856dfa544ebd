#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "crowdtrack/nnet.hpp"

using namespace crowdtrack;
using nnet::Value;

namespace {

Value random_leaf(nnet::Shape s, std::mt19937_64& rng, double lo = -1.0,
                  double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> data(s.size());
    for (auto& v : data) v = dist(rng);
    return Value::leaf(s, data);
}

}  // namespace

TEST_CASE("linear forward matches the stated examples") {
    Value x = Value::leaf({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    Value w = Value::leaf({1, 2, 2}, {1.0, 0.0, 0.0, 1.0});
    Value b = Value::leaf({1, 1, 2}, {0.0, 0.0});
    Value y = nnet::linear(x, w, b);
    CHECK(y.data() == x.data());

    Value x2 = Value::leaf({1, 1, 2}, {1.0, 2.0});
    Value w2 = Value::leaf({1, 2, 1}, {1.0, 1.0});
    Value b2 = Value::leaf({1, 1, 1}, {3.0});
    CHECK(nnet::linear(x2, w2, b2).item() == doctest::Approx(6.0));
}

TEST_CASE("gradient of sum(linear) w.r.t. bias is all ones per row count") {
    std::mt19937_64 rng(3);
    Value x = random_leaf({1, 4, 3}, rng);
    Value w = random_leaf({1, 3, 2}, rng);
    Value b = random_leaf({1, 1, 2}, rng);
    Value loss = nnet::sum_all(nnet::linear(x, w, b));
    nnet::backward(loss);
    CHECK(b.grad()[0] == doctest::Approx(4.0));
    CHECK(b.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("softmax rows: symmetry, singleton, closed form") {
    Value a = Value::leaf({1, 1, 2}, {0.0, 0.0});
    Value sa = nnet::softmax_rows(a, 1.0);
    CHECK(sa.data()[0] == doctest::Approx(0.5));
    CHECK(sa.data()[1] == doctest::Approx(0.5));

    Value b = Value::leaf({1, 1, 1}, {2.7});
    CHECK(nnet::softmax_rows(b, 1.0).item() == doctest::Approx(1.0));

    Value c = Value::leaf({1, 1, 2}, {std::log(1.0), std::log(3.0)});
    Value sc = nnet::softmax_rows(c, 1.0);
    CHECK(sc.data()[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sc.data()[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one on random input") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Value x = random_leaf({1, 5, 5}, rng, -3.0, 3.0);
        Value y = nnet::softmax_rows(x, std::sqrt(5.0));
        for (int r = 0; r < 5; ++r) {
            double sum = 0.0;
            for (int c = 0; c < 5; ++c) {
                CHECK(y.at(r, c) >= 0.0);
                CHECK(y.at(r, c) <= 1.0);
                sum += y.at(r, c);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("prelu and sigmoid definitions") {
    Value a = Value::scalar(0.25);
    Value x = Value::leaf({1, 1, 2}, {-2.0, 3.0});
    Value y = nnet::prelu(x, a);
    CHECK(y.data()[0] == doctest::Approx(-0.5));
    CHECK(y.data()[1] == doctest::Approx(3.0));
    CHECK(nnet::sigmoid(Value::scalar(0.0)).item() == doctest::Approx(0.5));
}

TEST_CASE("activation gradients match finite differences at +-1.3") {
    nnet::Params params;
    Value x = params.add("x", Value::leaf({1, 1, 2}, {1.3, -1.3}));
    Value slope = params.add("slope", Value::scalar(0.25));
    const double err = nnet::grad_check(
        [&]() {
            return nnet::mean_all(nnet::sigmoid(nnet::prelu(x, slope)));
        },
        params);
    CHECK(err < 1e-4);
}

TEST_CASE("conv_asym: identity kernel, stated arithmetic, transpose symmetry") {
    Value row = Value::leaf({1, 1, 3}, {1.0, 2.0, 3.0});
    Value ident = Value::leaf({1, 1, 3}, {0.0, 1.0, 0.0});
    CHECK(nnet::conv_asym(row, ident, nnet::ConvAxis::kCols).data() == row.data());

    Value ones = Value::leaf({1, 1, 3}, {1.0, 1.0, 1.0});
    Value y = nnet::conv_asym(row, ones, nnet::ConvAxis::kCols);
    CHECK(y.data()[0] == doctest::Approx(3.0));
    CHECK(y.data()[1] == doctest::Approx(6.0));
    CHECK(y.data()[2] == doctest::Approx(5.0));

    // conv along rows of x equals transposed conv along cols of x^T
    std::mt19937_64 rng(11);
    Value x = random_leaf({1, 4, 3}, rng);
    Value k = random_leaf({1, 1, 3}, rng);
    Value rows_pass = nnet::conv_asym(x, k, nnet::ConvAxis::kRows);
    std::vector<double> xt(12);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 3; ++c) xt[c * 4 + r] = x.at(r, c);
    }
    Value cols_pass =
        nnet::conv_asym(Value::leaf({1, 3, 4}, xt), k, nnet::ConvAxis::kCols);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 3; ++c) {
            CHECK(rows_pass.at(r, c) == doctest::Approx(cols_pass.at(c, r)));
        }
    }
    CHECK_THROWS(nnet::conv_asym(x, random_leaf({1, 1, 4}, rng),
                                 nnet::ConvAxis::kCols));
}

TEST_CASE("pool_mean: constant input, simple mean, uniform gradient") {
    Value c = Value::leaf({1, 3, 2}, {4.0, -1.0, 4.0, -1.0, 4.0, -1.0});
    Value p = nnet::pool_mean(c);
    CHECK(p.data()[0] == doctest::Approx(4.0));
    CHECK(p.data()[1] == doctest::Approx(-1.0));

    Value two = Value::leaf({1, 2, 1}, {1.0, 3.0});
    CHECK(nnet::pool_mean(two).item() == doctest::Approx(2.0));

    Value x = Value::leaf({1, 4, 1}, {1.0, 2.0, 3.0, 4.0});
    nnet::backward(nnet::sum_all(nnet::pool_mean(x)));
    for (double g : x.grad()) {
        CHECK(g == doctest::Approx(0.25));
    }
}

TEST_CASE("backward: sum seeds ones, elementwise square, scalar contract") {
    Value x = Value::leaf({1, 1, 3}, {5.0, -2.0, 0.5});
    nnet::backward(nnet::sum_all(x));
    for (double g : x.grad()) {
        CHECK(g == doctest::Approx(1.0));
    }

    Value y = Value::leaf({1, 1, 2}, {2.0, -3.0});
    nnet::backward(nnet::sum_all(nnet::mul(y, y)));
    CHECK(y.grad()[0] == doctest::Approx(4.0));
    CHECK(y.grad()[1] == doctest::Approx(-6.0));

    CHECK_THROWS(nnet::backward(Value::leaf({1, 1, 2}, {1.0, 2.0})));
}

TEST_CASE("backward accumulates across shared consumers") {
    Value x = Value::leaf({1, 1, 2}, {1.5, -0.5});
    Value a = nnet::scale(x, 2.0);
    Value b = nnet::scale(x, 3.0);
    nnet::backward(nnet::sum_all(nnet::add(a, b)));
    CHECK(x.grad()[0] == doctest::Approx(5.0));
    CHECK(x.grad()[1] == doctest::Approx(5.0));
}

TEST_CASE("sgd: w^2 step, zero gradient leaves params unchanged") {
    nnet::Params params;
    Value w = params.add("w", Value::scalar(3.0));
    nnet::SgdOptimizer opt(0.1, 0.0);
    params.zero_grad();
    nnet::backward(nnet::mul(w, w));
    opt.step(params);
    CHECK(w.data()[0] == doctest::Approx(2.4));

    nnet::Params params2;
    Value v = params2.add("v", Value::scalar(1.25));
    params2.zero_grad();
    nnet::SgdOptimizer opt2(0.5, 0.9);
    opt2.step(params2);
    CHECK(v.data()[0] == doctest::Approx(1.25));
}

TEST_CASE("grad_check accepts a linear layer") {
    std::mt19937_64 rng(21);
    nnet::Params params;
    Value x = params.add("x", random_leaf({1, 3, 4}, rng));
    Value w = params.add("w", random_leaf({1, 4, 2}, rng));
    Value b = params.add("b", random_leaf({1, 1, 2}, rng));
    const double err = nnet::grad_check(
        [&]() { return nnet::mean_all(nnet::linear(x, w, b)); }, params);
    CHECK(err < 1e-4);
}

TEST_CASE("per-op gradients match central finite differences") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 25; ++trial) {
        nnet::Params params;
        Value x = params.add("x", random_leaf({1, 4, 3}, rng));
        Value w = params.add("w", random_leaf({1, 3, 4}, rng));
        Value b = params.add("b", random_leaf({1, 1, 4}, rng));
        Value slope = params.add("slope", Value::scalar(0.3));
        Value kernel = params.add("kernel", random_leaf({1, 1, 3}, rng));
        Value kt = params.add("kt", random_leaf({3, 4, 2}, rng));
        Value s = params.add("s", random_leaf({1, 4, 1}, rng, 0.5, 2.0));

        const double err = nnet::grad_check(
            [&]() {
                Value h = nnet::prelu(nnet::linear(x, w, b), slope);
                Value sm = nnet::softmax_rows(nnet::matmul_nt(h, h), 2.0);
                Value cv = nnet::conv_asym(sm, kernel, nnet::ConvAxis::kRows);
                Value cv2 = nnet::conv_asym(cv, kernel, nnet::ConvAxis::kCols);
                Value dv = nnet::div_rows(cv2, s);
                Value sg = nnet::sigmoid(dv);
                Value ct = nnet::conv_time(sg, kt);
                Value pooled = nnet::pool_mean(ct);
                Value cat = nnet::concat_cols(pooled, pooled);
                Value tiled = nnet::tile_rows(cat, 3);
                return nnet::mean_all(nnet::mul(tiled, tiled));
            },
            params);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("log, clamp and column clamp gradients") {
    std::mt19937_64 rng(99);
    nnet::Params params;
    Value x = params.add("x", random_leaf({1, 3, 4}, rng, 0.2, 0.8));
    const double err = nnet::grad_check(
        [&]() {
            Value c = nnet::clamp(x, 1e-7, 1.0 - 1e-7);
            Value lg = nnet::log_elem(c);
            Value cm = nnet::clamp_min_cols(nnet::scale(lg, -1.0), {2, 3}, 0.5);
            return nnet::mean_all(cm);
        },
        params);
    CHECK(err < 1e-4);
}

TEST_CASE("iou_rows matches box arithmetic and differentiates") {
    nnet::Params params;
    Value pred = params.add(
        "pred", Value::leaf({1, 2, 4}, {10.0, 10.0, 4.0, 4.0, 0.0, 0.0, 2.0, 2.0}));
    const std::vector<double> ref = {11.0, 10.0, 4.0, 4.0, 50.0, 50.0, 2.0, 2.0};
    Value ious = nnet::iou_rows(pred, ref);
    // overlap 3x4 = 12, union 32 - 12 = 20
    CHECK(ious.data()[0] == doctest::Approx(12.0 / 20.0));
    CHECK(ious.data()[1] == doctest::Approx(0.0));

    // the gradient check avoids exact min/max ties, where the one-sided
    // subgradient and the central difference legitimately disagree
    nnet::Params gparams;
    Value gpred = gparams.add(
        "pred",
        Value::leaf({1, 2, 4}, {10.2, 9.9, 4.1, 3.7, 30.0, 30.0, 2.5, 2.5}));
    const std::vector<double> gref = {11.0, 10.0, 4.0, 4.0, 50.0, 50.0, 2.0, 2.0};
    const double err = nnet::grad_check(
        [&]() { return nnet::mean_all(nnet::iou_rows(gpred, gref)); }, gparams);
    CHECK(err < 1e-4);
}

TEST_CASE("checkpoint round-trip is bit exact") {
    std::mt19937_64 rng(5);
    nnet::Params params;
    params.add("alpha/w", random_leaf({1, 3, 3}, rng, -1e3, 1e3));
    params.add("alpha/b", Value::leaf({1, 1, 2}, {1.0 / 3.0, 1e-17}));
    params.add("k", random_leaf({3, 2, 4}, rng));
    const std::string path = "/tmp/crowdtrack_ckpt_test.txt";
    nnet::save_params(params, path);
    nnet::Params loaded = nnet::load_params(path);
    for (const auto& [name, v] : params.items()) {
        REQUIRE(loaded.contains(name));
        CHECK(loaded.get(name).data() == v.data());
        CHECK(loaded.get(name).shape() == v.shape());
    }
    const std::string path2 = "/tmp/crowdtrack_ckpt_test2.txt";
    nnet::save_params(loaded, path2);
    std::ifstream f1(path), f2(path2);
    const std::string s1((std::istreambuf_iterator<char>(f1)),
                         std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)),
                         std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(!s1.empty());
}
