#include <catch2/catch_amalgamated.hpp>

#include "uavnav/core/adam.hpp"
#include "uavnav/core/conv.hpp"
#include "uavnav/core/gradient_check.hpp"
#include "uavnav/core/nn.hpp"
#include "uavnav/core/rng.hpp"
#include "uavnav/core/tensor.hpp"

using namespace uavnav;
using namespace uavnav::ad;

namespace {

// Direct nested-loop convolution, independent of the im2col path.
std::vector<double> conv2d_oracle(const std::vector<double>& x, int c, int h, int w,
                                  const std::vector<double>& k, int o, int kh, int kw, int stride,
                                  int pad, int& oh, int& ow) {
    oh = (h + 2 * pad - kh) / stride + 1;
    ow = (w + 2 * pad - kw) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(o) * oh * ow, 0.0);
    for (int oc = 0; oc < o; ++oc)
        for (int oi = 0; oi < oh; ++oi)
            for (int oj = 0; oj < ow; ++oj) {
                double s = 0.0;
                for (int ic = 0; ic < c; ++ic)
                    for (int ki = 0; ki < kh; ++ki)
                        for (int kj = 0; kj < kw; ++kj) {
                            const int si = oi * stride - pad + ki;
                            const int sj = oj * stride - pad + kj;
                            if (si < 0 || si >= h || sj < 0 || sj >= w) continue;
                            s += x[(static_cast<std::size_t>(ic) * h + si) * w + sj] *
                                 k[((static_cast<std::size_t>(oc) * c + ic) * kh + ki) * kw + kj];
                        }
                out[(static_cast<std::size_t>(oc) * oh + oi) * ow + oj] = s;
            }
    return out;
}

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
    std::vector<double> v(static_cast<std::size_t>(numel(shape)));
    for (auto& x : v) x = rng.normal();
    return requires_grad ? Tensor::param(shape, std::move(v)) : Tensor::from(shape, std::move(v));
}

}  // namespace

TEST_CASE("matmul of 1x1 tensors multiplies scalars and chains gradients") {
    Tensor a = Tensor::param({1, 1}, {3.0});
    Tensor b = Tensor::param({1, 1}, {-2.5});
    Tensor c = matmul(a, b);
    REQUIRE(c.values()[0] == Catch::Approx(-7.5));
    sum(c).backward();
    REQUIRE(a.grad()[0] == Catch::Approx(-2.5));
    REQUIRE(b.grad()[0] == Catch::Approx(3.0));
}

TEST_CASE("relu forward and gradient at both sides of the kink") {
    Tensor x = Tensor::param({2}, {-1.0, 2.0});
    Tensor y = relu(x);
    REQUIRE(y.values()[0] == 0.0);
    REQUIRE(y.values()[1] == 2.0);
    sum(y).backward();
    REQUIRE(x.grad()[0] == 0.0);
    REQUIRE(x.grad()[1] == 1.0);
}

TEST_CASE("conv2d with an all-ones 3x3 kernel sums each window") {
    Rng rng(11);
    std::vector<double> img(16);
    for (auto& v : img) v = rng.uniform();
    Tensor x = Tensor::from({1, 1, 4, 4}, img);
    Tensor k = Tensor::from({1, 1, 3, 3}, std::vector<double>(9, 1.0));
    Tensor y = conv2d(x, k, 1, 0);
    REQUIRE(y.shape() == Shape{1, 1, 2, 2});
    for (int oi = 0; oi < 2; ++oi)
        for (int oj = 0; oj < 2; ++oj) {
            double expect = 0.0;
            for (int di = 0; di < 3; ++di)
                for (int dj = 0; dj < 3; ++dj) expect += img[(oi + di) * 4 + (oj + dj)];
            REQUIRE(y.values()[oi * 2 + oj] == Catch::Approx(expect).margin(1e-12));
        }
}

TEST_CASE("conv2d matches the nested-loop oracle, strided and padded") {
    Rng rng(7);
    const int c = 3, h = 9, w = 7, o = 4, kh = 3, kw = 3, stride = 2, pad = 1;
    Tensor x = random_tensor({2, c, h, w}, rng);
    Tensor k = random_tensor({o, c, kh, kw}, rng);
    Tensor y = conv2d(x, k, stride, pad);
    int oh = 0, ow = 0;
    for (int n = 0; n < 2; ++n) {
        std::vector<double> xn(x.values().begin() + n * c * h * w,
                               x.values().begin() + (n + 1) * c * h * w);
        auto expect = conv2d_oracle(xn, c, h, w, k.values(), o, kh, kw, stride, pad, oh, ow);
        for (std::size_t i = 0; i < expect.size(); ++i)
            REQUIRE(y.values()[n * expect.size() + i] == Catch::Approx(expect[i]).margin(1e-12));
    }
    REQUIRE(y.shape() == Shape{2, o, oh, ow});
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
    // <conv_transpose(x, w), y> == <x, conv2d(y, w)>; the [ci, co, kh, kw]
    // weight doubles as a [o=ci, c=co] conv kernel in the reverse direction.
    Rng rng(13);
    const int stride = 2, pad = 1;
    Tensor w = random_tensor({3, 2, 4, 4}, rng);
    Tensor x = random_tensor({1, 3, 5, 5}, rng);
    Tensor up = conv_transpose2d(x, w, stride, pad);
    REQUIRE(up.shape() == Shape{1, 2, 10, 10});
    Tensor y = random_tensor({1, 2, 10, 10}, rng);
    Tensor down = conv2d(y, w, stride, pad);
    REQUIRE(down.shape() == x.shape());
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < up.values().size(); ++i) lhs += up.values()[i] * y.values()[i];
    for (std::size_t i = 0; i < down.values().size(); ++i) rhs += down.values()[i] * x.values()[i];
    REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("backward of sum gives all-ones gradient") {
    Rng rng(3);
    Tensor x = random_tensor({3, 5}, rng, true);
    sum(x).backward();
    for (double g : x.grad()) REQUIRE(g == 1.0);
}

TEST_CASE("backward of mean of squares gives 2x/n") {
    Tensor x = Tensor::param({4}, {1.0, -2.0, 3.0, 0.5});
    mean(square(x)).backward();
    for (int i = 0; i < 4; ++i)
        REQUIRE(x.grad()[i] == Catch::Approx(2.0 * x.values()[i] / 4.0));
}

TEST_CASE("three-layer network gradient agrees with central differences") {
    Rng rng(21);
    Linear l1(6, 8, rng), l2(8, 8, rng), l3(8, 1, rng);
    Tensor x = random_tensor({2, 6}, rng, true);
    auto f = [&](const Tensor& in) {
        return mean(square(l3(ad::tanh(l2(relu(l1(in)))))));
    };
    REQUIRE(gradient_check(f, x, 1e-5) < 1e-4);
}

TEST_CASE("non-scalar backward is a contract error") {
    Tensor x = Tensor::param({3}, {1, 2, 3});
    REQUIRE_THROWS_AS(x.backward(), ContractError);
}

TEST_CASE("shape mismatch errors name both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 5});
    try {
        add(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("[2x3]") != std::string::npos);
        REQUIRE(msg.find("[4x5]") != std::string::npos);
    }
    REQUIRE_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("gradients accumulate additively across uses and across backward calls") {
    Tensor x = Tensor::param({2}, {1.0, 2.0});
    Tensor once = sum(x);
    Tensor twice = add(sum(x), sum(x));
    once.backward();
    std::vector<double> g1 = x.grad();
    x.zero_grad();
    twice.backward();
    for (int i = 0; i < 2; ++i) REQUIRE(x.grad()[i] == 2.0 * g1[i]);
    // repeated backward without zeroing keeps adding
    twice.backward();
    for (int i = 0; i < 2; ++i) REQUIRE(x.grad()[i] == 4.0 * g1[i]);
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
    Tensor p = Tensor::param({3}, {1.0, 2.0, 3.0});
    Adam opt({p}, {.lr = 0.1});
    const auto before = p.values();
    for (int i = 0; i < 5; ++i) {
        opt.zero_grad();
        opt.step();
    }
    REQUIRE(p.values() == before);
}

TEST_CASE("adam first step with unit gradient moves by about -lr") {
    // t=1: mhat = g, vhat = g^2, delta = -lr * g / (|g| + eps)
    Tensor p = Tensor::param({1}, {0.0});
    Adam opt({p}, {.lr = 0.1});
    p.grad()[0] = 1.0;
    opt.step();
    REQUIRE(p.values()[0] == Catch::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("parameter groups with different learning rates update independently") {
    Tensor a = Tensor::param({1}, {0.0});
    Tensor b = Tensor::param({1}, {0.0});
    Adam fast({a}, {.lr = 0.1});
    Adam slow({b}, {.lr = 0.001});
    a.grad()[0] = 1.0;
    b.grad()[0] = 1.0;
    fast.step();
    slow.step();
    REQUIRE(a.values()[0] == Catch::Approx(-0.1).epsilon(1e-6));
    REQUIRE(b.values()[0] == Catch::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("gradient_check on closed-form cases") {
    Tensor x = Tensor::param({3}, {1.0, 2.0, 3.0});
    auto sum_sq = [](const Tensor& t) { return sum(square(t)); };
    REQUIRE(gradient_check(sum_sq, x, 1e-5) < 1e-6);

    auto constant = [](const Tensor& t) { return mul(sum(t), Tensor::scalar(0.0)); };
    REQUIRE(gradient_check(constant, x, 1e-5) == 0.0);

    Rng rng(5);
    Tensor y = random_tensor({6}, rng, true);
    auto sum_tanh = [](const Tensor& t) { return sum(ad::tanh(t)); };
    REQUIRE(gradient_check(sum_tanh, y, 1e-5) < 1e-4);
}

TEST_CASE("elementwise and shape ops agree with finite differences") {
    Rng rng(17);
    auto check = [&](auto f) {
        Tensor x = random_tensor({2, 6}, rng, true);
        REQUIRE(gradient_check(f, x, 1e-6) < 1e-4);
    };
    check([](const Tensor& t) { return sum(softplus(t)); });
    check([](const Tensor& t) { return sum(ad::exp(scale(t, 0.3))); });
    check([](const Tensor& t) { return sum(ad::log(add_scalar(square(t), 1.0))); });
    check([](const Tensor& t) { return sum(sigmoid(t)); });
    check([](const Tensor& t) { return mean(square(slice(t, 1, 1, 3))); });
    check([](const Tensor& t) {
        return sum(square(concat({slice(t, 1, 0, 2), slice(t, 1, 3, 2)}, 1)));
    });
    check([](const Tensor& t) { return sum(square(reshape(t, {3, 4}))); });
    check([](const Tensor& t) { return sum(sum_rows(square(t))); });
    check([](const Tensor& t) { return sum(minimum(t, scale(t, -1.0))); });
    check([](const Tensor& t) { return sum(mul(t, add_scalar(t, 2.0))); });
    check([](const Tensor& t) { return sum(sub(relu(t), scale(t, 0.5))); });
}

TEST_CASE("clamp clips values and blocks gradients outside the band") {
    Tensor x = Tensor::param({3}, {-5.0, 0.5, 7.0});
    Tensor y = clamp(x, -1.0, 2.0);
    REQUIRE(y.values() == std::vector<double>{-1.0, 0.5, 2.0});
    sum(y).backward();
    REQUIRE(x.grad() == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("conv gradients agree with finite differences") {
    Rng rng(23);
    Tensor x = random_tensor({1, 2, 6, 6}, rng, true);
    Conv2dLayer conv(2, 3, 3, 2, 1, rng);
    auto f = [&](const Tensor& in) { return mean(square(conv(in))); };
    REQUIRE(gradient_check(f, x, 1e-5) < 1e-4);

    auto fw = [&](const Tensor& w) {
        return mean(square(conv2d(x, w, conv.b, conv.stride, conv.pad)));
    };
    REQUIRE(gradient_check(fw, conv.w, 1e-5) < 1e-4);

    Tensor z = random_tensor({1, 3, 4, 4}, rng, true);
    ConvTranspose2dLayer up(3, 2, 4, 2, 1, rng);
    auto ft = [&](const Tensor& in) { return mean(square(up(in))); };
    REQUIRE(gradient_check(ft, z, 1e-5) < 1e-4);
    auto ftw = [&](const Tensor& w) {
        return mean(square(conv_transpose2d(z, w, up.b, up.stride, up.pad)));
    };
    REQUIRE(gradient_check(ftw, up.w, 1e-5) < 1e-4);
}

TEST_CASE("identical seeds give bit-identical forward and backward results") {
    auto run = [] {
        Rng rng(99);
        Linear l1(4, 6, rng), l2(6, 1, rng);
        Tensor x = random_tensor({3, 4}, rng, true);
        Tensor loss = mean(square(l2(relu(l1(x)))));
        loss.backward();
        std::vector<double> out = {loss.values()[0]};
        out.insert(out.end(), x.grad().begin(), x.grad().end());
        out.insert(out.end(), l1.w.grad().begin(), l1.w.grad().end());
        return out;
    };
    REQUIRE(run() == run());
}

TEST_CASE("soft_update blends parameters") {
    Tensor online = Tensor::param({1}, {2.0});
    Tensor target = Tensor::param({1}, {1.0});
    std::vector<Tensor> tgt{target};
    soft_update({online}, tgt, 0.01);
    REQUIRE(target.values()[0] == Catch::Approx(1.01));
    soft_update({online}, tgt, 1.0);
    REQUIRE(target.values()[0] == 2.0);
    const double before = target.values()[0];
    soft_update({online}, tgt, 0.0);
    REQUIRE(target.values()[0] == before);
}

TEST_CASE("no-grad mode records no graph") {
    Tensor x = Tensor::param({2}, {1.0, 2.0});
    NoGradGuard guard;
    Tensor y = sum(square(x));
    REQUIRE_FALSE(y.requires_grad());
}
