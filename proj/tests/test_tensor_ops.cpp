#include <doctest.h>

#include "hal/ops.hpp"

using namespace hal;

namespace {

// independent scalar triple-loop oracle
Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
    std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
    Tensor<double> c({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p)
                c.at(i, j) += a.at(i, p) * b.at(p, j);
    return c;
}

// independent 6-loop cross-correlation oracle (batch and filter loops outside)
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& k,
                          std::size_t stride, std::size_t pad) {
    std::size_t b = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    std::size_t f = k.shape[0], kh = k.shape[2], kw = k.shape[3];
    std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
    Tensor<double> out({b, f, oh, ow});
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t fo = 0; fo < f; ++fo)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    for (std::size_t ch = 0; ch < c; ++ch)
                        for (std::size_t ky = 0; ky < kh; ++ky)
                            for (std::size_t kx = 0; kx < kw; ++kx) {
                                long iy = (long)(oy * stride + ky) - (long)pad;
                                long ix = (long)(ox * stride + kx) - (long)pad;
                                if (iy < 0 || ix < 0 || iy >= (long)h || ix >= (long)w)
                                    continue;
                                out.at(n, fo, oy, ox) +=
                                    x.at(n, ch, iy, ix) * k.at(fo, ch, ky, kx);
                            }
    return out;
}

Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.normal();
    return t;
}

double max_rel_diff(const Tensor<double>& a, const Tensor<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double denom = std::max({std::fabs(a.data[i]), std::fabs(b.data[i]), 1e-12});
        worst = std::max(worst, std::fabs(a.data[i] - b.data[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("matmul identity leaves the operand unchanged") {
    Rng rng(1);
    Tensor<double> m = random_tensor({3, 3}, rng);
    Tensor<double> id({3, 3});
    for (std::size_t i = 0; i < 3; ++i) id.at(i, i) = 1.0;
    Tensor<double> r = ops::matmul(id, m);
    for (std::size_t i = 0; i < m.data.size(); ++i) CHECK(r.data[i] == m.data[i]);
}

TEST_CASE("matmul small hand example") {
    Tensor<double> a({2, 2}, {1, 2, 3, 4});
    Tensor<double> b({2, 1}, {0, 1});
    Tensor<double> c = ops::matmul(a, b);
    CHECK(c.data[0] == 2.0);
    CHECK(c.data[1] == 4.0);
}

TEST_CASE("matmul zeros annihilate") {
    Rng rng(2);
    Tensor<double> z = Tensor<double>::zeros({2, 3});
    Tensor<double> b = random_tensor({3, 4}, rng);
    Tensor<double> c = ops::matmul(z, b);
    for (double v : c.data) CHECK(v == 0.0);
    CHECK(c.shape == std::vector<std::size_t>{2, 4});
}

TEST_CASE("matmul random against triple-loop oracle") {
    Rng rng(3);
    for (int t = 0; t < 10; ++t) {
        std::size_t m = 1 + rng.uniform_int(8), k = 1 + rng.uniform_int(8),
                    n = 1 + rng.uniform_int(8);
        Tensor<double> a = random_tensor({m, k}, rng);
        Tensor<double> b = random_tensor({k, n}, rng);
        CHECK(max_rel_diff(ops::matmul(a, b), naive_matmul(a, b)) < 1e-12);
    }
}

TEST_CASE("matmul 32-bit agrees with 64-bit oracle within 1e-4") {
    Rng rng(4);
    Tensor<double> a = random_tensor({16, 32}, rng);
    Tensor<double> b = random_tensor({32, 8}, rng);
    Tensor<float> af = a.cast<float>(), bf = b.cast<float>();
    Tensor<double> oracle = naive_matmul(a, b);
    Tensor<double> got = ops::matmul(af, bf).cast<double>();
    CHECK(max_rel_diff(got, oracle) < 1e-4);
}

TEST_CASE("matmul shape mismatch throws") {
    Tensor<double> a({2, 3});
    Tensor<double> b({4, 2});
    CHECK_THROWS_AS(ops::matmul(a, b), DimensionError);
}

TEST_CASE("conv2d 1x1 identity kernel") {
    Rng rng(5);
    Tensor<double> x = random_tensor({2, 1, 4, 4}, rng);
    Tensor<double> k = Tensor<double>::full({1, 1, 1, 1}, 1.0);
    Tensor<double> y = ops::conv2d(x, k, 1, 0);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-14));
}

TEST_CASE("conv2d all-ones 3x3 sums the window") {
    Tensor<double> x = Tensor<double>::full({1, 1, 3, 3}, 1.0);
    Tensor<double> k = Tensor<double>::full({1, 1, 3, 3}, 1.0);
    Tensor<double> y = ops::conv2d(x, k, 1, 0);
    CHECK(y.size() == 1);
    CHECK(y.data[0] == doctest::Approx(9.0));
}

TEST_CASE("conv2d random vs 6-loop oracle, fast and direct paths") {
    Rng rng(6);
    for (int t = 0; t < 8; ++t) {
        std::size_t b = 1 + rng.uniform_int(3), c = 1 + rng.uniform_int(3);
        std::size_t f = 1 + rng.uniform_int(4);
        std::size_t stride = 1 + rng.uniform_int(2), pad = rng.uniform_int(2);
        std::size_t hw = 4 + 2 * rng.uniform_int(3);
        Tensor<double> x = random_tensor({b, c, hw, hw}, rng);
        Tensor<double> k = random_tensor({f, c, 3, 3}, rng);
        if ((hw + 2 * pad - 3) % stride != 0) continue;
        Tensor<double> oracle = naive_conv(x, k, stride, pad);
        CHECK(max_rel_diff(ops::conv2d(x, k, stride, pad), oracle) < 1e-12);
        CHECK(max_rel_diff(ops::conv2d_direct(x, k, stride, pad), oracle) < 1e-12);
    }
}

TEST_CASE("conv2d padded call equals conv on explicitly padded input") {
    Rng rng(7);
    Tensor<double> x = random_tensor({1, 2, 5, 5}, rng);
    Tensor<double> k = random_tensor({3, 2, 3, 3}, rng);
    Tensor<double> a = ops::conv2d_direct(x, k, 1, 1);
    Tensor<double> b = ops::conv2d_direct(ops::pad2d(x, 1), k, 1, 0);
    CHECK(a.shape == b.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("conv2d 32-bit agrees with 64-bit oracle within 1e-4") {
    Rng rng(8);
    Tensor<double> x = random_tensor({2, 3, 8, 8}, rng);
    Tensor<double> k = random_tensor({4, 3, 3, 3}, rng);
    Tensor<double> oracle = naive_conv(x, k, 1, 1);
    Tensor<double> got = ops::conv2d(x.cast<float>(), k.cast<float>(), 1, 1).cast<double>();
    CHECK(max_rel_diff(got, oracle) < 1e-4);
}

TEST_CASE("conv2d non-integral output extent throws") {
    Tensor<double> x({1, 1, 5, 5});
    Tensor<double> k({1, 1, 2, 2});
    CHECK_THROWS_AS(ops::conv2d(x, k, 2, 0), DimensionError);
}

TEST_CASE("reduce_sum hand cases") {
    Tensor<double> a({2, 2}, {1, 2, 3, 4});
    Tensor<double> r = ops::reduce_sum(a, 1);
    CHECK(r.shape == std::vector<std::size_t>{2});
    CHECK(r.data[0] == 3.0);
    CHECK(r.data[1] == 7.0);

    Tensor<double> z = Tensor<double>::zeros({3, 4});
    for (double v : ops::reduce_sum(z, 0).data) CHECK(v == 0.0);
}

TEST_CASE("reduce_sum random vs per-row loop oracle") {
    Rng rng(9);
    Tensor<double> a = random_tensor({128, 64}, rng);
    Tensor<double> r = ops::reduce_sum(a, 1);
    for (std::size_t i = 0; i < 128; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 64; ++j) acc += a.at(i, j);
        CHECK(r.data[i] == doctest::Approx(acc).epsilon(1e-13));
    }
}

TEST_CASE("reduce_sum axis out of range throws") {
    Tensor<double> a({2, 2});
    CHECK_THROWS_AS(ops::reduce_sum(a, 2), DimensionError);
}

TEST_CASE("elementwise ops and scale_rows") {
    Tensor<double> a({2, 2}, {1, -2, 3, -4});
    Tensor<double> b({2, 2}, {2, 2, 2, 2});
    CHECK(ops::add(a, b).data == std::vector<double>{3, 0, 5, -2});
    CHECK(ops::sub(a, b).data == std::vector<double>{-1, -4, 1, -6});
    CHECK(ops::mul(a, b).data == std::vector<double>{2, -4, 6, -8});
    CHECK(ops::abs(a).data == std::vector<double>{1, 2, 3, 4});
    CHECK(ops::sign(a).data == std::vector<double>{1, -1, 1, -1});
    CHECK(ops::relu(a).data == std::vector<double>{1, 0, 3, 0});
    Tensor<double> s({2, 1}, {2, 3});
    CHECK(ops::scale_rows(a, s).data == std::vector<double>{2, -4, 9, -12});
    Tensor<double> c({2, 3});
    CHECK_THROWS_AS(ops::add(a, c), DimensionError);
}

TEST_CASE("transpose then transpose is identity") {
    Rng rng(10);
    Tensor<double> a = random_tensor({3, 5}, rng);
    Tensor<double> b = ops::transpose(ops::transpose(a));
    CHECK(b.shape == a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("pad then crop recovers the original") {
    Rng rng(11);
    Tensor<double> x = random_tensor({2, 3, 4, 4}, rng);
    Tensor<double> back = ops::crop2d(ops::pad2d(x, 4), 4, 4, 4, 4);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(back.data[i] == x.data[i]);
}

TEST_CASE("rng is reproducible under the same seed") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(43);
    CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("rng normal draws have the expected moments") {
    Rng rng(7);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    CHECK(std::fabs(sum / n) < 0.01);
    CHECK(std::fabs(sq / n - 1.0) < 0.02);
}
