#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gradcheck.hpp"
#include "vadb/nn/ops.hpp"
#include "vadb/nn/optim.hpp"
#include "vadb/nn/rng.hpp"

using namespace vadb::nn;
using vadb::testing::gradcheck;

namespace {

Tensor random_tensor(Rng& rng, int r, int c, bool requires_grad = true) {
    Tensor t = Tensor::zeros(r, c, requires_grad);
    for (auto& v : t.data()) v = rng.normal(0.0, 0.7);
    return t;
}

// contract every output against fixed weights so all entries matter
Tensor reduce(const Tensor& y, Rng& rng) {
    Tensor w = Tensor::zeros(y.rows(), y.cols());
    for (auto& v : w.data()) v = rng.normal(0.0, 1.0);
    return mean_all(hadamard(y, w));
}

}  // namespace

TEST_CASE("rng determinism and range") {
    Rng a = Rng::from_tag(7, "stream");
    Rng b = Rng::from_tag(7, "stream");
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c = Rng::from_tag(7, "other");
    CHECK(c.next_u64() != Rng::from_tag(7, "stream").next_u64());
    Rng u(3);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("matmul gradients") {
    Rng rng(11);
    Tensor a = random_tensor(rng, 3, 4);
    Tensor b = random_tensor(rng, 4, 5);
    Rng wrng(1);
    auto res = gradcheck([&] { Rng r(1); return reduce(matmul(a, b), r); },
                         {{"a", a}, {"b", b}});
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("matmul_nt gradients") {
    Rng rng(12);
    Tensor a = random_tensor(rng, 3, 4);
    Tensor b = random_tensor(rng, 6, 4);
    auto res = gradcheck([&] { Rng r(2); return reduce(matmul_nt(a, b), r); },
                         {{"a", a}, {"b", b}});
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("elementwise op gradients") {
    Rng rng(13);
    Tensor x = random_tensor(rng, 4, 3);
    Tensor y = random_tensor(rng, 4, 3);
    Tensor bias = random_tensor(rng, 1, 3);
    Tensor s = random_tensor(rng, 1, 1);

    auto check = [&](const char* name, std::function<Tensor()> f,
                     std::vector<std::pair<std::string, Tensor>> ps) {
        auto res = gradcheck(std::move(f), ps);
        INFO(name << " worst=" << res.worst_param);
        CHECK(res.max_rel_err < 1e-5);
    };

    check("add", [&] { Rng r(3); return reduce(add(x, y), r); }, {{"x", x}, {"y", y}});
    check("sub", [&] { Rng r(4); return reduce(sub(x, y), r); }, {{"x", x}, {"y", y}});
    check("add_rowvec", [&] { Rng r(5); return reduce(add_rowvec(x, bias), r); },
          {{"x", x}, {"b", bias}});
    check("hadamard", [&] { Rng r(6); return reduce(hadamard(x, y), r); },
          {{"x", x}, {"y", y}});
    check("mul_scalar", [&] { Rng r(7); return reduce(mul_scalar(x, s), r); },
          {{"x", x}, {"s", s}});
    check("tanh", [&] { Rng r(8); return reduce(tanh_elem(x), r); }, {{"x", x}});
    check("exp", [&] { Rng r(9); return reduce(exp_elem(scale(x, 0.3)), r); }, {{"x", x}});
    check("quick_gelu", [&] { Rng r(10); return reduce(quick_gelu(x), r); }, {{"x", x}});
    check("softmax", [&] { Rng r(11); return reduce(softmax_rows(x), r); }, {{"x", x}});
    check("l2norm", [&] { Rng r(12); return reduce(row_l2_normalize(x), r); }, {{"x", x}});
    check("mean_rows", [&] { Rng r(13); return reduce(mean_rows(x), r); }, {{"x", x}});
    check("slice_cols", [&] { Rng r(14); return reduce(slice_cols(x, 1, 3), r); }, {{"x", x}});
}

TEST_CASE("relu gradient away from kink") {
    Rng rng(14);
    Tensor x = random_tensor(rng, 5, 4);
    for (auto& v : x.data())
        if (std::fabs(v) < 1e-2) v = 0.5;  // keep clear of the nondifferentiable point
    auto res = gradcheck([&] { Rng r(15); return reduce(relu(x), r); }, {{"x", x}});
    CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("layer_norm gradients") {
    Rng rng(15);
    Tensor x = random_tensor(rng, 4, 6);
    Tensor g = random_tensor(rng, 1, 6);
    Tensor b = random_tensor(rng, 1, 6);
    auto res = gradcheck([&] { Rng r(16); return reduce(layer_norm(x, g, b), r); },
                         {{"x", x}, {"g", g}, {"b", b}});
    CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("gather/concat gradients") {
    Rng rng(16);
    Tensor table = random_tensor(rng, 7, 4);
    Tensor x = random_tensor(rng, 5, 4);
    std::vector<int> ids = {1, 3, 3, 0, 6};
    auto r1 = gradcheck([&] { Rng r(17); return reduce(embedding(table, ids), r); },
                        {{"table", table}});
    CHECK(r1.max_rel_err < 1e-5);
    std::vector<int> idx = {4, 0, 2, 2};
    auto r2 = gradcheck([&] { Rng r(18); return reduce(select_rows(x, idx), r); },
                        {{"x", x}});
    CHECK(r2.max_rel_err < 1e-5);
    auto r3 = gradcheck([&] { Rng r(19); return reduce(concat_rows({x, x}), r); },
                        {{"x", x}});
    CHECK(r3.max_rel_err < 1e-5);
    Tensor s = random_tensor(rng, 5, 1);
    auto r4 = gradcheck([&] { Rng r(20); return reduce(rowscale(x, s), r); },
                        {{"x", x}, {"s", s}});
    CHECK(r4.max_rel_err < 1e-5);
}

TEST_CASE("attention gradients with mask") {
    Rng rng(17);
    const int B = 2, L = 4, D = 6, H = 2;
    Tensor q = random_tensor(rng, B * L, D);
    Tensor k = random_tensor(rng, B * L, D);
    Tensor v = random_tensor(rng, B * L, D);
    std::vector<std::uint8_t> mask = {1, 1, 1, 0, 1, 1, 0, 0};
    auto res = gradcheck(
        [&] {
            Rng r(21);
            return reduce(multihead_attention(q, k, v, B, L, H, mask), r);
        },
        {{"q", q}, {"k", k}, {"v", v}});
    CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("attention ignores masked keys") {
    Rng rng(18);
    const int B = 1, L = 4, D = 6, H = 2;
    Tensor q = random_tensor(rng, B * L, D, false);
    Tensor k = random_tensor(rng, B * L, D, false);
    Tensor v = random_tensor(rng, B * L, D, false);
    std::vector<std::uint8_t> mask = {1, 1, 0, 0};
    Tensor out1 = multihead_attention(q, k, v, B, L, H, mask);

    // mutate the masked keys/values arbitrarily
    for (int j = 2; j < 4; ++j)
        for (int e = 0; e < D; ++e) {
            k.data()[static_cast<std::size_t>(j) * D + e] = 1e6;
            v.data()[static_cast<std::size_t>(j) * D + e] = -1e6;
        }
    Tensor out2 = multihead_attention(q, k, v, B, L, H, mask);
    for (int i = 0; i < 2 * D; ++i)  // unmasked output rows
        CHECK(out1.data()[i] == out2.data()[i]);
}

TEST_CASE("contrastive loss gradients") {
    Rng rng(19);
    Tensor s = random_tensor(rng, 4, 4);
    auto res = gradcheck([&] { return symmetric_contrastive_loss(s); }, {{"s", s}});
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("patch_embed3d gradients and center-init equivalence") {
    Rng rng(20);
    const int T = 3, C = 3, Hh = 8, W = 8, P = 4, TK = 3, D = 5;
    std::vector<double> frames(static_cast<std::size_t>(T) * C * Hh * W);
    for (auto& v : frames) v = rng.normal(0.0, 1.0);
    Tensor kernel = random_tensor(rng, D, C * TK * P * P);
    auto res = gradcheck(
        [&] {
            Rng r(22);
            return reduce(patch_embed3d(frames, T, C, Hh, W, kernel, TK, P), r);
        },
        {{"kernel", kernel}});
    CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("grad guard detaches") {
    Rng rng(21);
    Tensor x = random_tensor(rng, 2, 2);
    {
        GradGuard off(false);
        Tensor y = mean_all(hadamard(x, x));
        CHECK_FALSE(y.requires_grad());
    }
    Tensor y = mean_all(hadamard(x, x));
    CHECK(y.requires_grad());
}

TEST_CASE("adam step and gradient clipping") {
    ParamStore store;
    Tensor w = store.create("w", 2, 2);
    w.data() = {1.0, 2.0, 3.0, 4.0};
    // fabricate a gradient with known norm 10
    w.grad() = {6.0, 0.0, 0.0, 8.0};
    const double pre = store.clip_grad_norm(1.0);
    CHECK(pre == doctest::Approx(10.0));
    CHECK(store.grad_norm() <= 1.0 + 1e-6);

    Adam opt(store, {}, {"w"}, 0.5);
    CHECK(opt.group_lr(0, 1e-2) == doctest::Approx(5e-3));
    const double before = w.data()[0];
    opt.step(1e-2);
    CHECK(w.data()[0] != before);
    CHECK(w.data()[1] == 2.0);  // zero gradient: first moment stays zero
}
