#include <doctest.h>

#include <vector>

#include "segforge/kernels.hpp"
#include "segforge/ops.hpp"
#include "segforge/random.hpp"

using namespace segforge;
namespace k = segforge::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform_real(rng, -1, 1);
    return v;
}

// Restores the backend on scope exit.
struct BackendGuard {
    k::Backend saved = k::active_backend();
    ~BackendGuard() { k::set_active_backend(saved); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("serial and parallel conv kernels agree bit for bit") {
    Rng rng(1);
    for (std::size_t dil : {1u, 2u, 4u}) {
        const k::ConvShape s{5, 7, 23, 3, 3, dil};
        const auto x = random_vec(rng, s.input_size());
        const auto w = random_vec(rng, s.weight_size());
        const auto b = random_vec(rng, s.out_channels);
        const auto dy = random_vec(rng, s.output_size());
        std::vector<double> y1(s.output_size(), 9), y2(s.output_size(), -9);
        k::serial::conv1d_forward(x, w, b, y1, s);
        k::parallel::conv1d_forward(x, w, b, y2, s);
        CHECK(y1 == y2);
        std::vector<double> dx1(s.input_size(), 5), dx2(s.input_size(), 6);
        k::serial::conv1d_grad_input(dy, w, dx1, s);
        k::parallel::conv1d_grad_input(dy, w, dx2, s);
        CHECK(dx1 == dx2);
        std::vector<double> dw1(s.weight_size(), 1), dw2(s.weight_size(), 2);
        k::serial::conv1d_grad_weight(dy, x, dw1, s);
        k::parallel::conv1d_grad_weight(dy, x, dw2, s);
        CHECK(dw1 == dw2);
        std::vector<double> db1(s.out_channels, 3), db2(s.out_channels, 4);
        k::serial::conv1d_grad_bias(dy, db1, s);
        k::parallel::conv1d_grad_bias(dy, db2, s);
        CHECK(db1 == db2);
    }
}

TEST_CASE("serial and parallel graph and matmul kernels agree bit for bit") {
    Rng rng(2);
    const k::GraphShape g{37, 6};
    const auto x = random_vec(rng, g.rows * g.joints);
    const auto a = random_vec(rng, g.joints * g.joints);
    const auto dy = random_vec(rng, g.rows * g.joints);
    std::vector<double> y1(x.size()), y2(x.size(), 1.0);
    k::serial::graph_forward(x, a, y1, g);
    k::parallel::graph_forward(x, a, y2, g);
    CHECK(y1 == y2);
    k::serial::graph_grad_input(dy, a, y1, g);
    k::parallel::graph_grad_input(dy, a, y2, g);
    CHECK(y1 == y2);
    std::vector<double> da1(a.size()), da2(a.size(), 1.0);
    k::serial::graph_grad_matrix(dy, x, da1, g);
    k::parallel::graph_grad_matrix(dy, x, da2, g);
    CHECK(da1 == da2);

    const k::MatmulShape m{9, 13, 11};
    const auto ma = random_vec(rng, m.m * m.k), mb = random_vec(rng, m.k * m.n), dc = random_vec(rng, m.m * m.n);
    std::vector<double> c1(m.m * m.n), c2(m.m * m.n, 2.0);
    k::serial::matmul(ma, mb, c1, m);
    k::parallel::matmul(ma, mb, c2, m);
    CHECK(c1 == c2);
    std::vector<double> ga1(ma.size()), ga2(ma.size(), 3.0);
    k::serial::matmul_grad_a(dc, mb, ga1, m);
    k::parallel::matmul_grad_a(dc, mb, ga2, m);
    CHECK(ga1 == ga2);
    std::vector<double> gb1(mb.size()), gb2(mb.size(), 3.0);
    k::serial::matmul_grad_b(dc, ma, gb1, m);
    k::parallel::matmul_grad_b(dc, ma, gb2, m);
    CHECK(gb1 == gb2);
}

TEST_CASE("matmul kernel matches the definition") {
    const k::MatmulShape m{2, 3, 2};
    const std::vector<double> a{1, 2, 3, 4, 5, 6}, b{7, 8, 9, 10, 11, 12};
    std::vector<double> c(4);
    k::serial::matmul(a, b, c, m);
    CHECK(c == std::vector<double>{58, 64, 139, 154});
}

TEST_CASE("ops give identical results on either backend") {
    BackendGuard guard;
    Rng rng(3);
    auto x = ad::DiffArray::parameter({4, 10, 5}, random_vec(rng, 200));
    auto w = ad::DiffArray::parameter({6, 4, 3}, random_vec(rng, 72));
    auto adj = ad::DiffArray::constant({5, 5}, random_vec(rng, 25));
    auto mask = ad::DiffArray::parameter({5, 5}, random_vec(rng, 25));
    auto run = [&] {
        std::vector<ad::DiffArray> ps{x, w, mask};
        ad::reset_grads(ps);
        auto y = ad::conv1d_dilated(ad::graph_propagate(x, adj, mask), w, ad::DiffArray{}, 2);
        auto loss = ad::sum(ad::mul(y, y));
        ad::backward(loss);
        std::vector<double> out(y.values().begin(), y.values().end());
        for (auto& p : ps) out.insert(out.end(), p.grad().begin(), p.grad().end());
        return out;
    };
    k::set_active_backend(k::Backend::serial);
    const auto s = run();
    k::set_active_backend(k::Backend::parallel);
    const auto p = run();
    CHECK(s == p);
}

}  // TEST_SUITE
