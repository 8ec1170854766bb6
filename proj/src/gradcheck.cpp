#include "hal/gradcheck.hpp"

namespace hal {

using namespace gradcheck_detail;

double gradcheck_conv2d(Rng& rng, int configs) {
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        std::size_t b = 1 + rng.uniform_int(2), ci = 1 + rng.uniform_int(3);
        std::size_t f = 1 + rng.uniform_int(4), hw = 4 + rng.uniform_int(3);
        // even extents with stride 2 exercise the floor-semantics trim path
        std::size_t stride = 1 + rng.uniform_int(2);
        Conv2d<double> conv(ci, f, 3, stride, 1, rng);
        Tensor<double> x = random_tensor({b, ci, hw, hw}, rng);
        Tensor<double> y = conv.forward(x);
        Tensor<double> g = random_tensor(y.shape, rng);
        std::vector<ParamRef<double>> ps;
        conv.params(ps, "conv");
        std::fill(ps[0].grad->data.begin(), ps[0].grad->data.end(), 0.0);
        Tensor<double> gx = conv.backward(g);
        auto loss = [&] { return weighted_sum(g, conv.forward(x)); };
        worst = std::max(worst, fd_compare(x, gx, loss));
        worst = std::max(worst, fd_compare(*ps[0].value, *ps[0].grad, loss));
    }
    return worst;
}

double gradcheck_batchnorm(Rng& rng, int configs) {
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        std::size_t b = 3 + rng.uniform_int(3), ch = 1 + rng.uniform_int(3);
        std::size_t hw = 2 + rng.uniform_int(2);
        BatchNorm2d<double> bn(ch);
        Tensor<double> x = random_tensor({b, ch, hw, hw}, rng);
        Tensor<double> y = bn.forward(x, true);
        Tensor<double> g = random_tensor(y.shape, rng);
        std::vector<ParamRef<double>> ps;
        bn.params(ps, "bn");
        for (auto& p : ps) std::fill(p.grad->data.begin(), p.grad->data.end(), 0.0);
        Tensor<double> gx = bn.backward(g);
        auto loss = [&] { return weighted_sum(g, bn.forward(x, true)); };
        worst = std::max(worst, fd_compare(x, gx, loss));
        worst = std::max(worst, fd_compare(*ps[0].value, *ps[0].grad, loss));
        worst = std::max(worst, fd_compare(*ps[1].value, *ps[1].grad, loss));
    }
    return worst;
}

double gradcheck_relu(Rng& rng, int configs) {
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        ReLU<double> relu;
        Tensor<double> x = random_tensor_off_kink({4, 8}, rng);
        Tensor<double> y = relu.forward(x);
        Tensor<double> g = random_tensor(y.shape, rng);
        Tensor<double> gx = relu.backward(g);
        auto loss = [&] { return weighted_sum(g, relu.forward(x)); };
        worst = std::max(worst, fd_compare(x, gx, loss));
    }
    return worst;
}

double gradcheck_linear(Rng& rng, int configs) {
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        std::size_t b = 1 + rng.uniform_int(4), in = 2 + rng.uniform_int(6),
                    out = 1 + rng.uniform_int(5);
        Linear<double> fc(in, out, rng);
        Tensor<double> x = random_tensor({b, in}, rng);
        Tensor<double> y = fc.forward(x);
        Tensor<double> g = random_tensor(y.shape, rng);
        std::vector<ParamRef<double>> ps;
        fc.params(ps, "fc");
        for (auto& p : ps) std::fill(p.grad->data.begin(), p.grad->data.end(), 0.0);
        Tensor<double> gx = fc.backward(g);
        auto loss = [&] { return weighted_sum(g, fc.forward(x)); };
        worst = std::max(worst, fd_compare(x, gx, loss));
        worst = std::max(worst, fd_compare(*ps[0].value, *ps[0].grad, loss));
        worst = std::max(worst, fd_compare(*ps[1].value, *ps[1].grad, loss));
    }
    return worst;
}

double gradcheck_global_avg_pool(Rng& rng, int configs) {
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        GlobalAvgPool<double> pool;
        Tensor<double> x = random_tensor({2, 3, 3, 3}, rng);
        Tensor<double> y = pool.forward(x);
        Tensor<double> g = random_tensor(y.shape, rng);
        Tensor<double> gx = pool.backward(g);
        auto loss = [&] { return weighted_sum(g, pool.forward(x)); };
        worst = std::max(worst, fd_compare(x, gx, loss));
    }
    return worst;
}

double gradcheck_residual_block(Rng& rng, int configs) {
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        std::size_t b = 2 + rng.uniform_int(2), ci = 2 + rng.uniform_int(2);
        bool widen = c % 2 == 1;  // alternate identity and projection shortcut
        std::size_t co = widen ? ci * 2 : ci;
        std::size_t stride = widen ? 2 : 1;
        PreactResidualBlock<double> blk(ci, co, stride, rng);
        std::size_t hw = 4 + rng.uniform_int(2);  // both parities, both strides
        Tensor<double> x = random_tensor({b, ci, hw, hw}, rng);
        Tensor<double> y = blk.forward(x, true);
        Tensor<double> g = random_tensor(y.shape, rng);
        std::vector<ParamRef<double>> ps;
        blk.params(ps, "blk");
        for (auto& p : ps) std::fill(p.grad->data.begin(), p.grad->data.end(), 0.0);
        Tensor<double> gx = blk.backward(g);
        auto loss = [&] { return weighted_sum(g, blk.forward(x, true)); };
        worst = std::max(worst, fd_compare(x, gx, loss));
        for (auto& p : ps) worst = std::max(worst, fd_compare(*p.value, *p.grad, loss));
    }
    return worst;
}

double gradcheck_softmax_ce(Rng& rng, int configs) {
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        std::size_t b = 1 + rng.uniform_int(6), k = 10;
        Tensor<double> logits = random_tensor({b, k}, rng, 2.0);
        std::vector<int> labels(b);
        for (auto& l : labels) l = static_cast<int>(rng.uniform_int(k));
        auto [l0, analytic] = softmax_cross_entropy(logits, labels);
        auto loss = [&] { return softmax_cross_entropy(logits, labels).first; };
        worst = std::max(worst, fd_compare(logits, analytic, loss));
    }
    return worst;
}

double gradcheck_aux_block(Rng& rng, int configs, bool corrupt_chi) {
    double worst = 0.0;
    int done = 0;
    while (done < configs) {
        std::size_t l = 2 + rng.uniform_int(10), s = 2 + rng.uniform_int(4);
        std::size_t b = 1 + rng.uniform_int(8);
        AuxBlock<double> aux(l, s, rng);
        aux.corrupt_chi_for_test = corrupt_chi;
        Tensor<double> y_prev = random_tensor({b, l}, rng);
        Tensor<double> x_star({b, s});
        for (std::size_t r = 0; r < b; ++r) x_star.at(r, rng.uniform_int(s)) = 1.0;
        // stay away from the |.| kinks: need min_j |z - x*| > 1e-3
        Tensor<double> out = aux.forward(y_prev, x_star);
        double margin = 1e300;
        for (std::size_t r = 0; r < b; ++r) {
            for (std::size_t j = 0; j < s; ++j) {
                double z = 0.0;
                for (std::size_t i = 0; i < l; ++i)
                    z += aux.weights().at(i, j) * y_prev.at(r, i);
                margin = std::min(margin, std::fabs(z - x_star.at(r, j)));
            }
        }
        if (margin <= 1e-3) continue;
        ++done;
        Tensor<double> g = random_tensor(out.shape, rng);
        std::vector<ParamRef<double>> ps;
        aux.params(ps, "aux");
        std::fill(ps[0].grad->data.begin(), ps[0].grad->data.end(), 0.0);
        Tensor<double> gy = aux.backward(g);
        auto loss = [&] { return weighted_sum(g, aux.forward(y_prev, x_star)); };
        worst = std::max(worst, fd_compare(y_prev, gy, loss));
        worst = std::max(worst, fd_compare(*ps[0].value, *ps[0].grad, loss));
    }
    return worst;
}

std::vector<GradCheckEntry> run_gradcheck(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<GradCheckEntry> report;
    auto add = [&](const std::string& name, double err, double threshold) {
        report.push_back({name, err, threshold, err < threshold});
    };
    add("conv2d", gradcheck_conv2d(rng), 1e-5);
    add("batchnorm", gradcheck_batchnorm(rng), 1e-5);
    add("relu", gradcheck_relu(rng), 1e-5);
    add("linear", gradcheck_linear(rng), 1e-5);
    add("global_avg_pool", gradcheck_global_avg_pool(rng), 1e-5);
    add("residual_block", gradcheck_residual_block(rng), 1e-5);
    add("softmax_cross_entropy", gradcheck_softmax_ce(rng), 1e-5);
    add("aux_block", gradcheck_aux_block(rng), 1e-6);
    return report;
}

}  // namespace hal
