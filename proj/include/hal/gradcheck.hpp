#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hal/aux_block.hpp"
#include "hal/layers.hpp"
#include "hal/network.hpp"

namespace hal {

struct GradCheckEntry {
    std::string layer;
    double max_rel_err;
    double threshold;
    bool pass;
};

namespace gradcheck_detail {

inline double max_abs(const Tensor<double>& t) {
    double m = 0.0;
    for (double v : t.data) m = std::max(m, std::fabs(v));
    return m;
}

/// Central finite differences of loss_eval wrt every element of x,
/// compared against the analytic gradient. Returns max |a-n| / ||n||_inf.
inline double fd_compare(Tensor<double>& x, const Tensor<double>& analytic,
                         const std::function<double()>& loss_eval, double h = 1e-6) {
    Tensor<double> numeric(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        double orig = x.data[i];
        x.data[i] = orig + h;
        double lp = loss_eval();
        x.data[i] = orig - h;
        double lm = loss_eval();
        x.data[i] = orig;
        numeric.data[i] = (lp - lm) / (2.0 * h);
    }
    double scale = std::max(max_abs(numeric), 1e-8);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i)
        worst = std::max(worst, std::fabs(analytic.data[i] - numeric.data[i]) / scale);
    return worst;
}

inline Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng,
                                    double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.normal() * scale;
    return t;
}

/// Random tensor with every value nudged at least `margin` away from zero,
/// for layers with a kink at the origin.
inline Tensor<double> random_tensor_off_kink(std::vector<std::size_t> shape, Rng& rng,
                                             double margin = 1e-3) {
    Tensor<double> t = random_tensor(std::move(shape), rng);
    for (auto& v : t.data)
        if (std::fabs(v) < margin) v = v < 0 ? v - margin : v + margin;
    return t;
}

inline double weighted_sum(const Tensor<double>& g, const Tensor<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.data.size(); ++i) acc += g.data[i] * y.data[i];
    return acc;
}

}  // namespace gradcheck_detail

double gradcheck_conv2d(Rng& rng, int configs = 20);
double gradcheck_batchnorm(Rng& rng, int configs = 20);
double gradcheck_relu(Rng& rng, int configs = 20);
double gradcheck_linear(Rng& rng, int configs = 20);
double gradcheck_global_avg_pool(Rng& rng, int configs = 20);
double gradcheck_residual_block(Rng& rng, int configs = 20);
double gradcheck_softmax_ce(Rng& rng, int configs = 20);
double gradcheck_aux_block(Rng& rng, int configs = 50, bool corrupt_chi = false);

/// Full finite-difference sweep at 64-bit; one entry per layer.
std::vector<GradCheckEntry> run_gradcheck(std::uint64_t seed = 20240801);

}  // namespace hal
