#pragma once

#include <string>
#include <vector>

#include "hal/layers.hpp"
#include "hal/tensor.hpp"

namespace hal {

/// One exported auxiliary-score row.
struct AuxScoreRow {
    std::size_t index;
    int superclass;
    double score;
};

/// Auxiliary block between the pooled feature vector and the output layer.
///
/// Forward, per batch row r:
///   z[r][j]  = sum_i w[i][j] * y_prev[r][i]          (bias-free linear map)
///   a[r]     = sum_j |z[r][j] - x_star[r][j]|        (auxiliary score)
///   out[r][i] = y_prev[r][i] * a[r]
///
/// Backward, per batch row r:
///   dL/da[r]        = sum_i g[r][i] * y_prev[r][i]
///   grad_y_prev[r][i] = g[r][i]*a[r] + sum_j chi[r][j] * dL/da[r] * w[i][j]
///   grad_w[i][j]    += sum_r chi[r][j] * dL/da[r] * y_prev[r][i]
///   chi[r][j]       = +1 if z[r][j] > x_star[r][j], else -1 (equality -> -1)
template <typename T>
class AuxBlock {
public:
    /// features: l, superclasses: s; weights He-initialized with fan_in = l
    AuxBlock(std::size_t features, std::size_t superclasses, Rng& rng)
        : w_(he_init<T>({features, superclasses}, features, rng)),
          w_grad_(Tensor<T>::zeros({features, superclasses})) {}

    std::size_t features() const { return w_.shape[0]; }
    std::size_t superclasses() const { return w_.shape[1]; }

    Tensor<T> forward(const Tensor<T>& y_prev, const Tensor<T>& x_star) {
        std::size_t l = w_.shape[0], s = w_.shape[1];
        if (y_prev.rank() != 2 || y_prev.shape[1] != l)
            throw DimensionError("aux block: features " + shape_str(y_prev.shape) +
                                 " do not match weights " + shape_str(w_.shape));
        if (x_star.rank() != 2 || x_star.shape[1] != s || x_star.shape[0] != y_prev.shape[0])
            throw DimensionError("aux block: superclass batch " + shape_str(x_star.shape) +
                                 " does not match");
        validate_onehot(x_star);
        std::size_t b = y_prev.shape[0];

        y_prev_ = y_prev;
        z_ = Tensor<T>({b, s});
        chi_ = Tensor<T>({b, s});
        a_ = Tensor<T>({b, 1});
        Tensor<T> out({b, l});
        for (std::size_t r = 0; r < b; ++r) {
            double score = 0.0;
            for (std::size_t j = 0; j < s; ++j) {
                double z = 0.0;
                for (std::size_t i = 0; i < l; ++i)
                    z += static_cast<double>(w_.at(i, j)) *
                         static_cast<double>(y_prev.at(r, i));
                double xs = static_cast<double>(x_star.at(r, j));
                z_.at(r, j) = static_cast<T>(z);
                chi_.at(r, j) = z > xs ? T{1} : T{-1};
                score += std::fabs(z - xs);
            }
            a_.data[r] = static_cast<T>(score);
            for (std::size_t i = 0; i < l; ++i)
                out.at(r, i) = y_prev.at(r, i) * a_.data[r];
        }
        has_forward_ = true;
        return out;
    }

    /// Returns grad wrt y_prev; grad wrt w accumulates into the weight grad.
    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!has_forward_) throw StateError("aux block: backward before forward");
        std::size_t b = y_prev_.shape[0], l = w_.shape[0], s = w_.shape[1];
        if (!grad_out.same_shape(y_prev_))
            throw DimensionError("aux block: grad shape mismatch");
        Tensor<T> grad_y_prev({b, l});
        Tensor<T> chi = chi_;
        if (corrupt_chi_for_test)
            for (auto& v : chi.data) v = -v;
        for (std::size_t r = 0; r < b; ++r) {
            double dl_da = 0.0;
            for (std::size_t i = 0; i < l; ++i)
                dl_da += static_cast<double>(grad_out.at(r, i)) *
                         static_cast<double>(y_prev_.at(r, i));
            double a = static_cast<double>(a_.data[r]);
            for (std::size_t i = 0; i < l; ++i) {
                double acc = static_cast<double>(grad_out.at(r, i)) * a;
                for (std::size_t j = 0; j < s; ++j)
                    acc += static_cast<double>(chi.at(r, j)) * dl_da *
                           static_cast<double>(w_.at(i, j));
                grad_y_prev.at(r, i) = static_cast<T>(acc);
            }
            for (std::size_t i = 0; i < l; ++i)
                for (std::size_t j = 0; j < s; ++j)
                    w_grad_.at(i, j) += static_cast<T>(
                        static_cast<double>(chi.at(r, j)) * dl_da *
                        static_cast<double>(y_prev_.at(r, i)));
        }
        has_forward_ = false;
        return grad_y_prev;
    }

    /// One row per sample of the last forward batch, scores verbatim from cache.
    std::vector<AuxScoreRow> export_scores(const std::vector<int>& superclass_labels,
                                           std::size_t index_offset = 0) const {
        if (a_.size() == 0) throw StateError("aux block: no forward batch cached");
        if (superclass_labels.size() != a_.shape[0])
            throw DataError("aux block: superclass label count mismatch");
        std::vector<AuxScoreRow> rows;
        rows.reserve(a_.shape[0]);
        for (std::size_t r = 0; r < a_.shape[0]; ++r)
            rows.push_back({index_offset + r, superclass_labels[r],
                            static_cast<double>(a_.data[r])});
        return rows;
    }

    void params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".w", &w_, &w_grad_});
    }

    Tensor<T>& weights() { return w_; }
    const Tensor<T>& scores() const { return a_; }
    const Tensor<T>& chi() const { return chi_; }

    // test hook: flips every chi sign in backward
    bool corrupt_chi_for_test = false;

private:
    static void validate_onehot(const Tensor<T>& x_star) {
        for (std::size_t r = 0; r < x_star.shape[0]; ++r) {
            int ones = 0;
            for (std::size_t j = 0; j < x_star.shape[1]; ++j) {
                T v = x_star.at(r, j);
                if (v == T{1})
                    ++ones;
                else if (v != T{0})
                    throw DataError("aux block: superclass row " + std::to_string(r) +
                                    " is not one-hot");
            }
            if (ones != 1)
                throw DataError("aux block: superclass row " + std::to_string(r) +
                                " is not one-hot");
        }
    }

    Tensor<T> w_, w_grad_;
    Tensor<T> y_prev_, z_, chi_, a_;
    bool has_forward_ = false;
};

}  // namespace hal
