#include "vadb/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "vadb/errors.hpp"

namespace vadb::fusion {

using nn::Tensor;

FusionGate::FusionGate(int embed_dim, const FusionConfig& cfg, nn::ParamStore& store,
                       const std::string& prefix, nn::Rng& rng)
    : embed_dim_(embed_dim) {
    if (embed_dim < 1 || cfg.gate_hidden < 1)
        throw ConfigError("fusion gate: dimensions must be positive");
    hidden_w_ = store.create(prefix + ".hidden.w", embed_dim, cfg.gate_hidden);
    const double s = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    for (auto& v : hidden_w_.data()) v = rng.normal(0.0, s);
    hidden_b_ = store.create(prefix + ".hidden.b", 1, cfg.gate_hidden);
    // out weights start at zero so the initial alpha comes from the biases
    // alone; the layer unfreezes as soon as it receives gradient.
    out_w_ = store.create(prefix + ".out.w", cfg.gate_hidden, 2);
    out_b_ = store.create(prefix + ".out.b", 1, 2);
    logit_bias_ = store.create(prefix + ".logit_bias", 1, 2);
    if (cfg.alpha_init == FusionConfig::AlphaInit::main_text) {
        logit_bias_.data()[0] = std::log(0.7);
        logit_bias_.data()[1] = std::log(0.3);
    } else {
        logit_bias_.data()[0] = 0.7;
        logit_bias_.data()[1] = 0.3;
    }
}

FusionGate::Result FusionGate::fuse(const Tensor& f_comm, const Tensor& f_tag) const {
    using namespace nn;
    if (f_comm.cols() != f_tag.cols() || f_comm.rows() != f_tag.rows())
        throw Error("fuse: embedding shape mismatch");
    if (f_comm.cols() != embed_dim_)
        throw Error("fuse: embedding dimension does not match gate");

    Tensor x = add(f_comm, f_tag);
    Tensor h = tanh_elem(add_rowvec(matmul(x, hidden_w_), hidden_b_));
    Tensor logits = add_rowvec(add_rowvec(matmul(h, out_w_), out_b_), logit_bias_);
    Tensor weights = softmax_rows(logits);  // [N,2], rows sum to 1 by construction
    Tensor alpha = slice_cols(weights, 0, 1);
    Tensor beta = slice_cols(weights, 1, 2);
    Tensor mixed = add(rowscale(f_comm, alpha), rowscale(f_tag, beta));
    return {row_l2_normalize(mixed), alpha};
}

Temperature::Temperature(nn::ParamStore& store, const std::string& prefix) {
    log_scale_ = store.create(prefix + ".log_scale", 1, 1);
    log_scale_.data()[0] = std::log(100.0);
}

double Temperature::scale_value() const {
    return std::exp(log_scale_.data()[0]);
}

void Temperature::clamp_scale(double max_scale) {
    const double cap = std::log(max_scale);
    double& v = log_scale_.data()[0];
    v = std::min(v, cap);
}

Tensor similarity_matrix(const Tensor& text_feats, const Tensor& video_feats,
                         const Tensor& scale) {
    using namespace nn;
    if (text_feats.cols() != video_feats.cols())
        throw Error("similarity: feature dimension mismatch");
    auto check_rows = [](const Tensor& t, const char* side) {
        for (int i = 0; i < t.rows(); ++i) {
            double n2 = 0.0;
            for (int j = 0; j < t.cols(); ++j) n2 += t.at(i, j) * t.at(i, j);
            if (std::abs(std::sqrt(n2) - 1.0) > 1e-3)
                throw Error(std::string("similarity: ") + side +
                            " row is not unit norm");
        }
    };
    check_rows(text_feats, "text");
    check_rows(video_feats, "video");
    return mul_scalar(matmul_nt(text_feats, video_feats), scale);
}

std::vector<double> similarity_matrix_values(const std::vector<double>& text,
                                             const std::vector<double>& video,
                                             int n_text, int n_video, int dim,
                                             double scale) {
    nn::GradGuard off(false);
    Tensor t = Tensor::from(text, n_text, dim);
    Tensor v = Tensor::from(video, n_video, dim);
    Tensor s = similarity_matrix(t, v, Tensor::scalar(scale));
    return s.data();
}

double symmetric_contrastive_loss_value(const std::vector<double>& sim, int n) {
    nn::GradGuard off(false);
    Tensor s = Tensor::from(sim, n, n);
    return nn::symmetric_contrastive_loss(s).item();
}

}  // namespace vadb::fusion
