#ifndef VADB_FUSION_HPP
#define VADB_FUSION_HPP

#include <string>

#include "vadb/nn/ops.hpp"
#include "vadb/nn/optim.hpp"
#include "vadb/nn/rng.hpp"

namespace vadb::fusion {

struct FusionConfig {
    int gate_hidden = 64;

    // `main_text` sets the gate logit biases to (ln 0.7, ln 0.3), so the
    // first forward pass yields alpha = 0.7 exactly. `appendix` uses the raw
    // bias pair (0.7, 0.3), whose softmax is ~0.5987.
    enum class AlphaInit { main_text, appendix };
    AlphaInit alpha_init = AlphaInit::main_text;

    // Accepted for config compatibility; the loss is plain bidirectional
    // cross-entropy, so these are ignored (a warning is emitted when they are
    // set in a run config).
    double margin = 0.1;
    double hard_negative_rate = 0.5;
};

// Two-layer gate over the elementwise sum of the comment and tag embeddings
// (a concatenation input would double the first layer width; the sum keeps
// the gate symmetric in its inputs). Produces alpha in (0,1) by softmax over
// two logits; the fused embedding is re-normalized after mixing.
class FusionGate {
public:
    FusionGate(int embed_dim, const FusionConfig& cfg, nn::ParamStore& store,
               const std::string& prefix, nn::Rng& rng);

    struct Result {
        nn::Tensor fused;  // [N, d], unit rows
        nn::Tensor alpha;  // [N, 1]
    };
    Result fuse(const nn::Tensor& f_comm, const nn::Tensor& f_tag) const;

    int embed_dim() const { return embed_dim_; }

private:
    int embed_dim_;
    nn::Tensor hidden_w_, hidden_b_, out_w_, out_b_, logit_bias_;
};

// Learnable logit scale, parameterized in log space so the effective scale
// stays positive under any gradient step. Initialized at ln(100).
class Temperature {
public:
    Temperature(nn::ParamStore& store, const std::string& prefix);

    nn::Tensor scale() const { return nn::exp_elem(log_scale_); }
    double scale_value() const;
    nn::Tensor log_scale_tensor() const { return log_scale_; }

    // overflow guard: cap the effective scale (default 1000)
    void clamp_scale(double max_scale = 1000.0);

private:
    nn::Tensor log_scale_;
};

// scale * text . video^T; rows of both inputs must be unit norm within 1e-3.
nn::Tensor similarity_matrix(const nn::Tensor& text_feats,
                             const nn::Tensor& video_feats,
                             const nn::Tensor& scale);
// plain-value variant for evaluation and bindings
std::vector<double> similarity_matrix_values(const std::vector<double>& text,
                                             const std::vector<double>& video,
                                             int n_text, int n_video, int dim,
                                             double scale);

using nn::symmetric_contrastive_loss;
double symmetric_contrastive_loss_value(const std::vector<double>& sim, int n);

}  // namespace vadb::fusion

#endif
