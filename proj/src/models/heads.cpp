#include <cmath>

#include "vadb/errors.hpp"
#include "vadb/training.hpp"

namespace vadb::train {

using nn::Tensor;

RegressionHead::RegressionHead(FinetuneConfig::HeadKind kind, int input_dim,
                               nn::ParamStore& store, const std::string& prefix,
                               nn::Rng& rng)
    : kind_(kind) {
    if (input_dim < 1) throw ConfigError("regression head: input_dim must be >= 1");
    const double s = 1.0 / std::sqrt(static_cast<double>(input_dim));
    if (kind_ == FinetuneConfig::HeadKind::linear) {
        w1_ = store.create(prefix + ".w", input_dim, 1);
        for (auto& v : w1_.data()) v = rng.normal(0.0, s);
        b1_ = store.create(prefix + ".b", 1, 1);
        return;
    }
    const int hidden = input_dim;
    const int half = input_dim / 2;
    if (half < 1) throw ConfigError("regression head: input_dim too small for mlp3");
    w1_ = store.create(prefix + ".w1", input_dim, hidden);
    for (auto& v : w1_.data()) v = rng.normal(0.0, s);
    b1_ = store.create(prefix + ".b1", 1, hidden);
    w2_ = store.create(prefix + ".w2", hidden, half);
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (auto& v : w2_.data()) v = rng.normal(0.0, s2);
    b2_ = store.create(prefix + ".b2", 1, half);
    w3_ = store.create(prefix + ".w3", half, 1);
    const double s3 = 1.0 / std::sqrt(static_cast<double>(half));
    for (auto& v : w3_.data()) v = rng.normal(0.0, s3);
    b3_ = store.create(prefix + ".b3", 1, 1);
}

Tensor RegressionHead::forward(const Tensor& features) const {
    using namespace nn;
    if (kind_ == FinetuneConfig::HeadKind::linear)
        return add_rowvec(matmul(features, w1_), b1_);
    Tensor h = relu(add_rowvec(matmul(features, w1_), b1_));
    h = relu(add_rowvec(matmul(h, w2_), b2_));
    return add_rowvec(matmul(h, w3_), b3_);
}

std::size_t RegressionHead::param_count(FinetuneConfig::HeadKind kind, int input_dim) {
    const std::size_t in = static_cast<std::size_t>(input_dim);
    if (kind == FinetuneConfig::HeadKind::linear) return in + 1;
    const std::size_t half = in / 2;
    return in * in + in + in * half + half + half * 1 + 1;
}

}  // namespace vadb::train
