#include "vadb/nn/optim.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace vadb::nn {

Tensor ParamStore::create(const std::string& name, int rows, int cols) {
    Tensor t = Tensor::zeros(rows, cols, true);
    register_tensor(name, t);
    return t;
}

void ParamStore::register_tensor(const std::string& name, Tensor t) {
    if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    t.set_requires_grad(true);
    names_.push_back(name);
    tensors_.push_back(std::move(t));
}

Tensor* ParamStore::find(const std::string& name) {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return &tensors_[i];
    return nullptr;
}

const Tensor* ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return &tensors_[i];
    return nullptr;
}

void ParamStore::zero_grad() {
    for (auto& t : tensors_) t.zero_grad();
}

double ParamStore::grad_norm() const {
    double acc = 0.0;
    for (const auto& t : tensors_) {
        const auto& g = t.grad_view();
        for (double v : g) acc += v * v;
    }
    return std::sqrt(acc);
}

double ParamStore::clip_grad_norm(double max_norm) {
    const double norm = grad_norm();
    if (norm > max_norm && norm > 0.0) {
        const double f = max_norm / norm;
        for (auto& t : tensors_) {
            auto& g = t.grad();
            for (double& v : g) v *= f;
        }
    }
    return norm;
}

std::vector<std::uint8_t> ParamStore::value_fingerprint() const {
    std::vector<std::uint8_t> out;
    for (const auto& t : tensors_) {
        const auto& v = t.data();
        const std::size_t off = out.size();
        out.resize(off + v.size() * sizeof(double));
        std::memcpy(out.data() + off, v.data(), v.size() * sizeof(double));
    }
    return out;
}

Adam::Adam(ParamStore& store, AdamConfig cfg, std::vector<std::string> scaled_prefixes,
           double lr_coef)
    : store_(store), cfg_(cfg), lr_coef_(lr_coef) {
    scaled_.resize(store.count(), false);
    m_.resize(store.count());
    v_.resize(store.count());
    for (std::size_t i = 0; i < store.count(); ++i) {
        m_[i].assign(store.at(i).size(), 0.0);
        v_[i].assign(store.at(i).size(), 0.0);
        for (const auto& p : scaled_prefixes) {
            if (store.name_at(i).rfind(p, 0) == 0) {
                scaled_[i] = true;
                break;
            }
        }
    }
}

double Adam::group_lr(std::size_t param_index, double lr) const {
    return scaled_[param_index] ? lr * lr_coef_ : lr;
}

void Adam::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < store_.count(); ++i) {
        Tensor& p = store_.at(i);
        const auto& g = p.grad_view();
        if (g.empty()) continue;
        auto& val = p.data();
        auto& m = m_[i];
        auto& v = v_[i];
        const double step_lr = group_lr(i, lr);
        for (std::size_t e = 0; e < val.size(); ++e) {
            m[e] = cfg_.beta1 * m[e] + (1.0 - cfg_.beta1) * g[e];
            v[e] = cfg_.beta2 * v[e] + (1.0 - cfg_.beta2) * g[e] * g[e];
            const double mhat = m[e] / bc1;
            const double vhat = v[e] / bc2;
            val[e] -= step_lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace vadb::nn
