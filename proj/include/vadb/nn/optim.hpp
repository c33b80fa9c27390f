#ifndef VADB_NN_OPTIM_HPP
#define VADB_NN_OPTIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "vadb/nn/rng.hpp"
#include "vadb/nn/tensor.hpp"

namespace vadb::nn {

// Named parameter registry. Registration order is the canonical order for
// checkpoints, gradient clipping and the optimizer, so it must be
// deterministic (modules register in construction order).
class ParamStore {
public:
    Tensor create(const std::string& name, int rows, int cols);
    void register_tensor(const std::string& name, Tensor t);

    Tensor* find(const std::string& name);
    const Tensor* find(const std::string& name) const;

    std::size_t count() const { return names_.size(); }
    const std::string& name_at(std::size_t i) const { return names_[i]; }
    Tensor& at(std::size_t i) { return tensors_[i]; }
    const Tensor& at(std::size_t i) const { return tensors_[i]; }

    void zero_grad();
    double grad_norm() const;
    // Scales all gradients so the global L2 norm is at most max_norm.
    // Returns the pre-clip norm.
    double clip_grad_norm(double max_norm);

    // Raw byte image of all parameter values, for frozen-weight checks.
    std::vector<std::uint8_t> value_fingerprint() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam over two coefficient groups: parameters whose name starts with one of
// the `scaled_prefixes` use lr * lr_coef, everything else uses lr.
class Adam {
public:
    Adam(ParamStore& store, AdamConfig cfg, std::vector<std::string> scaled_prefixes,
         double lr_coef);

    void step(double lr);
    std::uint64_t steps_done() const { return t_; }
    double group_lr(std::size_t param_index, double lr) const;
    bool is_scaled(std::size_t param_index) const { return scaled_[param_index]; }

    // checkpoint support
    std::uint64_t t() const { return t_; }
    void set_t(std::uint64_t t) { t_ = t; }
    std::vector<double>& moment1(std::size_t i) { return m_[i]; }
    std::vector<double>& moment2(std::size_t i) { return v_[i]; }
    const std::vector<double>& moment1(std::size_t i) const { return m_[i]; }
    const std::vector<double>& moment2(std::size_t i) const { return v_[i]; }

private:
    ParamStore& store_;
    AdamConfig cfg_;
    std::vector<bool> scaled_;
    double lr_coef_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace vadb::nn

#endif
