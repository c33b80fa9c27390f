#ifndef VADB_NN_TENSOR_HPP
#define VADB_NN_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vadb::nn {

// Reverse-mode tape over 2-d double matrices. Graphs are rebuilt per forward
// pass; Tensor is a cheap shared handle onto a graph node. Scalars are [1,1].
struct Node {
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily in backward()
    bool requires_grad = false;
    std::uint64_t seq = 0;  // creation order, used for topological replay
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // pushes this->grad into parents

    std::size_t size() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

using NodePtr = std::shared_ptr<Node>;

// When false, ops create detached leaves: no parents, no backward closures.
// Used for frozen-encoder inference and evaluation passes.
bool grad_enabled();

class GradGuard {
public:
    explicit GradGuard(bool enabled);
    ~GradGuard();
    GradGuard(const GradGuard&) = delete;
    GradGuard& operator=(const GradGuard&) = delete;

private:
    bool prev_;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr n) : node_(std::move(n)) {}

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor full(int rows, int cols, double v, bool requires_grad = false);
    static Tensor from(std::vector<double> data, int rows, int cols,
                       bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool valid() const { return node_ != nullptr; }
    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    std::size_t size() const { return node_->size(); }

    double at(int i, int j) const { return node_->value[static_cast<std::size_t>(i) * node_->cols + j]; }
    double item() const { return node_->value[0]; }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }
    std::vector<double>& grad() { node_->ensure_grad(); return node_->grad; }
    const std::vector<double>& grad_view() const { return node_->grad; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) { node_->requires_grad = b; }

    // Must be called on a [1,1] tensor; fills grads of all reachable nodes
    // that require them.
    void backward() const;

    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    NodePtr node() const { return node_; }

private:
    NodePtr node_;
};

NodePtr make_node(int rows, int cols);

}  // namespace vadb::nn

#endif
