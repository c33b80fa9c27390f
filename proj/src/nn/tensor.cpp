#include "vadb/nn/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <unordered_set>

namespace vadb::nn {

namespace {
std::atomic<std::uint64_t> g_seq{1};
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

GradGuard::GradGuard(bool enabled) : prev_(g_grad_enabled) {
    g_grad_enabled = enabled;
}
GradGuard::~GradGuard() { g_grad_enabled = prev_; }

NodePtr make_node(int rows, int cols) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
    return n;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    auto n = make_node(rows, cols);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::full(int rows, int cols, double v, bool requires_grad) {
    Tensor t = zeros(rows, cols, requires_grad);
    std::fill(t.data().begin(), t.data().end(), v);
    return t;
}

Tensor Tensor::from(std::vector<double> data, int rows, int cols,
                    bool requires_grad) {
    if (data.size() != static_cast<std::size_t>(rows) * cols)
        throw std::invalid_argument("Tensor::from: size mismatch");
    auto n = make_node(rows, cols);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({v}, 1, 1, requires_grad);
}

void Tensor::backward() const {
    if (!node_) throw std::logic_error("backward on empty tensor");
    if (node_->size() != 1)
        throw std::logic_error("backward requires a scalar tensor");

    // Collect the reachable subgraph and replay in descending creation order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{node_.get()};
    seen.insert(node_.get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents) {
            if (seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }
    std::sort(order.begin(), order.end(),
              [](const Node* a, const Node* b) { return a->seq > b->seq; });

    for (Node* n : order) n->ensure_grad();
    node_->grad[0] = 1.0;
    for (Node* n : order) {
        if (n->backward_fn) n->backward_fn(*n);
    }
}

}  // namespace vadb::nn
