#include "vadb/nn/ops.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vadb::nn {

namespace {

constexpr double kMaskFill = -1e30;

void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

Tensor result_of(int rows, int cols, std::vector<NodePtr> parents) {
    auto n = make_node(rows, cols);
    if (grad_enabled()) {
        for (auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
        if (n->requires_grad) n->parents = std::move(parents);
    }
    return Tensor(n);
}

}  // namespace

void mm_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ar = a + static_cast<std::size_t>(i) * k;
        double* cr = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = ar[p];
            const double* br = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

void mm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ar = a + static_cast<std::size_t>(i) * k;
        double* cr = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* br = b + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += ar[p] * br[p];
            cr[j] += acc;
        }
    }
}

void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    // c[k x n] += a^T b with a [m,k], b [m,n]
    for (int i = 0; i < m; ++i) {
        const double* ar = a + static_cast<std::size_t>(i) * k;
        const double* br = b + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = ar[p];
            if (av == 0.0) continue;
            double* cr = c + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = result_of(m, n, {a.node(), b.node()});
    mm_acc(a.data().data(), b.data().data(), out.data().data(), m, k, n);
    if (out.node()->requires_grad) {
        auto an = a.node(), bn = b.node();
        out.node()->backward_fn = [an, bn, m, k, n](Node& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                mm_nt_acc(self.grad.data(), bn->value.data(), an->grad.data(), m, n, k);
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                mm_tn_acc(an->value.data(), self.grad.data(), bn->grad.data(), m, k, n);
            }
        };
    }
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
    const int m = a.rows(), k = a.cols(), n = b.rows();
    Tensor out = result_of(m, n, {a.node(), b.node()});
    mm_nt_acc(a.data().data(), b.data().data(), out.data().data(), m, k, n);
    if (out.node()->requires_grad) {
        auto an = a.node(), bn = b.node();
        out.node()->backward_fn = [an, bn, m, k, n](Node& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                mm_acc(self.grad.data(), bn->value.data(), an->grad.data(), m, n, k);
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                mm_tn_acc(self.grad.data(), an->value.data(), bn->grad.data(), m, n, k);
            }
        };
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    Tensor out = result_of(a.rows(), a.cols(), {a.node(), b.node()});
    const auto& av = a.data();
    const auto& bv = b.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
    if (out.node()->requires_grad) {
        auto an = a.node(), bn = b.node();
        out.node()->backward_fn = [an, bn](Node& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
            }
        };
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
    Tensor out = result_of(a.rows(), a.cols(), {a.node(), b.node()});
    const auto& av = a.data();
    const auto& bv = b.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
    if (out.node()->requires_grad) {
        auto an = a.node(), bn = b.node();
        out.node()->backward_fn = [an, bn](Node& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
            }
        };
    }
    return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& bias) {
    require(bias.rows() == 1 && bias.cols() == x.cols(), "add_rowvec: bias shape");
    Tensor out = result_of(x.rows(), x.cols(), {x.node(), bias.node()});
    const int r = x.rows(), c = x.cols();
    const auto& xv = x.data();
    const auto& bv = bias.data();
    auto& ov = out.data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            ov[static_cast<std::size_t>(i) * c + j] = xv[static_cast<std::size_t>(i) * c + j] + bv[j];
    if (out.node()->requires_grad) {
        auto xn = x.node(), bn = bias.node();
        out.node()->backward_fn = [xn, bn, r, c](Node& self) {
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j)
                        bn->grad[j] += self.grad[static_cast<std::size_t>(i) * c + j];
            }
        };
    }
    return out;
}

Tensor scale(const Tensor& x, double s) {
    Tensor out = result_of(x.rows(), x.cols(), {x.node()});
    const auto& xv = x.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * s;
    if (out.node()->requires_grad) {
        auto xn = x.node();
        out.node()->backward_fn = [xn, s](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i] * s;
        };
    }
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard: shape mismatch");
    Tensor out = result_of(a.rows(), a.cols(), {a.node(), b.node()});
    const auto& av = a.data();
    const auto& bv = b.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    if (out.node()->requires_grad) {
        auto an = a.node(), bn = b.node();
        out.node()->backward_fn = [an, bn](Node& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    an->grad[i] += self.grad[i] * bn->value[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    bn->grad[i] += self.grad[i] * an->value[i];
            }
        };
    }
    return out;
}

Tensor mul_scalar(const Tensor& x, const Tensor& s) {
    require(s.size() == 1, "mul_scalar: s must be [1,1]");
    Tensor out = result_of(x.rows(), x.cols(), {x.node(), s.node()});
    const double sv = s.item();
    const auto& xv = x.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * sv;
    if (out.node()->requires_grad) {
        auto xn = x.node(), sn = s.node();
        out.node()->backward_fn = [xn, sn, sv](Node& self) {
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    xn->grad[i] += self.grad[i] * sv;
            }
            if (sn->requires_grad) {
                sn->ensure_grad();
                double acc = 0.0;
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    acc += self.grad[i] * xn->value[i];
                sn->grad[0] += acc;
            }
        };
    }
    return out;
}

Tensor exp_elem(const Tensor& x) {
    Tensor out = result_of(x.rows(), x.cols(), {x.node()});
    const auto& xv = x.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::exp(xv[i]);
    if (out.node()->requires_grad) {
        auto xn = x.node();
        auto on = out.node();
        out.node()->backward_fn = [xn, on](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                xn->grad[i] += self.grad[i] * on->value[i];
        };
    }
    return out;
}

Tensor tanh_elem(const Tensor& x) {
    Tensor out = result_of(x.rows(), x.cols(), {x.node()});
    const auto& xv = x.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::tanh(xv[i]);
    if (out.node()->requires_grad) {
        auto xn = x.node();
        auto on = out.node();
        out.node()->backward_fn = [xn, on](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const double y = on->value[i];
                xn->grad[i] += self.grad[i] * (1.0 - y * y);
            }
        };
    }
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = result_of(x.rows(), x.cols(), {x.node()});
    const auto& xv = x.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    if (out.node()->requires_grad) {
        auto xn = x.node();
        out.node()->backward_fn = [xn](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                if (xn->value[i] > 0.0) xn->grad[i] += self.grad[i];
        };
    }
    return out;
}

Tensor quick_gelu(const Tensor& x) {
    Tensor out = result_of(x.rows(), x.cols(), {x.node()});
    const auto& xv = x.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-1.702 * xv[i]));
        ov[i] = xv[i] * s;
    }
    if (out.node()->requires_grad) {
        auto xn = x.node();
        out.node()->backward_fn = [xn](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const double v = xn->value[i];
                const double s = 1.0 / (1.0 + std::exp(-1.702 * v));
                xn->grad[i] += self.grad[i] * (s + v * 1.702 * s * (1.0 - s));
            }
        };
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const int r = x.rows(), c = x.cols();
    require(gain.rows() == 1 && gain.cols() == c, "layer_norm: gain shape");
    require(bias.rows() == 1 && bias.cols() == c, "layer_norm: bias shape");
    Tensor out = result_of(r, c, {x.node(), gain.node(), bias.node()});
    auto xhat = std::make_shared<std::vector<double>>(static_cast<std::size_t>(r) * c);
    auto inv_std = std::make_shared<std::vector<double>>(r);
    const auto& xv = x.data();
    const auto& gv = gain.data();
    const auto& bv = bias.data();
    auto& ov = out.data();
    for (int i = 0; i < r; ++i) {
        const double* row = xv.data() + static_cast<std::size_t>(i) * c;
        double mu = 0.0;
        for (int j = 0; j < c; ++j) mu += row[j];
        mu /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
            const double d = row[j] - mu;
            var += d * d;
        }
        var /= c;
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = inv;
        for (int j = 0; j < c; ++j) {
            const double h = (row[j] - mu) * inv;
            (*xhat)[static_cast<std::size_t>(i) * c + j] = h;
            ov[static_cast<std::size_t>(i) * c + j] = h * gv[j] + bv[j];
        }
    }
    if (out.node()->requires_grad) {
        auto xn = x.node(), gn = gain.node(), bn = bias.node();
        out.node()->backward_fn = [xn, gn, bn, xhat, inv_std, r, c](Node& self) {
            for (int i = 0; i < r; ++i) {
                const double* g = self.grad.data() + static_cast<std::size_t>(i) * c;
                const double* h = xhat->data() + static_cast<std::size_t>(i) * c;
                if (gn->requires_grad) {
                    gn->ensure_grad();
                    for (int j = 0; j < c; ++j) gn->grad[j] += g[j] * h[j];
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (int j = 0; j < c; ++j) bn->grad[j] += g[j];
                }
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    double sum_dh = 0.0, sum_dh_h = 0.0;
                    for (int j = 0; j < c; ++j) {
                        const double dh = g[j] * gn->value[j];
                        sum_dh += dh;
                        sum_dh_h += dh * h[j];
                    }
                    const double inv = (*inv_std)[i];
                    for (int j = 0; j < c; ++j) {
                        const double dh = g[j] * gn->value[j];
                        xn->grad[static_cast<std::size_t>(i) * c + j] +=
                            inv * (dh - sum_dh / c - h[j] * sum_dh_h / c);
                    }
                }
            }
        };
    }
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    const int r = x.rows(), c = x.cols();
    Tensor out = result_of(r, c, {x.node()});
    const auto& xv = x.data();
    auto& ov = out.data();
    for (int i = 0; i < r; ++i) {
        const double* row = xv.data() + static_cast<std::size_t>(i) * c;
        double* orow = ov.data() + static_cast<std::size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - mx);
            z += orow[j];
        }
        for (int j = 0; j < c; ++j) orow[j] /= z;
    }
    if (out.node()->requires_grad) {
        auto xn = x.node();
        auto on = out.node();
        out.node()->backward_fn = [xn, on, r, c](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (int i = 0; i < r; ++i) {
                const double* y = on->value.data() + static_cast<std::size_t>(i) * c;
                const double* g = self.grad.data() + static_cast<std::size_t>(i) * c;
                double dot = 0.0;
                for (int j = 0; j < c; ++j) dot += g[j] * y[j];
                for (int j = 0; j < c; ++j)
                    xn->grad[static_cast<std::size_t>(i) * c + j] += y[j] * (g[j] - dot);
            }
        };
    }
    return out;
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
    const int c = table.cols();
    Tensor out = result_of(static_cast<int>(ids.size()), c, {table.node()});
    const auto& tv = table.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        require(ids[i] >= 0 && ids[i] < table.rows(), "embedding: id out of range");
        const double* src = tv.data() + static_cast<std::size_t>(ids[i]) * c;
        double* dst = ov.data() + i * c;
        for (int j = 0; j < c; ++j) dst[j] = src[j];
    }
    if (out.node()->requires_grad) {
        auto tn = table.node();
        auto ids_copy = std::make_shared<std::vector<int>>(ids);
        out.node()->backward_fn = [tn, ids_copy, c](Node& self) {
            if (!tn->requires_grad) return;
            tn->ensure_grad();
            for (std::size_t i = 0; i < ids_copy->size(); ++i) {
                double* dst = tn->grad.data() + static_cast<std::size_t>((*ids_copy)[i]) * c;
                const double* g = self.grad.data() + i * c;
                for (int j = 0; j < c; ++j) dst[j] += g[j];
            }
        };
    }
    return out;
}

Tensor select_rows(const Tensor& x, const std::vector<int>& idx) {
    const int c = x.cols();
    Tensor out = result_of(static_cast<int>(idx.size()), c, {x.node()});
    const auto& xv = x.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        require(idx[i] >= 0 && idx[i] < x.rows(), "select_rows: index out of range");
        const double* src = xv.data() + static_cast<std::size_t>(idx[i]) * c;
        for (int j = 0; j < c; ++j) ov[i * c + j] = src[j];
    }
    if (out.node()->requires_grad) {
        auto xn = x.node();
        auto idx_copy = std::make_shared<std::vector<int>>(idx);
        out.node()->backward_fn = [xn, idx_copy, c](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < idx_copy->size(); ++i) {
                double* dst = xn->grad.data() + static_cast<std::size_t>((*idx_copy)[i]) * c;
                const double* g = self.grad.data() + i * c;
                for (int j = 0; j < c; ++j) dst[j] += g[j];
            }
        };
    }
    return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_rows: no parts");
    const int c = parts[0].cols();
    int total = 0;
    std::vector<NodePtr> parents;
    for (const auto& p : parts) {
        require(p.cols() == c, "concat_rows: column mismatch");
        total += p.rows();
        parents.push_back(p.node());
    }
    Tensor out = result_of(total, c, parents);
    auto& ov = out.data();
    std::size_t off = 0;
    for (const auto& p : parts) {
        const auto& pv = p.data();
        for (std::size_t i = 0; i < pv.size(); ++i) ov[off + i] = pv[i];
        off += pv.size();
    }
    if (out.node()->requires_grad) {
        auto parent_nodes = std::make_shared<std::vector<NodePtr>>();
        for (const auto& p : parts) parent_nodes->push_back(p.node());
        out.node()->backward_fn = [parent_nodes](Node& self) {
            std::size_t off = 0;
            for (auto& pn : *parent_nodes) {
                if (pn->requires_grad) {
                    pn->ensure_grad();
                    for (std::size_t i = 0; i < pn->value.size(); ++i)
                        pn->grad[i] += self.grad[off + i];
                }
                off += pn->value.size();
            }
        };
    }
    return out;
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
    require(0 <= c0 && c0 < c1 && c1 <= x.cols(), "slice_cols: bad range");
    const int r = x.rows(), c = x.cols(), w = c1 - c0;
    Tensor out = result_of(r, w, {x.node()});
    const auto& xv = x.data();
    auto& ov = out.data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < w; ++j)
            ov[static_cast<std::size_t>(i) * w + j] = xv[static_cast<std::size_t>(i) * c + c0 + j];
    if (out.node()->requires_grad) {
        auto xn = x.node();
        out.node()->backward_fn = [xn, r, c, c0, w](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < w; ++j)
                    xn->grad[static_cast<std::size_t>(i) * c + c0 + j] +=
                        self.grad[static_cast<std::size_t>(i) * w + j];
        };
    }
    return out;
}

Tensor row_l2_normalize(const Tensor& x) {
    const int r = x.rows(), c = x.cols();
    Tensor out = result_of(r, c, {x.node()});
    auto inv_norm = std::make_shared<std::vector<double>>(r);
    const auto& xv = x.data();
    auto& ov = out.data();
    for (int i = 0; i < r; ++i) {
        const double* row = xv.data() + static_cast<std::size_t>(i) * c;
        double n2 = 0.0;
        for (int j = 0; j < c; ++j) n2 += row[j] * row[j];
        require(n2 > 0.0, "row_l2_normalize: zero row");
        const double inv = 1.0 / std::sqrt(n2);
        (*inv_norm)[i] = inv;
        for (int j = 0; j < c; ++j) ov[static_cast<std::size_t>(i) * c + j] = row[j] * inv;
    }
    if (out.node()->requires_grad) {
        auto xn = x.node();
        auto on = out.node();
        out.node()->backward_fn = [xn, on, inv_norm, r, c](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (int i = 0; i < r; ++i) {
                const double* u = on->value.data() + static_cast<std::size_t>(i) * c;
                const double* g = self.grad.data() + static_cast<std::size_t>(i) * c;
                double dot = 0.0;
                for (int j = 0; j < c; ++j) dot += u[j] * g[j];
                const double inv = (*inv_norm)[i];
                for (int j = 0; j < c; ++j)
                    xn->grad[static_cast<std::size_t>(i) * c + j] += inv * (g[j] - u[j] * dot);
            }
        };
    }
    return out;
}

Tensor mean_rows(const Tensor& x) {
    const int r = x.rows(), c = x.cols();
    Tensor out = result_of(1, c, {x.node()});
    const auto& xv = x.data();
    auto& ov = out.data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) ov[j] += xv[static_cast<std::size_t>(i) * c + j];
    for (int j = 0; j < c; ++j) ov[j] /= r;
    if (out.node()->requires_grad) {
        auto xn = x.node();
        out.node()->backward_fn = [xn, r, c](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    xn->grad[static_cast<std::size_t>(i) * c + j] += self.grad[j] / r;
        };
    }
    return out;
}

Tensor rowscale(const Tensor& x, const Tensor& s) {
    const int r = x.rows(), c = x.cols();
    require(s.rows() == r && s.cols() == 1, "rowscale: s must be [rows,1]");
    Tensor out = result_of(r, c, {x.node(), s.node()});
    const auto& xv = x.data();
    const auto& sv = s.data();
    auto& ov = out.data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            ov[static_cast<std::size_t>(i) * c + j] = xv[static_cast<std::size_t>(i) * c + j] * sv[i];
    if (out.node()->requires_grad) {
        auto xn = x.node(), sn = s.node();
        out.node()->backward_fn = [xn, sn, r, c](Node& self) {
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j)
                        xn->grad[static_cast<std::size_t>(i) * c + j] +=
                            self.grad[static_cast<std::size_t>(i) * c + j] * sn->value[i];
            }
            if (sn->requires_grad) {
                sn->ensure_grad();
                for (int i = 0; i < r; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < c; ++j)
                        acc += self.grad[static_cast<std::size_t>(i) * c + j] *
                               xn->value[static_cast<std::size_t>(i) * c + j];
                    sn->grad[i] += acc;
                }
            }
        };
    }
    return out;
}

Tensor mean_all(const Tensor& x) {
    Tensor out = result_of(1, 1, {x.node()});
    const auto& xv = x.data();
    double acc = 0.0;
    for (double v : xv) acc += v;
    out.data()[0] = acc / static_cast<double>(xv.size());
    if (out.node()->requires_grad) {
        auto xn = x.node();
        const double inv = 1.0 / static_cast<double>(xv.size());
        out.node()->backward_fn = [xn, inv](Node& self) {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < xn->grad.size(); ++i)
                xn->grad[i] += self.grad[0] * inv;
        };
    }
    return out;
}

Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           int batch, int seq_len, int heads,
                           const std::vector<std::uint8_t>& key_mask) {
    const int rows = batch * seq_len;
    const int d = q.cols();
    require(q.rows() == rows && k.rows() == rows && v.rows() == rows,
            "attention: packed shape mismatch");
    require(k.cols() == d && v.cols() == d, "attention: width mismatch");
    require(d % heads == 0, "attention: width not divisible by heads");
    require(key_mask.empty() || key_mask.size() == static_cast<std::size_t>(rows),
            "attention: mask size");
    const int dh = d / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

    if (!key_mask.empty()) {
        for (int b = 0; b < batch; ++b) {
            bool any = false;
            for (int j = 0; j < seq_len && !any; ++j) any = key_mask[b * seq_len + j] != 0;
            require(any, "attention: sequence with no attendable keys");
        }
    }

    Tensor out = result_of(rows, d, {q.node(), k.node(), v.node()});
    // attention probabilities, retained for backward: [batch][heads][L*L]
    auto probs = std::make_shared<std::vector<double>>(
        static_cast<std::size_t>(batch) * heads * seq_len * seq_len, 0.0);

    const auto& qv = q.data();
    const auto& kv = k.data();
    const auto& vv = v.data();
    auto& ov = out.data();

    for (int b = 0; b < batch; ++b) {
        const int base = b * seq_len;
        for (int h = 0; h < heads; ++h) {
            const int co = h * dh;
            double* A = probs->data() +
                        (static_cast<std::size_t>(b) * heads + h) * seq_len * seq_len;
            for (int i = 0; i < seq_len; ++i) {
                const double* qi = qv.data() + static_cast<std::size_t>(base + i) * d + co;
                double* Ai = A + static_cast<std::size_t>(i) * seq_len;
                double mx = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < seq_len; ++j) {
                    double sij;
                    if (!key_mask.empty() && !key_mask[base + j]) {
                        sij = kMaskFill;
                    } else {
                        const double* kj = kv.data() + static_cast<std::size_t>(base + j) * d + co;
                        double acc = 0.0;
                        for (int e = 0; e < dh; ++e) acc += qi[e] * kj[e];
                        sij = acc * sc;
                    }
                    Ai[j] = sij;
                    mx = std::max(mx, sij);
                }
                double z = 0.0;
                for (int j = 0; j < seq_len; ++j) {
                    Ai[j] = std::exp(Ai[j] - mx);
                    z += Ai[j];
                }
                double* oi = ov.data() + static_cast<std::size_t>(base + i) * d + co;
                for (int j = 0; j < seq_len; ++j) {
                    Ai[j] /= z;
                    if (Ai[j] == 0.0) continue;
                    const double* vj = vv.data() + static_cast<std::size_t>(base + j) * d + co;
                    for (int e = 0; e < dh; ++e) oi[e] += Ai[j] * vj[e];
                }
            }
        }
    }

    if (out.node()->requires_grad) {
        auto qn = q.node(), kn = k.node(), vn = v.node();
        out.node()->backward_fn = [qn, kn, vn, probs, batch, seq_len, heads, dh, d,
                                   sc](Node& self) {
            std::vector<double> dA(static_cast<std::size_t>(seq_len) * seq_len);
            for (int b = 0; b < batch; ++b) {
                const int base = b * seq_len;
                for (int h = 0; h < heads; ++h) {
                    const int co = h * dh;
                    const double* A = probs->data() +
                                      (static_cast<std::size_t>(b) * heads + h) * seq_len * seq_len;
                    // dV += A^T dO ; dA = dO V^T
                    for (int i = 0; i < seq_len; ++i) {
                        const double* go = self.grad.data() + static_cast<std::size_t>(base + i) * d + co;
                        const double* Ai = A + static_cast<std::size_t>(i) * seq_len;
                        double* dAi = dA.data() + static_cast<std::size_t>(i) * seq_len;
                        for (int j = 0; j < seq_len; ++j) {
                            const double* vj = vn->value.data() + static_cast<std::size_t>(base + j) * d + co;
                            double acc = 0.0;
                            for (int e = 0; e < dh; ++e) acc += go[e] * vj[e];
                            dAi[j] = acc;
                            if (vn->requires_grad && Ai[j] != 0.0) {
                                vn->ensure_grad();
                                double* dvj = vn->grad.data() + static_cast<std::size_t>(base + j) * d + co;
                                for (int e = 0; e < dh; ++e) dvj[e] += Ai[j] * go[e];
                            }
                        }
                    }
                    // dS = A o (dA - rowsum(dA o A)); masked entries have A = 0
                    for (int i = 0; i < seq_len; ++i) {
                        const double* Ai = A + static_cast<std::size_t>(i) * seq_len;
                        double* dAi = dA.data() + static_cast<std::size_t>(i) * seq_len;
                        double dot = 0.0;
                        for (int j = 0; j < seq_len; ++j) dot += dAi[j] * Ai[j];
                        for (int j = 0; j < seq_len; ++j) dAi[j] = Ai[j] * (dAi[j] - dot);
                    }
                    // dQ += dS K sc ; dK += dS^T Q sc
                    for (int i = 0; i < seq_len; ++i) {
                        const double* dSi = dA.data() + static_cast<std::size_t>(i) * seq_len;
                        const double* qi = qn->value.data() + static_cast<std::size_t>(base + i) * d + co;
                        for (int j = 0; j < seq_len; ++j) {
                            const double w = dSi[j] * sc;
                            if (w == 0.0) continue;
                            const double* kj = kn->value.data() + static_cast<std::size_t>(base + j) * d + co;
                            if (qn->requires_grad) {
                                qn->ensure_grad();
                                double* dqi = qn->grad.data() + static_cast<std::size_t>(base + i) * d + co;
                                for (int e = 0; e < dh; ++e) dqi[e] += w * kj[e];
                            }
                            if (kn->requires_grad) {
                                kn->ensure_grad();
                                double* dkj = kn->grad.data() + static_cast<std::size_t>(base + j) * d + co;
                                for (int e = 0; e < dh; ++e) dkj[e] += w * qi[e];
                            }
                        }
                    }
                }
            }
        };
    }
    return out;
}

Tensor symmetric_contrastive_loss(const Tensor& sim) {
    const int n = sim.rows();
    require(sim.cols() == n, "symmetric_contrastive_loss: matrix must be square");
    require(n >= 1, "symmetric_contrastive_loss: empty matrix");

    Tensor out = result_of(1, 1, {sim.node()});
    const auto& S = sim.data();

    auto lse_rows = std::make_shared<std::vector<double>>(n);
    auto lse_cols = std::make_shared<std::vector<double>>(n);
    double loss_rows = 0.0, loss_cols = 0.0;
    for (int i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) mx = std::max(mx, S[static_cast<std::size_t>(i) * n + j]);
        double z = 0.0;
        for (int j = 0; j < n; ++j) z += std::exp(S[static_cast<std::size_t>(i) * n + j] - mx);
        (*lse_rows)[i] = mx + std::log(z);
        loss_rows += (*lse_rows)[i] - S[static_cast<std::size_t>(i) * n + i];
    }
    for (int j = 0; j < n; ++j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) mx = std::max(mx, S[static_cast<std::size_t>(i) * n + j]);
        double z = 0.0;
        for (int i = 0; i < n; ++i) z += std::exp(S[static_cast<std::size_t>(i) * n + j] - mx);
        (*lse_cols)[j] = mx + std::log(z);
        loss_cols += (*lse_cols)[j] - S[static_cast<std::size_t>(j) * n + j];
    }
    out.data()[0] = 0.5 * (loss_rows / n + loss_cols / n);

    if (out.node()->requires_grad) {
        auto sn = sim.node();
        out.node()->backward_fn = [sn, lse_rows, lse_cols, n](Node& self) {
            if (!sn->requires_grad) return;
            sn->ensure_grad();
            const double g = self.grad[0] * 0.5 / n;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double s = sn->value[static_cast<std::size_t>(i) * n + j];
                    double d = std::exp(s - (*lse_rows)[i]) + std::exp(s - (*lse_cols)[j]);
                    if (i == j) d -= 2.0;
                    sn->grad[static_cast<std::size_t>(i) * n + j] += g * d;
                }
            }
        };
    }
    return out;
}

Tensor patch_embed3d(const std::vector<double>& frames, int t_frames, int channels,
                     int height, int width, const Tensor& kernel,
                     int temporal_kernel, int patch) {
    require(temporal_kernel >= 1 && temporal_kernel % 2 == 1,
            "patch_embed3d: temporal kernel must be odd");
    require(height % patch == 0 && width % patch == 0,
            "patch_embed3d: frame size not divisible by patch size");
    const int cols_per_patch = channels * temporal_kernel * patch * patch;
    require(kernel.cols() == cols_per_patch, "patch_embed3d: kernel shape mismatch");
    require(frames.size() ==
                static_cast<std::size_t>(t_frames) * channels * height * width,
            "patch_embed3d: frame buffer size mismatch");

    const int ph = height / patch, pw = width / patch;
    const int patches = ph * pw;
    const int out_rows = t_frames * patches;
    const int out_dim = kernel.rows();
    const int half = temporal_kernel / 2;

    // im2col: one row per (frame, patch), zero padded on the time axis
    auto cols = std::make_shared<std::vector<double>>(
        static_cast<std::size_t>(out_rows) * cols_per_patch, 0.0);
    for (int t = 0; t < t_frames; ++t) {
        for (int py = 0; py < ph; ++py) {
            for (int px = 0; px < pw; ++px) {
                double* dst = cols->data() +
                              (static_cast<std::size_t>(t) * patches + py * pw + px) * cols_per_patch;
                std::size_t idx = 0;
                for (int ch = 0; ch < channels; ++ch) {
                    for (int dt = -half; dt <= half; ++dt) {
                        const int src_t = t + dt;
                        for (int y = 0; y < patch; ++y) {
                            for (int x = 0; x < patch; ++x, ++idx) {
                                if (src_t < 0 || src_t >= t_frames) continue;
                                const std::size_t src =
                                    ((static_cast<std::size_t>(src_t) * channels + ch) * height +
                                     py * patch + y) * width + px * patch + x;
                                dst[idx] = frames[src];
                            }
                        }
                    }
                }
            }
        }
    }

    Tensor out = result_of(out_rows, out_dim, {kernel.node()});
    mm_nt_acc(cols->data(), kernel.data().data(), out.data().data(), out_rows,
              cols_per_patch, out_dim);
    if (out.node()->requires_grad) {
        auto kn = kernel.node();
        out.node()->backward_fn = [kn, cols, out_rows, cols_per_patch, out_dim](Node& self) {
            if (!kn->requires_grad) return;
            kn->ensure_grad();
            // dK += dO^T cols
            mm_tn_acc(self.grad.data(), cols->data(), kn->grad.data(), out_rows,
                      out_dim, cols_per_patch);
        };
    }
    return out;
}

}  // namespace vadb::nn
