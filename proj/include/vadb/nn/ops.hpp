#ifndef VADB_NN_OPS_HPP
#define VADB_NN_OPS_HPP

#include <cstdint>
#include <vector>

#include "vadb/nn/tensor.hpp"

namespace vadb::nn {

// Dense kernels. C is accumulated into (callers zero it first).
void mm_acc(const double* a, const double* b, double* c, int m, int k, int n);
void mm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n);
void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n);

Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k]x[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T, b is [n,k]
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& x, const Tensor& bias);  // bias [1,c]
Tensor scale(const Tensor& x, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor mul_scalar(const Tensor& x, const Tensor& s);  // s is [1,1]
Tensor exp_elem(const Tensor& x);
Tensor tanh_elem(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor quick_gelu(const Tensor& x);  // x * sigmoid(1.702 x)
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
Tensor softmax_rows(const Tensor& x);
Tensor embedding(const Tensor& table, const std::vector<int>& ids);
Tensor select_rows(const Tensor& x, const std::vector<int>& idx);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, int c0, int c1);
Tensor row_l2_normalize(const Tensor& x);
Tensor mean_rows(const Tensor& x);                       // -> [1,c]
Tensor rowscale(const Tensor& x, const Tensor& s);       // s [r,1]
Tensor mean_all(const Tensor& x);                        // -> [1,1]

// Self/cross attention over `batch` packed sequences of fixed length
// `seq_len`. q,k,v are [batch*seq_len, d]; key_mask has batch*seq_len bytes
// (1 = attendable) or is empty for no masking. Masked keys receive exactly
// zero attention weight and zero gradient.
Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           int batch, int seq_len, int heads,
                           const std::vector<std::uint8_t>& key_mask);

// 0.5 * (mean_i CE(row i, i) + mean_j CE(col j, j)) over a square logit
// matrix, evaluated with log-sum-exp.
Tensor symmetric_contrastive_loss(const Tensor& sim);

// Patch embedding by 3-d convolution with spatial stride = patch size and
// temporal stride 1 (zero padding (tk-1)/2 on the time axis). frames holds
// T*C*H*W doubles; kernel is [out_dim, C*tk*patch*patch]. Output packs frames
// as rows: [T * (H/patch) * (W/patch), out_dim].
Tensor patch_embed3d(const std::vector<double>& frames, int t_frames,
                     int channels, int height, int width, const Tensor& kernel,
                     int temporal_kernel, int patch);

}  // namespace vadb::nn

#endif
