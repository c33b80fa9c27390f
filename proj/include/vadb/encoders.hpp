#ifndef VADB_ENCODERS_HPP
#define VADB_ENCODERS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vadb/nn/ops.hpp"
#include "vadb/nn/optim.hpp"
#include "vadb/nn/rng.hpp"
#include "vadb/tokenizer.hpp"

namespace vadb::enc {

struct EncoderConfig {
    int embed_dim = 64;
    int text_layers = 2;
    int vision_layers = 2;
    int heads = 2;
    int max_tokens = 32;
    int max_frames = 12;
    int frame_size = 32;
    int patch_size = 8;
    int temporal_kernel = 3;
    int mlp_ratio = 4;
    int vocab_size = 512;  // content tokens; reserved ids come on top

    static EncoderConfig desk_scale() { return EncoderConfig{}; }
    static EncoderConfig paper_scale();
    void validate() const;
    int patches_per_frame() const {
        return (frame_size / patch_size) * (frame_size / patch_size);
    }
};

// CLIP-style per-channel normalization constants for frame pixels in [0,1].
extern const std::array<double, 3> kFrameMean;
extern const std::array<double, 3> kFrameStd;

struct FrameClip {
    int frames = 0;  // allocated frame slots
    int channels = 3;
    int height = 0;
    int width = 0;
    std::vector<double> data;              // frames * channels * height * width
    std::vector<std::uint8_t> frame_mask;  // length `frames`, prefix of ones

    int real_frames() const;
    void validate() const;
};

struct RawFrames {
    int channels = 3;
    int height = 0;
    int width = 0;
    std::vector<double> data;        // n * channels * height * width, raw [0,1]
    std::vector<double> timestamps;  // seconds, ascending
    int count() const { return static_cast<int>(timestamps.size()); }
};

// floor-linspace over the available range; first and last always included
// when wanted > 1. Used when more frames survive decimation than fit.
std::vector<int> uniform_sample_indices(int available, int wanted);

// Decimates to `fps` (first frame of each floor(t*fps) bucket), then
// uniform-samples down to max_frames or zero-pads and masks the tail.
FrameClip sample_frames(const RawFrames& raw, double fps, int max_frames,
                        bool normalize = true);

void normalize_frames(std::vector<double>& data, int channels, int pixels_per_channel);

// Center-slice temporal inflation of a 2-d patch kernel. kernel2d is
// [out_dim, channels*patch*patch] row-major; the result is
// [out_dim, channels*temporal_kernel*patch*patch] laid out to match
// nn::patch_embed3d (channel, dt, y, x).
std::vector<double> inflate_patch_kernel(const std::vector<double>& kernel2d,
                                         int out_dim, int channels, int patch,
                                         int temporal_kernel);

namespace detail {
struct TransformerBlock {
    nn::Tensor ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    nn::Tensor ln2_g, ln2_b, w1, b1, w2, b2;
};

// Pre-norm residual stack over packed fixed-length sequences.
nn::Tensor run_blocks(nn::Tensor x, const std::vector<TransformerBlock>& blocks,
                      int batch, int seq_len, int heads,
                      const std::vector<std::uint8_t>& key_mask);

std::vector<TransformerBlock> make_blocks(const EncoderConfig& cfg, int layers,
                                          nn::ParamStore& store,
                                          const std::string& prefix, nn::Rng& rng);
}  // namespace detail

// Token transformer; the feature at the end-token position is projected to
// embed_dim and L2-normalized. Comment and tag encoders are two instances
// with disjoint parameters.
class TextEncoder {
public:
    TextEncoder(const EncoderConfig& cfg, nn::ParamStore& store,
                const std::string& prefix, nn::Rng& rng);

    nn::Tensor encode(const std::vector<TokenSequence>& batch) const;  // [B, embed_dim]
    const EncoderConfig& config() const { return cfg_; }

private:
    EncoderConfig cfg_;
    nn::Tensor token_emb_, pos_emb_, lnf_g_, lnf_b_, proj_;
    std::vector<detail::TransformerBlock> blocks_;
};

// 3-d inflated patch embedding, shared per-frame transformer, masked mean
// over frames, projection, L2 normalization.
class VideoEncoder {
public:
    VideoEncoder(const EncoderConfig& cfg, nn::ParamStore& store,
                 const std::string& prefix, nn::Rng& rng);

    nn::Tensor encode(const std::vector<FrameClip>& clips) const;  // [B, embed_dim]
    const EncoderConfig& config() const { return cfg_; }
    // The 2-d kernel the 3-d patch kernel was inflated from at construction.
    const std::vector<double>& initial_kernel2d() const { return kernel2d_init_; }
    nn::Tensor patch_kernel() const { return kernel3d_; }

private:
    EncoderConfig cfg_;
    std::vector<double> kernel2d_init_;
    nn::Tensor kernel3d_, cls_, pos_emb_, ln_pre_g_, ln_pre_b_, ln_post_g_, ln_post_b_, proj_;
    std::vector<detail::TransformerBlock> blocks_;
};

}  // namespace vadb::enc

#endif
