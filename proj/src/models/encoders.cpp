#include "vadb/encoders.hpp"

#include <cmath>

#include "vadb/errors.hpp"

namespace vadb::enc {

using nn::Tensor;

const std::array<double, 3> kFrameMean = {0.48145466, 0.4578275, 0.40821073};
const std::array<double, 3> kFrameStd = {0.26862954, 0.26130258, 0.27577711};

EncoderConfig EncoderConfig::paper_scale() {
    EncoderConfig c;
    c.embed_dim = 512;
    c.text_layers = 12;
    c.vision_layers = 12;
    c.heads = 8;
    c.max_tokens = 32;
    c.max_frames = 12;
    c.frame_size = 224;
    c.patch_size = 32;
    c.temporal_kernel = 3;
    c.vocab_size = 49152;
    return c;
}

void EncoderConfig::validate() const {
    if (embed_dim < 1 || heads < 1 || embed_dim % heads != 0)
        throw ConfigError("encoder: embed_dim must be divisible by heads");
    if (max_tokens < 3) throw ConfigError("encoder: max_tokens must be >= 3");
    if (temporal_kernel < 1 || temporal_kernel % 2 == 0)
        throw ConfigError("encoder: temporal_kernel must be odd");
    if (frame_size < 1 || patch_size < 1 || frame_size % patch_size != 0)
        throw ConfigError("encoder: frame_size must be divisible by patch_size");
    if (text_layers < 1 || vision_layers < 1)
        throw ConfigError("encoder: layer counts must be positive");
    if (max_frames < 1) throw ConfigError("encoder: max_frames must be positive");
    if (vocab_size < 1) throw ConfigError("encoder: vocab_size must be positive");
}

int FrameClip::real_frames() const {
    int n = 0;
    for (auto m : frame_mask) {
        if (!m) break;
        ++n;
    }
    return n;
}

void FrameClip::validate() const {
    if (frames < 1 || static_cast<int>(frame_mask.size()) != frames)
        throw Error("frame clip: mask length must equal frame count");
    if (data.size() != static_cast<std::size_t>(frames) * channels * height * width)
        throw Error("frame clip: data size mismatch");
    bool seen_zero = false;
    for (auto m : frame_mask) {
        if (!m) seen_zero = true;
        else if (seen_zero) throw Error("frame clip: mask must be a prefix of ones");
    }
    if (real_frames() < 1) throw Error("frame clip: no unmasked frames");
}

std::vector<int> uniform_sample_indices(int available, int wanted) {
    std::vector<int> idx;
    if (wanted <= 0 || available <= 0) return idx;
    if (wanted == 1) {
        idx.push_back(0);
        return idx;
    }
    idx.reserve(static_cast<std::size_t>(wanted));
    for (int i = 0; i < wanted; ++i) {
        // floor(i * (available-1) / (wanted-1)), exact in integer arithmetic
        idx.push_back(static_cast<int>(
            static_cast<long long>(i) * (available - 1) / (wanted - 1)));
    }
    return idx;
}

void normalize_frames(std::vector<double>& data, int channels, int pixels_per_channel) {
    const std::size_t per_frame = static_cast<std::size_t>(channels) * pixels_per_channel;
    for (std::size_t f = 0; f * per_frame < data.size(); ++f) {
        for (int c = 0; c < channels; ++c) {
            const double m = kFrameMean[static_cast<std::size_t>(c) % 3];
            const double s = kFrameStd[static_cast<std::size_t>(c) % 3];
            double* p = data.data() + f * per_frame + static_cast<std::size_t>(c) * pixels_per_channel;
            for (int i = 0; i < pixels_per_channel; ++i) p[i] = (p[i] - m) / s;
        }
    }
}

FrameClip sample_frames(const RawFrames& raw, double fps, int max_frames,
                        bool normalize) {
    if (raw.count() < 1) throw Error("sample_frames: no frames");
    if (fps <= 0.0) throw ConfigError("sample_frames: fps must be positive");
    if (max_frames < 1) throw ConfigError("sample_frames: max_frames must be positive");

    // keep the first frame of each fps bucket
    std::vector<int> decimated;
    long long last_bucket = -1;
    for (int i = 0; i < raw.count(); ++i) {
        const long long bucket = static_cast<long long>(std::floor(raw.timestamps[i] * fps));
        if (bucket != last_bucket) {
            decimated.push_back(i);
            last_bucket = bucket;
        }
    }

    std::vector<int> chosen;
    if (static_cast<int>(decimated.size()) > max_frames) {
        for (int k : uniform_sample_indices(static_cast<int>(decimated.size()), max_frames))
            chosen.push_back(decimated[static_cast<std::size_t>(k)]);
    } else {
        chosen = decimated;
    }

    const int real = static_cast<int>(chosen.size());
    const std::size_t per_frame =
        static_cast<std::size_t>(raw.channels) * raw.height * raw.width;

    FrameClip clip;
    clip.frames = max_frames;
    clip.channels = raw.channels;
    clip.height = raw.height;
    clip.width = raw.width;
    clip.data.assign(static_cast<std::size_t>(max_frames) * per_frame, 0.0);
    clip.frame_mask.assign(static_cast<std::size_t>(max_frames), 0);
    for (int f = 0; f < real; ++f) {
        const double* src = raw.data.data() + static_cast<std::size_t>(chosen[f]) * per_frame;
        double* dst = clip.data.data() + static_cast<std::size_t>(f) * per_frame;
        std::copy(src, src + per_frame, dst);
        clip.frame_mask[static_cast<std::size_t>(f)] = 1;
    }
    if (normalize)
        normalize_frames(clip.data, raw.channels, raw.height * raw.width);
    return clip;
}

std::vector<double> inflate_patch_kernel(const std::vector<double>& kernel2d,
                                         int out_dim, int channels, int patch,
                                         int temporal_kernel) {
    if (temporal_kernel < 1 || temporal_kernel % 2 == 0)
        throw ConfigError("inflate_patch_kernel: temporal kernel must be odd");
    const std::size_t plane = static_cast<std::size_t>(patch) * patch;
    if (kernel2d.size() != static_cast<std::size_t>(out_dim) * channels * plane)
        throw Error("inflate_patch_kernel: kernel2d size mismatch");

    const int half = temporal_kernel / 2;
    std::vector<double> k3(static_cast<std::size_t>(out_dim) * channels *
                               temporal_kernel * plane,
                           0.0);
    for (int d = 0; d < out_dim; ++d) {
        for (int c = 0; c < channels; ++c) {
            const double* src = kernel2d.data() +
                                (static_cast<std::size_t>(d) * channels + c) * plane;
            double* dst = k3.data() +
                          ((static_cast<std::size_t>(d) * channels + c) * temporal_kernel +
                           half) * plane;
            std::copy(src, src + plane, dst);
        }
    }
    return k3;
}

namespace detail {

namespace {

Tensor init_matrix(nn::ParamStore& store, const std::string& name, int rows,
                   int cols, nn::Rng& rng, double stddev) {
    Tensor t = store.create(name, rows, cols);
    for (auto& v : t.data()) v = rng.normal(0.0, stddev);
    return t;
}

Tensor init_ones(nn::ParamStore& store, const std::string& name, int cols) {
    Tensor t = store.create(name, 1, cols);
    std::fill(t.data().begin(), t.data().end(), 1.0);
    return t;
}

}  // namespace

std::vector<TransformerBlock> make_blocks(const EncoderConfig& cfg, int layers,
                                          nn::ParamStore& store,
                                          const std::string& prefix, nn::Rng& rng) {
    const int d = cfg.embed_dim;
    const int m = d * cfg.mlp_ratio;
    const double ws = 1.0 / std::sqrt(static_cast<double>(d));
    const double ms = 1.0 / std::sqrt(static_cast<double>(m));
    std::vector<TransformerBlock> blocks;
    blocks.reserve(static_cast<std::size_t>(layers));
    for (int l = 0; l < layers; ++l) {
        const std::string p = prefix + ".block" + std::to_string(l);
        TransformerBlock b;
        b.ln1_g = init_ones(store, p + ".ln1.g", d);
        b.ln1_b = store.create(p + ".ln1.b", 1, d);
        b.wq = init_matrix(store, p + ".attn.wq", d, d, rng, ws);
        b.bq = store.create(p + ".attn.bq", 1, d);
        b.wk = init_matrix(store, p + ".attn.wk", d, d, rng, ws);
        b.bk = store.create(p + ".attn.bk", 1, d);
        b.wv = init_matrix(store, p + ".attn.wv", d, d, rng, ws);
        b.bv = store.create(p + ".attn.bv", 1, d);
        b.wo = init_matrix(store, p + ".attn.wo", d, d, rng, ws);
        b.bo = store.create(p + ".attn.bo", 1, d);
        b.ln2_g = init_ones(store, p + ".ln2.g", d);
        b.ln2_b = store.create(p + ".ln2.b", 1, d);
        b.w1 = init_matrix(store, p + ".mlp.w1", d, m, rng, ws);
        b.b1 = store.create(p + ".mlp.b1", 1, m);
        b.w2 = init_matrix(store, p + ".mlp.w2", m, d, rng, ms);
        b.b2 = store.create(p + ".mlp.b2", 1, d);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

Tensor run_blocks(Tensor x, const std::vector<TransformerBlock>& blocks, int batch,
                  int seq_len, int heads, const std::vector<std::uint8_t>& key_mask) {
    using namespace nn;
    for (const auto& b : blocks) {
        Tensor h = layer_norm(x, b.ln1_g, b.ln1_b);
        Tensor q = add_rowvec(matmul(h, b.wq), b.bq);
        Tensor k = add_rowvec(matmul(h, b.wk), b.bk);
        Tensor v = add_rowvec(matmul(h, b.wv), b.bv);
        Tensor attn = multihead_attention(q, k, v, batch, seq_len, heads, key_mask);
        x = add(x, add_rowvec(matmul(attn, b.wo), b.bo));
        Tensor h2 = layer_norm(x, b.ln2_g, b.ln2_b);
        Tensor mid = quick_gelu(add_rowvec(matmul(h2, b.w1), b.b1));
        x = add(x, add_rowvec(matmul(mid, b.w2), b.b2));
    }
    return x;
}

}  // namespace detail

TextEncoder::TextEncoder(const EncoderConfig& cfg, nn::ParamStore& store,
                         const std::string& prefix, nn::Rng& rng)
    : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.embed_dim;
    const int vocab_rows = cfg_.vocab_size + Vocabulary::kReserved;
    token_emb_ = detail::init_matrix(store, prefix + ".token_emb", vocab_rows, d, rng, 0.02);
    pos_emb_ = detail::init_matrix(store, prefix + ".pos_emb", cfg_.max_tokens, d, rng, 0.01);
    blocks_ = detail::make_blocks(cfg_, cfg_.text_layers, store, prefix, rng);
    lnf_g_ = detail::init_ones(store, prefix + ".lnf.g", d);
    lnf_b_ = store.create(prefix + ".lnf.b", 1, d);
    proj_ = detail::init_matrix(store, prefix + ".proj", d, d, rng,
                                1.0 / std::sqrt(static_cast<double>(d)));
}

Tensor TextEncoder::encode(const std::vector<TokenSequence>& batch) const {
    using namespace nn;
    if (batch.empty()) throw Error("text encoder: empty batch");
    const int L = cfg_.max_tokens;
    const int B = static_cast<int>(batch.size());

    std::vector<int> ids;
    std::vector<int> pos_ids;
    std::vector<std::uint8_t> mask;
    std::vector<int> end_rows;
    ids.reserve(static_cast<std::size_t>(B) * L);
    pos_ids.reserve(static_cast<std::size_t>(B) * L);
    mask.reserve(static_cast<std::size_t>(B) * L);
    for (int b = 0; b < B; ++b) {
        const auto& seq = batch[static_cast<std::size_t>(b)];
        if (static_cast<int>(seq.ids.size()) != L ||
            static_cast<int>(seq.mask.size()) != L)
            throw Error("text encoder: sequence length mismatch");
        const int len = seq.length();
        if (len < 2) throw Error("text encoder: sequence mask covers fewer than 2 tokens");
        end_rows.push_back(b * L + len - 1);
        for (int i = 0; i < L; ++i) {
            ids.push_back(seq.ids[static_cast<std::size_t>(i)]);
            pos_ids.push_back(i);
            mask.push_back(seq.mask[static_cast<std::size_t>(i)]);
        }
    }

    Tensor x = add(embedding(token_emb_, ids), embedding(pos_emb_, pos_ids));
    x = detail::run_blocks(x, blocks_, B, L, cfg_.heads, mask);
    x = layer_norm(x, lnf_g_, lnf_b_);
    Tensor pooled = select_rows(x, end_rows);
    return row_l2_normalize(matmul(pooled, proj_));
}

VideoEncoder::VideoEncoder(const EncoderConfig& cfg, nn::ParamStore& store,
                           const std::string& prefix, nn::Rng& rng)
    : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.embed_dim;
    const int p = cfg_.patch_size;
    const std::size_t k2_size = static_cast<std::size_t>(d) * 3 * p * p;
    kernel2d_init_.resize(k2_size);
    const double ks = 1.0 / std::sqrt(static_cast<double>(3 * p * p));
    for (auto& v : kernel2d_init_) v = rng.normal(0.0, ks);

    kernel3d_ = Tensor::from(
        inflate_patch_kernel(kernel2d_init_, d, 3, p, cfg_.temporal_kernel), d,
        3 * cfg_.temporal_kernel * p * p);
    store.register_tensor(prefix + ".patch_kernel", kernel3d_);

    cls_ = detail::init_matrix(store, prefix + ".cls", 1, d, rng, 0.02);
    pos_emb_ = detail::init_matrix(store, prefix + ".pos_emb",
                                   cfg_.patches_per_frame() + 1, d, rng, 0.01);
    ln_pre_g_ = detail::init_ones(store, prefix + ".ln_pre.g", d);
    ln_pre_b_ = store.create(prefix + ".ln_pre.b", 1, d);
    blocks_ = detail::make_blocks(cfg_, cfg_.vision_layers, store, prefix, rng);
    ln_post_g_ = detail::init_ones(store, prefix + ".ln_post.g", d);
    ln_post_b_ = store.create(prefix + ".ln_post.b", 1, d);
    proj_ = detail::init_matrix(store, prefix + ".proj", d, d, rng,
                                1.0 / std::sqrt(static_cast<double>(d)));
}

Tensor VideoEncoder::encode(const std::vector<FrameClip>& clips) const {
    using namespace nn;
    if (clips.empty()) throw Error("video encoder: empty batch");
    const int d = cfg_.embed_dim;
    const int P = cfg_.patches_per_frame();
    const int L = P + 1;

    // per-clip patch embeddings over the unmasked prefix only
    std::vector<Tensor> patch_parts;
    std::vector<int> frames_per_clip;
    int total_frames = 0;
    for (const auto& clip : clips) {
        clip.validate();
        if (clip.channels != 3 || clip.height != cfg_.frame_size ||
            clip.width != cfg_.frame_size)
            throw Error("video encoder: clip geometry does not match config");
        const int real = clip.real_frames();
        std::vector<double> buf(clip.data.begin(),
                                clip.data.begin() +
                                    static_cast<std::ptrdiff_t>(real) * 3 *
                                        clip.height * clip.width);
        patch_parts.push_back(patch_embed3d(buf, real, 3, clip.height, clip.width,
                                            kernel3d_, cfg_.temporal_kernel,
                                            cfg_.patch_size));
        frames_per_clip.push_back(real);
        total_frames += real;
    }
    Tensor patches = concat_rows(patch_parts);  // [total_frames * P, d]

    // interleave a cls row in front of each frame's patches
    Tensor base = concat_rows({cls_, patches});
    std::vector<int> token_idx;
    std::vector<int> pos_ids;
    token_idx.reserve(static_cast<std::size_t>(total_frames) * L);
    pos_ids.reserve(static_cast<std::size_t>(total_frames) * L);
    for (int f = 0; f < total_frames; ++f) {
        token_idx.push_back(0);
        pos_ids.push_back(0);
        for (int q = 0; q < P; ++q) {
            token_idx.push_back(1 + f * P + q);
            pos_ids.push_back(1 + q);
        }
    }
    Tensor x = add(select_rows(base, token_idx), embedding(pos_emb_, pos_ids));
    x = layer_norm(x, ln_pre_g_, ln_pre_b_);
    x = detail::run_blocks(x, blocks_, total_frames, L, cfg_.heads, {});

    std::vector<int> cls_rows;
    cls_rows.reserve(static_cast<std::size_t>(total_frames));
    for (int f = 0; f < total_frames; ++f) cls_rows.push_back(f * L);
    Tensor frame_feats = layer_norm(select_rows(x, cls_rows), ln_post_g_, ln_post_b_);

    // masked mean over each clip's frames
    std::vector<Tensor> pooled;
    int off = 0;
    for (int real : frames_per_clip) {
        std::vector<int> rows;
        rows.reserve(static_cast<std::size_t>(real));
        for (int f = 0; f < real; ++f) rows.push_back(off + f);
        pooled.push_back(mean_rows(select_rows(frame_feats, rows)));
        off += real;
    }
    Tensor video = concat_rows(pooled);  // [B, d]
    (void)d;
    return row_l2_normalize(matmul(video, proj_));
}

}  // namespace vadb::enc
