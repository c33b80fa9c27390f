#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vadb/errors.hpp"
#include "vadb/training.hpp"

namespace vadb::train {

using nn::Tensor;

VadbNet::VadbNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.encoder.validate();
    nn::Rng vid_rng = nn::Rng::from_tag(seed, "init.video");
    video_ = std::make_unique<enc::VideoEncoder>(cfg_.encoder, store_, "video", vid_rng);
    nn::Rng comm_rng = nn::Rng::from_tag(seed, "init.text_comm");
    comment_ = std::make_unique<enc::TextEncoder>(cfg_.encoder, store_, "text_comm", comm_rng);
    nn::Rng tag_rng = nn::Rng::from_tag(seed, "init.text_tag");
    tag_ = std::make_unique<enc::TextEncoder>(cfg_.encoder, store_, "text_tag", tag_rng);
    nn::Rng gate_rng = nn::Rng::from_tag(seed, "init.fusion");
    gate_ = std::make_unique<fusion::FusionGate>(cfg_.encoder.embed_dim, cfg_.fusion,
                                                 store_, "fusion", gate_rng);
    temperature_ = std::make_unique<fusion::Temperature>(store_, "temperature");
}

const std::vector<std::string>& VadbNet::backbone_prefixes() {
    static const std::vector<std::string> prefixes = {"video.", "text_comm.", "text_tag."};
    return prefixes;
}

namespace {

std::string join_tags(const std::vector<std::string>& tags) {
    std::string out;
    for (const auto& t : tags) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

struct TokenizedSample {
    enc::TokenSequence comment;
    enc::TokenSequence tags;
};

std::vector<TokenizedSample> tokenize_dataset(const std::vector<PretrainSample>& dataset,
                                              const enc::Vocabulary& vocab,
                                              int max_tokens) {
    std::vector<TokenizedSample> out;
    out.reserve(dataset.size());
    for (const auto& s : dataset) {
        TokenizedSample t;
        t.comment = enc::tokenize(s.comment, vocab, max_tokens);
        t.tags = enc::tokenize(join_tags(s.tags), vocab, max_tokens);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

PretrainResult pretrain(VadbNet& net, const std::vector<PretrainSample>& dataset,
                        const enc::Vocabulary& vocab, const PretrainConfig& cfg,
                        const EpochHook& on_epoch_end) {
    if (dataset.empty()) throw Error("pretrain: empty dataset");
    if (cfg.batch_size < 1 || cfg.epochs < 1)
        throw ConfigError("pretrain: batch_size and epochs must be positive");

    const auto tokens = tokenize_dataset(dataset, vocab, net.config().encoder.max_tokens);

    const std::size_t n = dataset.size();
    const std::uint64_t steps_per_epoch =
        (n + static_cast<std::size_t>(cfg.batch_size) - 1) / cfg.batch_size;
    const std::uint64_t total_steps = steps_per_epoch * static_cast<std::uint64_t>(cfg.epochs);

    nn::Adam opt(net.store(), {}, VadbNet::backbone_prefixes(), cfg.backbone_lr_coef);

    PretrainResult result;
    result.logs.reserve(total_steps);
    std::uint64_t step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        nn::Rng order_rng = nn::Rng::from_tag(cfg.seed, "pretrain.order",
                                              static_cast<std::uint64_t>(epoch));
        order_rng.shuffle(order);

        for (std::size_t off = 0; off < n; off += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n, off + static_cast<std::size_t>(cfg.batch_size));
            std::vector<enc::FrameClip> clips;
            std::vector<enc::TokenSequence> comment_toks, tag_toks;
            std::vector<std::string> ids;
            for (std::size_t i = off; i < end; ++i) {
                const std::size_t k = order[i];
                clips.push_back(dataset[k].clip);
                comment_toks.push_back(tokens[k].comment);
                tag_toks.push_back(tokens[k].tags);
                ids.push_back(dataset[k].video_id);
            }

            Tensor f_vid = net.video().encode(clips);
            Tensor f_comm = net.comment_encoder().encode(comment_toks);
            Tensor f_tag = net.tag_encoder().encode(tag_toks);
            auto fused = net.gate().fuse(f_comm, f_tag);
            Tensor sim = fusion::similarity_matrix(fused.fused, f_vid,
                                                   net.temperature().scale());
            Tensor loss = nn::symmetric_contrastive_loss(sim);

            if (!std::isfinite(loss.item())) {
                std::ostringstream ids_str;
                for (std::size_t i = 0; i < ids.size(); ++i)
                    ids_str << (i ? "," : "") << ids[i];
                throw NanLossError("pretrain: non-finite loss", step, ids_str.str(),
                                   net.temperature().scale_value());
            }

            net.store().zero_grad();
            loss.backward();
            net.store().clip_grad_norm(cfg.grad_clip_norm);
            const double lr = lr_at_step(step, total_steps, cfg);
            opt.step(lr);
            net.temperature().clamp_scale();

            double alpha_mean = 0.0;
            for (double a : fused.alpha.data()) alpha_mean += a;
            alpha_mean /= static_cast<double>(fused.alpha.size());

            result.logs.push_back({step, lr, lr * cfg.backbone_lr_coef, loss.item(),
                                   alpha_mean, net.temperature().scale_value()});
            ++step;
        }
        if (on_epoch_end) on_epoch_end(epoch, step, opt);
    }
    result.steps = step;
    return result;
}

RetrievalEmbeddings embed_for_retrieval(const VadbNet& net,
                                        const std::vector<PretrainSample>& dataset,
                                        const enc::Vocabulary& vocab, int batch) {
    nn::GradGuard off(false);
    RetrievalEmbeddings out;
    out.n = static_cast<int>(dataset.size());
    out.dim = net.config().encoder.embed_dim;
    const auto tokens = tokenize_dataset(dataset, vocab, net.config().encoder.max_tokens);

    for (std::size_t off0 = 0; off0 < dataset.size(); off0 += static_cast<std::size_t>(batch)) {
        const std::size_t end = std::min(dataset.size(), off0 + static_cast<std::size_t>(batch));
        std::vector<enc::FrameClip> clips;
        std::vector<enc::TokenSequence> ctoks, ttoks;
        for (std::size_t i = off0; i < end; ++i) {
            clips.push_back(dataset[i].clip);
            ctoks.push_back(tokens[i].comment);
            ttoks.push_back(tokens[i].tags);
        }
        Tensor f_vid = net.video().encode(clips);
        Tensor f_comm = net.comment_encoder().encode(ctoks);
        Tensor f_tag = net.tag_encoder().encode(ttoks);
        auto fused = net.gate().fuse(f_comm, f_tag);
        out.video.insert(out.video.end(), f_vid.data().begin(), f_vid.data().end());
        out.text.insert(out.text.end(), fused.fused.data().begin(), fused.fused.data().end());
    }
    return out;
}

double recall_at_1(const RetrievalEmbeddings& e, bool text_to_video) {
    if (e.n == 0) return 0.0;
    const std::vector<double>& q = text_to_video ? e.text : e.video;
    const std::vector<double>& g = text_to_video ? e.video : e.text;
    int hits = 0;
    for (int i = 0; i < e.n; ++i) {
        int best = -1;
        double best_sim = -2.0;
        for (int j = 0; j < e.n; ++j) {
            double dot = 0.0;
            for (int d = 0; d < e.dim; ++d)
                dot += q[static_cast<std::size_t>(i) * e.dim + d] *
                       g[static_cast<std::size_t>(j) * e.dim + d];
            if (dot > best_sim) {
                best_sim = dot;
                best = j;
            }
        }
        hits += best == i;
    }
    return static_cast<double>(hits) / static_cast<double>(e.n);
}

}  // namespace vadb::train
