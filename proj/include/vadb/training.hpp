#ifndef VADB_TRAINING_HPP
#define VADB_TRAINING_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vadb/encoders.hpp"
#include "vadb/fusion.hpp"
#include "vadb/metrics.hpp"
#include "vadb/nn/optim.hpp"
#include "vadb/report.hpp"

namespace vadb::train {

struct PretrainConfig {
    double lr = 1e-4;
    double warmup_fraction = 0.1;
    double decay = 0.9;  // per-epoch multiplier after warmup
    int batch_size = 8;  // paper value 64
    int epochs = 2;
    double grad_clip_norm = 1.0;
    double backbone_lr_coef = 1e-3;
    std::uint64_t seed = 1;
};

struct FinetuneConfig {
    enum class HeadKind { mlp3, linear };
    enum class EncoderInit { pretrained, random };
    HeadKind head_kind = HeadKind::mlp3;
    EncoderInit encoder_init = EncoderInit::pretrained;
    double lr = 1e-4;  // appendix value; the main text's 1e-3 is config-selectable
    int train_batch = 128;
    int val_batch = 32;
    int epochs = 20;
    int attribute_heads = 1;  // 1 = overall only, >1 = one head per scored dimension
    std::uint64_t seed = 1;
};

// Warmup ramps linearly over round(warmup_fraction * total_steps) steps;
// afterwards the base rate decays by `decay` at each epoch boundary.
double lr_at_step(std::uint64_t step, std::uint64_t total_steps,
                  const PretrainConfig& cfg);

struct ModelConfig {
    enc::EncoderConfig encoder;
    fusion::FusionConfig fusion;
};

// The full pretraining network: inflated video encoder, dual text encoders
// with disjoint parameters, fusion gate and temperature, in one ParamStore.
class VadbNet {
public:
    VadbNet(const ModelConfig& cfg, std::uint64_t seed);

    nn::ParamStore& store() { return store_; }
    const nn::ParamStore& store() const { return store_; }
    const ModelConfig& config() const { return cfg_; }

    const enc::VideoEncoder& video() const { return *video_; }
    const enc::TextEncoder& comment_encoder() const { return *comment_; }
    const enc::TextEncoder& tag_encoder() const { return *tag_; }
    const fusion::FusionGate& gate() const { return *gate_; }
    fusion::Temperature& temperature() { return *temperature_; }
    const fusion::Temperature& temperature() const { return *temperature_; }

    // parameter-name prefixes that take the reduced backbone learning rate
    static const std::vector<std::string>& backbone_prefixes();

private:
    ModelConfig cfg_;
    nn::ParamStore store_;
    std::unique_ptr<enc::VideoEncoder> video_;
    std::unique_ptr<enc::TextEncoder> comment_;
    std::unique_ptr<enc::TextEncoder> tag_;
    std::unique_ptr<fusion::FusionGate> gate_;
    std::unique_ptr<fusion::Temperature> temperature_;
};

struct PretrainSample {
    std::string video_id;
    enc::FrameClip clip;
    std::string comment;
    std::vector<std::string> tags;
};

struct StepLog {
    std::uint64_t step = 0;
    double lr = 0.0;
    double backbone_lr = 0.0;
    double loss = 0.0;
    double alpha_mean = 0.0;
    double temperature = 0.0;
};

struct PretrainResult {
    std::vector<StepLog> logs;
    std::uint64_t steps = 0;
};

using EpochHook = std::function<void(int epoch, std::uint64_t step, nn::Adam& opt)>;

// Stage-1 loop: encode, fuse, similarity, symmetric loss; two lr groups,
// global-norm clipping, per-epoch hook for checkpointing. Aborts with
// NanLossError (step, batch ids, temperature) on a non-finite loss.
PretrainResult pretrain(VadbNet& net, const std::vector<PretrainSample>& dataset,
                        const enc::Vocabulary& vocab, const PretrainConfig& cfg,
                        const EpochHook& on_epoch_end = {});

// fused text + video embeddings with gradients off, for retrieval checks
struct RetrievalEmbeddings {
    std::vector<double> text;   // n x dim
    std::vector<double> video;  // n x dim
    int n = 0;
    int dim = 0;
};
RetrievalEmbeddings embed_for_retrieval(const VadbNet& net,
                                        const std::vector<PretrainSample>& dataset,
                                        const enc::Vocabulary& vocab,
                                        int batch = 16);
// fraction of queries whose nearest neighbour is their own pair
double recall_at_1(const RetrievalEmbeddings& e, bool text_to_video);

// Regression heads (stage 2). mlp3 is in -> in -> in/2 -> 1 with ReLU after
// the first two layers; linear is a single affine map.
class RegressionHead {
public:
    RegressionHead(FinetuneConfig::HeadKind kind, int input_dim, nn::ParamStore& store,
                   const std::string& prefix, nn::Rng& rng);
    nn::Tensor forward(const nn::Tensor& features) const;  // [N, in] -> [N, 1]
    static std::size_t param_count(FinetuneConfig::HeadKind kind, int input_dim);

private:
    FinetuneConfig::HeadKind kind_;
    nn::Tensor w1_, b1_, w2_, b2_, w3_, b3_;
};

// Frozen-encoder features for a clip set, computed with gradients disabled.
std::vector<double> embed_clips(const enc::VideoEncoder& encoder,
                                const std::vector<enc::FrameClip>& clips,
                                int batch = 16);

struct FinetuneData {
    int n = 0;
    int dim = 0;
    std::vector<double> features;        // n x dim
    std::vector<std::string> video_ids;  // n
    std::vector<std::string> head_dims;  // K target dimensions
    std::vector<std::vector<int>> rows_per_head;
    std::vector<std::vector<double>> targets_per_head;

    std::uint64_t id_fingerprint() const;
};

// One RegressionHead per target dimension, no parameter sharing.
class ScoreHeads {
public:
    ScoreHeads(FinetuneConfig::HeadKind kind, int input_dim,
               std::vector<std::string> dims, std::uint64_t seed);

    nn::ParamStore& store() { return store_; }
    const std::vector<std::string>& dims() const { return dims_; }
    const RegressionHead& head(std::size_t k) const { return *heads_[k]; }

    // plain-value predictions, n x K row-major
    std::vector<double> predict(const std::vector<double>& features, int n,
                                int dim) const;

private:
    nn::ParamStore store_;
    std::vector<std::string> dims_;
    std::vector<std::unique_ptr<RegressionHead>> heads_;
};

struct FinetuneResult {
    std::vector<double> train_loss;  // per optimizer step (mean MSE over heads)
    std::vector<double> val_loss;    // per epoch
    int best_epoch = -1;
    double best_val_loss = 0.0;
    std::vector<double> train_predictions;  // n_train x K, from the best-val weights
    std::vector<double> val_predictions;    // n_val x K
};

// MSE fine-tuning of the heads only; the encoder never enters the graph.
// Keeps the weights from the epoch with the lowest validation loss.
FinetuneResult finetune(ScoreHeads& heads, const FinetuneData& train,
                        const FinetuneData& val, const FinetuneConfig& cfg,
                        int max_steps = 0);

// per-dimension paired samples from predictions against targets
std::vector<stats::PairedSample> paired_samples(const FinetuneData& data,
                                                const std::vector<double>& predictions,
                                                const std::vector<std::string>& head_dims);

enum class AblationKind { no_pretrain, linear_head };

struct AblationArm {
    std::string name;
    FinetuneConfig cfg;
    const FinetuneData* train = nullptr;
    const FinetuneData* val = nullptr;
};

struct AblationOutcome {
    stats::MetricsReport full_report;
    stats::MetricsReport ablated_report;
    FinetuneResult full_result;
    FinetuneResult ablated_result;
};

// Two fine-tune+evaluate runs differing only in the ablated component.
// Seeds, splits and every other config field must match or the harness
// refuses to run.
AblationOutcome run_ablation_arms(const AblationArm& full, const AblationArm& ablated,
                                  const stats::EvalConfig& eval_cfg);
AblationOutcome run_ablation(AblationKind kind, const FinetuneData& pretrained_train,
                             const FinetuneData& pretrained_val,
                             const FinetuneData& random_train,
                             const FinetuneData& random_val,
                             const FinetuneConfig& base_cfg,
                             const stats::EvalConfig& eval_cfg);

std::string render_comparison_table(
    const std::vector<std::pair<std::string, const stats::MetricsReport*>>& models);

// ---- checkpoints ----

struct CheckpointMeta {
    std::uint64_t config_hash = 0;
    std::uint64_t rng_state = 0;
    std::uint64_t step = 0;
};

// Versioned little-endian container of named parameter arrays grouped into
// sections, with optional Adam state for one section.
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, const nn::ParamStore*>>& sections,
                     const CheckpointMeta& meta, const std::string& opt_section = "",
                     const nn::Adam* opt = nullptr);

CheckpointMeta load_checkpoint(const std::filesystem::path& path,
                               const std::vector<std::pair<std::string, nn::ParamStore*>>& sections,
                               nn::Adam* opt = nullptr);

}  // namespace vadb::train

#endif
