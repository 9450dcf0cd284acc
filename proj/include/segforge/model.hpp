#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segforge/autodiff.hpp"
#include "segforge/checkpoint.hpp"
#include "segforge/ops.hpp"
#include "segforge/sequence.hpp"
#include "segforge/topology.hpp"

namespace segforge {

struct ModelConfig {
    int num_stages = 4;  // one prediction stage + (num_stages - 1) refinement stages
    int layers_per_stage = 10;
    int filters = 64;
    int kernel = 3;
    int num_classes = 0;
    int in_channels = 4;
    /// Refinement stages read the previous stage's logits instead of its
    /// probabilities.
    bool refine_from_logits = false;
    bool gcn_batchnorm = true;
    std::uint64_t seed = 0;

    /// S=2, 4 layers per stage, 16 filters.
    static ModelConfig desk_scale(int num_classes, std::uint64_t seed = 0);

    void validate() const;
};

/// One spatial-temporal graph block:
/// ReLU(BN(W1 * (sum_p W_p (x (A_p . M_p))) + b1)).
struct GcnBlockParams {
    std::vector<ad::DiffArray> channel_mix;  // P x [C_out, C_in]
    std::vector<ad::DiffArray> masks;        // P x [N, N], initialized to ones
    ad::DiffArray temporal_weight;           // [C_out, C_out, k]
    ad::DiffArray temporal_bias;             // [C_out]
    ad::DiffArray bn_gamma;
    ad::DiffArray bn_beta;
    ad::BatchNormState bn;
    bool use_batchnorm = true;
};

/// Residual dilated block: x + W2 * ReLU(W1 *_d x + b1) + b2, on [C, T].
struct TcnBlockParams {
    ad::DiffArray w1;  // [C, C, k]
    ad::DiffArray b1;
    ad::DiffArray w2;  // [C, C, 1]
    ad::DiffArray b2;
    std::size_t dilation = 1;
};

struct PredictionStage {
    std::vector<GcnBlockParams> blocks;
    ad::DiffArray out_w;  // [L + 1, C, 1]
    ad::DiffArray out_b;
};

struct RefinementStage {
    ad::DiffArray in_w;  // [C, L, 1]
    ad::DiffArray in_b;
    std::vector<TcnBlockParams> layers;
    ad::DiffArray out_w;  // [L + 1, C, 1]
    ad::DiffArray out_b;
};

/// x: [C_in, T, N]. `adjacency` holds one [N, N] constant per partition.
ad::DiffArray gcn_block_forward(const ad::DiffArray& x, GcnBlockParams& params,
                                std::span<const ad::DiffArray> adjacency, ad::BatchNormMode mode);

/// x: [C, T] (channel-major; the frame axis is preserved).
ad::DiffArray tcn_block_forward(const ad::DiffArray& x, const TcnBlockParams& params);

/// Outputs of one stage. Class probabilities feed the classification and
/// smoothing losses; the CTC head adds a blank logit (index L) and is
/// normalized separately.
struct StageOutput {
    ad::DiffArray logits;       // [L + 1, T]
    ad::DiffArray class_probs;  // [T, L]
    ad::DiffArray ctc_probs;    // [T, L + 1]
};

/// T x L per-frame class probabilities.
struct ProbTable {
    std::size_t frames = 0;
    std::size_t classes = 0;
    std::vector<double> probs;

    double at(std::size_t t, std::size_t l) const { return probs[t * classes + l]; }
};

ProbTable to_prob_table(const ad::DiffArray& probs);

/// Per-frame argmax; ties go to the lower class id.
std::vector<int> predict_labels(const ProbTable& table);

class SegmentationModel {
public:
    SegmentationModel(ModelConfig cfg, SkeletonTopology topology);

    /// Returns one output per stage; the last is the final prediction.
    std::vector<StageOutput> forward(const FeatureTensor& features, ad::BatchNormMode mode);

    /// Trainable parameters in a fixed order.
    std::vector<ad::DiffArray> parameters() const;
    std::vector<std::pair<std::string, ad::DiffArray>> named_parameters() const;

    const ModelConfig& config() const { return cfg_; }
    const SkeletonTopology& topology() const { return topology_; }
    PredictionStage& prediction_stage() { return prediction_; }
    std::vector<RefinementStage>& refinement_stages() { return refinement_; }

    /// Parameters, batchnorm running statistics, config and topology.
    ad::Checkpoint to_checkpoint() const;
    static SegmentationModel from_checkpoint(const ad::Checkpoint& ckpt);

private:
    void initialize();

    ModelConfig cfg_;
    SkeletonTopology topology_;
    std::vector<ad::DiffArray> adjacency_;
    PredictionStage prediction_;
    std::vector<RefinementStage> refinement_;
};

}  // namespace segforge
