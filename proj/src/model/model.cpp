#include "segforge/model.hpp"

#include <cmath>
#include <sstream>

#include "segforge/errors.hpp"
#include "segforge/random.hpp"

namespace segforge {

using ad::DiffArray;

ModelConfig ModelConfig::desk_scale(int num_classes, std::uint64_t seed) {
    ModelConfig c;
    c.num_stages = 2;
    c.layers_per_stage = 4;
    c.filters = 16;
    c.num_classes = num_classes;
    c.seed = seed;
    return c;
}

void ModelConfig::validate() const {
    if (num_stages < 1) throw ValidationError("model needs at least one stage");
    if (layers_per_stage < 1) throw ValidationError("layers_per_stage must be >= 1");
    if (filters < 1) throw ValidationError("filters must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw ValidationError("kernel size must be odd and positive");
    if (num_classes < 1) throw ValidationError("class count must be >= 1");
    if (in_channels < 1) throw ValidationError("in_channels must be >= 1");
    if (layers_per_stage > 30) throw ValidationError("layers_per_stage too large for dilation 2^i");
}

DiffArray gcn_block_forward(const DiffArray& x, GcnBlockParams& params, std::span<const DiffArray> adjacency,
                            ad::BatchNormMode mode) {
    if (x.rank() != 3) {
        throw ValidationError("gcn block input must be [C, T, N], got " + ad::shape_string(x.shape()));
    }
    if (adjacency.size() != params.channel_mix.size() || adjacency.size() != params.masks.size()) {
        throw ValidationError("gcn block partition count does not match the adjacency");
    }
    const std::size_t C_in = x.dim(0), T = x.dim(1), N = x.dim(2);
    DiffArray mixed;
    for (std::size_t p = 0; p < adjacency.size(); ++p) {
        const auto& W = params.channel_mix[p];
        if (W.rank() != 2 || W.dim(1) != C_in) {
            throw ValidationError("gcn block channel mix " + ad::shape_string(W.shape()) + " does not take " +
                                  std::to_string(C_in) + " channels");
        }
        auto propagated = ad::graph_propagate(x, adjacency[p], params.masks[p]);
        auto term = ad::matmul(W, ad::reshape(propagated, {C_in, T * N}));
        mixed = mixed.defined() ? ad::add(mixed, term) : term;
    }
    const std::size_t C_out = mixed.dim(0);
    auto h = ad::conv1d_dilated(ad::reshape(mixed, {C_out, T, N}), params.temporal_weight, params.temporal_bias, 1);
    if (params.use_batchnorm) {
        h = ad::batchnorm(h, params.bn_gamma, params.bn_beta, params.bn, mode);
    }
    return ad::relu(h);
}

DiffArray tcn_block_forward(const DiffArray& x, const TcnBlockParams& params) {
    if (x.rank() != 2) {
        throw ValidationError("tcn block input must be [C, T], got " + ad::shape_string(x.shape()));
    }
    auto h = ad::relu(ad::conv1d_dilated(x, params.w1, params.b1, params.dilation));
    return ad::add(x, ad::conv1d_dilated(h, params.w2, params.b2, 1));
}

ProbTable to_prob_table(const DiffArray& probs) {
    if (probs.rank() != 2) {
        throw ValidationError("probability table must be [T, L]");
    }
    return {probs.dim(0), probs.dim(1), {probs.values().begin(), probs.values().end()}};
}

std::vector<int> predict_labels(const ProbTable& table) {
    std::vector<int> out(table.frames, 0);
    for (std::size_t t = 0; t < table.frames; ++t) {
        std::size_t best = 0;
        for (std::size_t l = 1; l < table.classes; ++l) {
            if (table.at(t, l) > table.at(t, best)) best = l;
        }
        out[t] = static_cast<int>(best);
    }
    return out;
}

SegmentationModel::SegmentationModel(ModelConfig cfg, SkeletonTopology topology)
    : cfg_(cfg), topology_(std::move(topology)) {
    cfg_.validate();
    if (topology_.partitions.empty()) {
        throw ValidationError("topology has no adjacency partitions");
    }
    const auto N = static_cast<std::size_t>(topology_.joint_count);
    for (const auto& a : topology_.partitions) {
        adjacency_.push_back(DiffArray::constant({N, N}, a.data));
    }
    initialize();
}

void SegmentationModel::initialize() {
    Rng rng(splitmix64(cfg_.seed));
    auto uniform_param = [&rng](ad::Shape shape, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::vector<double> v(ad::element_count(shape));
        for (auto& x : v) x = uniform_real(rng, -bound, bound);
        return DiffArray::parameter(std::move(shape), std::move(v));
    };
    auto filled = [](ad::Shape shape, double value) {
        const auto n = ad::element_count(shape);
        return DiffArray::parameter(std::move(shape), std::vector<double>(n, value));
    };

    const auto C = static_cast<std::size_t>(cfg_.filters);
    const auto L = static_cast<std::size_t>(cfg_.num_classes);
    const auto K = static_cast<std::size_t>(cfg_.kernel);
    const auto N = static_cast<std::size_t>(topology_.joint_count);
    const auto layers = static_cast<std::size_t>(cfg_.layers_per_stage);

    prediction_ = {};
    for (std::size_t b = 0; b < layers; ++b) {
        const std::size_t c_in = b == 0 ? static_cast<std::size_t>(cfg_.in_channels) : C;
        GcnBlockParams blk;
        for (std::size_t p = 0; p < adjacency_.size(); ++p) {
            blk.channel_mix.push_back(uniform_param({C, c_in}, c_in));
            blk.masks.push_back(filled({N, N}, 1.0));
        }
        blk.temporal_weight = uniform_param({C, C, K}, C * K);
        blk.temporal_bias = filled({C}, 0.0);
        blk.bn_gamma = filled({C}, 1.0);
        blk.bn_beta = filled({C}, 0.0);
        blk.bn = ad::BatchNormState(C);
        blk.use_batchnorm = cfg_.gcn_batchnorm;
        prediction_.blocks.push_back(std::move(blk));
    }
    prediction_.out_w = uniform_param({L + 1, C, 1}, C);
    prediction_.out_b = filled({L + 1}, 0.0);

    refinement_.clear();
    for (int s = 1; s < cfg_.num_stages; ++s) {
        RefinementStage st;
        st.in_w = uniform_param({C, L, 1}, L);
        st.in_b = filled({C}, 0.0);
        for (std::size_t i = 0; i < layers; ++i) {
            TcnBlockParams blk;
            blk.w1 = uniform_param({C, C, K}, C * K);
            blk.b1 = filled({C}, 0.0);
            blk.w2 = uniform_param({C, C, 1}, C);
            blk.b2 = filled({C}, 0.0);
            blk.dilation = std::size_t{1} << i;
            st.layers.push_back(std::move(blk));
        }
        st.out_w = uniform_param({L + 1, C, 1}, C);
        st.out_b = filled({L + 1}, 0.0);
        refinement_.push_back(std::move(st));
    }
}

namespace {

StageOutput make_stage_output(DiffArray logits, std::size_t L) {
    StageOutput out;
    out.class_probs = ad::softmax_rows(ad::transpose(ad::narrow(logits, 0, L)));
    out.ctc_probs = ad::softmax_rows(ad::transpose(logits));
    out.logits = std::move(logits);
    return out;
}

}  // namespace

std::vector<StageOutput> SegmentationModel::forward(const FeatureTensor& features, ad::BatchNormMode mode) {
    if (features.channels != static_cast<std::size_t>(cfg_.in_channels)) {
        throw ValidationError("features have " + std::to_string(features.channels) + " channels, model expects " +
                              std::to_string(cfg_.in_channels));
    }
    if (features.joints != static_cast<std::size_t>(topology_.joint_count)) {
        throw ValidationError("features have " + std::to_string(features.joints) + " joints, topology has " +
                              std::to_string(topology_.joint_count));
    }
    if (features.frames == 0) {
        throw ValidationError("empty feature tensor");
    }
    const auto L = static_cast<std::size_t>(cfg_.num_classes);
    const std::size_t T = features.frames;

    std::vector<StageOutput> outputs;
    auto h = DiffArray::constant({features.channels, T, features.joints}, features.values);
    for (auto& blk : prediction_.blocks) {
        h = gcn_block_forward(h, blk, adjacency_, mode);
    }
    auto pooled = ad::mean_last_axis(h);  // [C, T]
    outputs.push_back(make_stage_output(ad::conv1d_dilated(pooled, prediction_.out_w, prediction_.out_b, 1), L));

    for (const auto& st : refinement_) {
        const auto& prev = outputs.back();
        auto input = cfg_.refine_from_logits ? ad::narrow(prev.logits, 0, L) : ad::transpose(prev.class_probs);
        auto x = ad::conv1d_dilated(input, st.in_w, st.in_b, 1);
        for (const auto& blk : st.layers) x = tcn_block_forward(x, blk);
        outputs.push_back(make_stage_output(ad::conv1d_dilated(x, st.out_w, st.out_b, 1), L));
    }
    return outputs;
}

std::vector<std::pair<std::string, DiffArray>> SegmentationModel::named_parameters() const {
    std::vector<std::pair<std::string, DiffArray>> out;
    for (std::size_t b = 0; b < prediction_.blocks.size(); ++b) {
        const auto& blk = prediction_.blocks[b];
        const std::string pre = "stage0.block" + std::to_string(b) + ".";
        for (std::size_t p = 0; p < blk.channel_mix.size(); ++p) {
            out.emplace_back(pre + "mix" + std::to_string(p), blk.channel_mix[p]);
            out.emplace_back(pre + "mask" + std::to_string(p), blk.masks[p]);
        }
        out.emplace_back(pre + "temporal_w", blk.temporal_weight);
        out.emplace_back(pre + "temporal_b", blk.temporal_bias);
        if (blk.use_batchnorm) {
            out.emplace_back(pre + "bn_gamma", blk.bn_gamma);
            out.emplace_back(pre + "bn_beta", blk.bn_beta);
        }
    }
    out.emplace_back("stage0.out_w", prediction_.out_w);
    out.emplace_back("stage0.out_b", prediction_.out_b);
    for (std::size_t s = 0; s < refinement_.size(); ++s) {
        const auto& st = refinement_[s];
        const std::string pre = "stage" + std::to_string(s + 1) + ".";
        out.emplace_back(pre + "in_w", st.in_w);
        out.emplace_back(pre + "in_b", st.in_b);
        for (std::size_t i = 0; i < st.layers.size(); ++i) {
            const std::string lp = pre + "layer" + std::to_string(i) + ".";
            out.emplace_back(lp + "w1", st.layers[i].w1);
            out.emplace_back(lp + "b1", st.layers[i].b1);
            out.emplace_back(lp + "w2", st.layers[i].w2);
            out.emplace_back(lp + "b2", st.layers[i].b2);
        }
        out.emplace_back(pre + "out_w", st.out_w);
        out.emplace_back(pre + "out_b", st.out_b);
    }
    return out;
}

std::vector<DiffArray> SegmentationModel::parameters() const {
    std::vector<DiffArray> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
}

ad::Checkpoint SegmentationModel::to_checkpoint() const {
    ad::Checkpoint ckpt;
    auto& m = ckpt.meta;
    m.emplace_back("model.stages", std::to_string(cfg_.num_stages));
    m.emplace_back("model.layers_per_stage", std::to_string(cfg_.layers_per_stage));
    m.emplace_back("model.filters", std::to_string(cfg_.filters));
    m.emplace_back("model.kernel", std::to_string(cfg_.kernel));
    m.emplace_back("model.classes", std::to_string(cfg_.num_classes));
    m.emplace_back("model.in_channels", std::to_string(cfg_.in_channels));
    m.emplace_back("model.refine_from_logits", cfg_.refine_from_logits ? "true" : "false");
    m.emplace_back("model.gcn_batchnorm", cfg_.gcn_batchnorm ? "true" : "false");
    m.emplace_back("model.seed", std::to_string(cfg_.seed));
    m.emplace_back("topology.joints", std::to_string(topology_.joint_count));
    std::string edges;
    for (const auto& [a, b] : topology_.edges) {
        if (!edges.empty()) edges += ",";
        edges += std::to_string(a) + "-" + std::to_string(b);
    }
    m.emplace_back("topology.edges", edges.empty() ? "none" : edges);
    m.emplace_back("topology.strategy", std::string(to_string(topology_.strategy)));
    m.emplace_back("topology.center", std::to_string(topology_.center));

    for (const auto& [name, p] : named_parameters()) {
        ckpt.arrays.push_back({name, p.shape(), {p.values().begin(), p.values().end()}});
    }
    for (std::size_t b = 0; b < prediction_.blocks.size(); ++b) {
        const auto& blk = prediction_.blocks[b];
        if (!blk.use_batchnorm) continue;
        const std::string pre = "stage0.block" + std::to_string(b) + ".";
        ckpt.arrays.push_back({pre + "bn_running_mean", {blk.bn.running_mean.size()}, blk.bn.running_mean});
        ckpt.arrays.push_back({pre + "bn_running_var", {blk.bn.running_var.size()}, blk.bn.running_var});
    }
    return ckpt;
}

SegmentationModel SegmentationModel::from_checkpoint(const ad::Checkpoint& ckpt) {
    auto need = [&ckpt](const std::string& key) -> const std::string& {
        const auto* v = ckpt.meta_value(key);
        if (!v) throw ParseError("checkpoint is missing '" + key + "'");
        return *v;
    };
    auto as_int = [&need](const std::string& key) {
        try {
            return std::stoll(need(key));
        } catch (const std::logic_error&) {
            throw ParseError("checkpoint value for '" + key + "' is not an integer");
        }
    };

    ModelConfig cfg;
    cfg.num_stages = static_cast<int>(as_int("model.stages"));
    cfg.layers_per_stage = static_cast<int>(as_int("model.layers_per_stage"));
    cfg.filters = static_cast<int>(as_int("model.filters"));
    cfg.kernel = static_cast<int>(as_int("model.kernel"));
    cfg.num_classes = static_cast<int>(as_int("model.classes"));
    cfg.in_channels = static_cast<int>(as_int("model.in_channels"));
    cfg.refine_from_logits = need("model.refine_from_logits") == "true";
    cfg.gcn_batchnorm = need("model.gcn_batchnorm") == "true";
    cfg.seed = static_cast<std::uint64_t>(std::stoull(need("model.seed")));

    std::vector<Edge> edges;
    const auto& edge_text = need("topology.edges");
    if (edge_text != "none") {
        std::istringstream ss(edge_text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto dash = item.find('-');
            if (dash == std::string::npos) throw ParseError("bad topology edge '" + item + "'");
            edges.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
        }
    }
    auto topo = SkeletonTopology::make(static_cast<int>(as_int("topology.joints")), std::move(edges),
                                       parse_partition_strategy(need("topology.strategy")),
                                       static_cast<int>(as_int("topology.center")));

    SegmentationModel model(cfg, std::move(topo));
    for (auto& [name, p] : model.named_parameters()) {
        const auto* a = ckpt.find(name);
        if (!a) throw ParseError("checkpoint is missing array '" + name + "'");
        if (a->shape != p.shape()) {
            throw ParseError("checkpoint array '" + name + "' has shape " + ad::shape_string(a->shape) +
                             ", expected " + ad::shape_string(p.shape()));
        }
        auto dst = p.mutable_values();
        std::copy(a->values.begin(), a->values.end(), dst.begin());
    }
    for (std::size_t b = 0; b < model.prediction_.blocks.size(); ++b) {
        auto& blk = model.prediction_.blocks[b];
        if (!blk.use_batchnorm) continue;
        const std::string pre = "stage0.block" + std::to_string(b) + ".";
        const auto* mean = ckpt.find(pre + "bn_running_mean");
        const auto* var = ckpt.find(pre + "bn_running_var");
        if (!mean || !var || mean->values.size() != blk.bn.running_mean.size() ||
            var->values.size() != blk.bn.running_var.size()) {
            throw ParseError("checkpoint is missing batchnorm statistics for block " + std::to_string(b));
        }
        blk.bn.running_mean = mean->values;
        blk.bn.running_var = var->values;
    }
    return model;
}

}  // namespace segforge
