#include "segforge/app/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "segforge/app/synthdata.hpp"
#include "segforge/augment.hpp"
#include "segforge/checkpoint.hpp"
#include "segforge/errors.hpp"
#include "segforge/ops.hpp"
#include "segforge/random.hpp"

namespace segforge::app {

namespace fs = std::filesystem;

namespace {

std::vector<Edge> parse_edges(const std::string& text) {
    std::vector<Edge> edges;
    for (const auto& item : split_list(text)) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) throw ValidationError("edge '" + item + "' is not of the form a-b");
        try {
            edges.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
        } catch (const std::logic_error&) {
            throw ValidationError("edge '" + item + "' is not of the form a-b");
        }
    }
    return edges;
}

std::optional<CsvSchema> csv_schema_from(const Config& cfg) {
    auto joints = cfg.get_optional("data.joints");
    auto edges = cfg.get_optional("data.edges");
    auto names = cfg.get_optional("data.class_names");
    auto fps = cfg.get_optional("data.fps");
    if (!joints) return std::nullopt;
    CsvSchema s;
    s.joint_count = static_cast<int>(cfg.get_int("data.joints", 0));
    if (edges) s.edges = parse_edges(*edges);
    if (names) s.class_names = split_list(*names);
    if (fps) s.fps = cfg.get_double("data.fps", 30.0);
    return s;
}

SkeletonTopology topology_from(const Config& cfg, const LabeledSequence& ref) {
    const auto preset = cfg.get_string("topology.preset", "data");
    const auto strategy = parse_partition_strategy(cfg.get_string("topology.strategy", "spatial"));
    SkeletonTopology topo;
    if (preset == "data") {
        topo = SkeletonTopology::make(ref.joint_count, ref.edges, strategy,
                                      static_cast<int>(cfg.get_int("topology.center", 0)));
    } else if (preset == "chain") {
        topo = chain_topology(ref.joint_count, strategy);
    } else if (preset == "openpose18") {
        topo = openpose18_topology(strategy);
    } else if (preset == "ntu25") {
        topo = ntu25_topology(strategy);
    } else {
        throw ValidationError("unknown topology preset '" + preset + "'");
    }
    return topo;
}

ModelConfig model_config_from(const Config& cfg, int num_classes, std::uint64_t seed) {
    const auto profile = cfg.get_string("model.profile", "desk");
    ModelConfig base;
    if (profile == "desk") {
        base = ModelConfig::desk_scale(num_classes, seed);
    } else if (profile != "full") {
        throw ValidationError("unknown model profile '" + profile + "' (expected desk or full)");
    }
    ModelConfig m = base;
    m.num_classes = num_classes;
    m.seed = seed;
    m.num_stages = static_cast<int>(cfg.get_int("model.stages", base.num_stages));
    m.layers_per_stage = static_cast<int>(cfg.get_int("model.layers_per_stage", base.layers_per_stage));
    m.filters = static_cast<int>(cfg.get_int("model.filters", base.filters));
    m.kernel = static_cast<int>(cfg.get_int("model.kernel", base.kernel));
    m.refine_from_logits = cfg.get_bool("model.refine_from_logits", base.refine_from_logits);
    m.gcn_batchnorm = cfg.get_bool("model.gcn_batchnorm", base.gcn_batchnorm);
    m.validate();
    return m;
}

LossConfig loss_config_from(const Config& cfg) {
    LossConfig l;
    l.tau = cfg.get_double("loss.tau", l.tau);
    l.lambda = cfg.get_double("loss.lambda", l.lambda);
    l.mu = cfg.get_double("loss.mu", l.mu);
    l.per_stage = cfg.get_bool("loss.per_stage", l.per_stage);
    l.tmse_stop_gradient = cfg.get_bool("loss.tmse_stop_gradient", l.tmse_stop_gradient);
    if (auto drop = cfg.get_optional("loss.ctc_drop_class")) {
        l.ctc_drop_class = static_cast<int>(cfg.get_int("loss.ctc_drop_class", 0));
    }
    l.validate();
    return l;
}

EvalOptions eval_options_from(const Config& cfg) {
    EvalOptions e;
    e.thresholds = cfg.get_double_list("eval.thresholds", kDefaultThresholds);
    e.macro = cfg.get_bool("eval.macro", false);
    if (cfg.get_optional("eval.background")) e.background = static_cast<int>(cfg.get_int("eval.background", 0));
    return e;
}

void echo_config(const Config& cfg, const fs::path& dir, const std::string& name) {
    write_text_file(dir / (name + ".resolved.ini"), cfg.format_resolved());
}

std::string loss_row(int epoch, const LossBreakdown& b) {
    return std::to_string(epoch) + "," + format_real(b.cls) + "," + format_real(b.tmse) + "," + format_real(b.ctc) +
           "," + format_real(b.total) + "\n";
}

std::string join(const std::vector<std::string>& items, const char* sep) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
    return out;
}

// --- synthdata ------------------------------------------------------------

int cmd_synthdata(const Config& cfg, std::ostream& out) {
    ToySpec spec;
    spec.classes = static_cast<int>(cfg.get_int("synthdata.classes", spec.classes));
    spec.joints = static_cast<int>(cfg.get_int("synthdata.joints", spec.joints));
    spec.min_length = static_cast<int>(cfg.get_int("synthdata.min_length", spec.min_length));
    spec.max_length = static_cast<int>(cfg.get_int("synthdata.max_length", spec.max_length));
    spec.train_sequences = static_cast<int>(cfg.get_int("synthdata.train_sequences", spec.train_sequences));
    spec.test_sequences = static_cast<int>(cfg.get_int("synthdata.test_sequences", spec.test_sequences));
    spec.segments = static_cast<int>(cfg.get_int("synthdata.segments", spec.segments));
    for (const auto& c : cfg.get_list("synthdata.train_class_order")) {
        try {
            spec.train_class_order.push_back(std::stoi(c));
        } catch (const std::logic_error&) {
            throw ValidationError("synthdata.train_class_order item '" + c + "' is not an integer");
        }
    }
    spec.noise = cfg.get_double("synthdata.noise", spec.noise);
    spec.fps = cfg.get_double("synthdata.fps", spec.fps);
    spec.seed = cfg.get_uint("synthdata.seed", spec.seed);
    const fs::path dir = cfg.require_string("synthdata.output_dir");
    cfg.check_all_used();

    const auto data = generate_toy_dataset(spec);
    write_toy_dataset(data, dir);
    echo_config(cfg, dir, "synthdata");
    out << "synthdata: " << data.train.size() << " train and " << data.test.size() << " test sequences in "
        << dir.string() << " (class separation " << format_real(class_separation(spec)) << " rad)\n";
    return kExitOk;
}

// --- augment --------------------------------------------------------------

int cmd_augment(const Config& cfg, std::ostream& out) {
    const auto entries = cfg.get_list("augment.sources");
    const auto schema = csv_schema_from(cfg);
    AugmentOptions opt;
    opt.mode = parse_augment_mode(cfg.get_string("augment.mode", "ordered"));
    const auto selection = cfg.get_string("augment.selection", "exhaustive");
    if (selection == "exhaustive") {
        opt.selection = Selection::exhaustive();
    } else if (selection == "sample") {
        opt.selection = Selection::sample(cfg.get_uint("augment.count", 0), cfg.get_uint("augment.seed", 0));
    } else {
        throw ValidationError("augment.selection must be exhaustive or sample");
    }
    opt.splice.transition_frames = static_cast<int>(cfg.get_int("augment.transition_frames", 10));
    opt.splice.label_policy = parse_transition_policy(cfg.get_string("augment.label_policy", "extend_previous"));
    opt.splice.background_class = static_cast<int>(cfg.get_int("augment.transition_class", 0));
    if (cfg.get_optional("augment.exclude_class")) {
        opt.background = static_cast<int>(cfg.get_int("augment.exclude_class", 0));
    }
    opt.permutation_seed = cfg.get_uint("augment.permutation_seed", 0);
    opt.output_prefix = cfg.get_string("augment.prefix", "synth");
    const bool include_sources = cfg.get_bool("augment.include_sources", false);
    const fs::path dir = cfg.require_string("augment.output_dir");
    cfg.check_all_used();
    if (entries.empty()) throw ValidationError("augment.sources is empty");

    const auto pool = load_sequences(entries, schema);
    const auto plan = plan_augmentation(pool, opt);
    out << "augment: M=" << plan.source_count() << " sources, n=" << plan.slot_count()
        << " primitives, M^n=" << plan.combinations() << " combinations\n";

    const auto outputs = synthesize(plan);
    fs::create_directories(dir);
    std::string manifest;
    std::vector<fs::path> listed;
    if (include_sources) {
        for (const auto& seq : pool) {
            const fs::path rel = seq.id + ".json";
            save_sequence(seq, dir / rel);
            listed.push_back(rel);
        }
    }
    for (const auto& s : outputs) {
        const fs::path rel = s.record.output_id + ".json";
        save_sequence(s.sequence, dir / rel);
        listed.push_back(rel);
        manifest += format_manifest_line(s.record) + "\n";
    }
    write_text_file(dir / "manifest.jsonl", manifest);
    write_path_list(dir / "sequences.list", listed);
    echo_config(cfg, dir, "augment");
    out << "augment: wrote " << outputs.size() << " sequences to " << dir.string() << "\n";
    return kExitOk;
}

// --- train ----------------------------------------------------------------

std::vector<std::string> class_names_of(const std::vector<LabeledSequence>& data) {
    if (data.empty()) throw ValidationError("data set is empty");
    for (const auto& s : data) {
        if (s.class_names != data.front().class_names) {
            throw ValidationError("sequence '" + s.id + "' uses a different class vocabulary");
        }
        if (!s.same_topology(data.front())) {
            throw ValidationError("sequence '" + s.id + "' uses a different skeleton");
        }
    }
    return data.front().class_names;
}

int cmd_train(const Config& cfg, std::ostream& out) {
    const auto entries = cfg.get_list("data.train");
    const auto schema = csv_schema_from(cfg);
    TrainOptions opt;
    opt.epochs = static_cast<int>(cfg.get_int("train.epochs", opt.epochs));
    opt.batch_size = static_cast<int>(cfg.get_int("train.batch_size", opt.batch_size));
    opt.seed = cfg.get_uint("train.seed", 0);
    opt.log_every = static_cast<int>(cfg.get_int("train.log_every", opt.log_every));
    opt.checkpoint_every = static_cast<int>(cfg.get_int("train.checkpoint_every", 0));
    opt.output_dir = cfg.require_string("train.output_dir");
    opt.loss = loss_config_from(cfg);
    opt.optim.lr = cfg.get_double("optim.lr", opt.optim.lr);
    opt.optim.beta1 = cfg.get_double("optim.beta1", opt.optim.beta1);
    opt.optim.beta2 = cfg.get_double("optim.beta2", opt.optim.beta2);
    opt.optim.eps = cfg.get_double("optim.eps", opt.optim.eps);
    if (entries.empty()) throw ValidationError("data.train is empty");

    const auto data = load_sequences(entries, schema);
    const auto names = class_names_of(data);
    auto topo = topology_from(cfg, data.front());
    const auto mcfg = model_config_from(cfg, static_cast<int>(names.size()), opt.seed);
    cfg.check_all_used();
    if (opt.epochs < 1) throw ValidationError("train.epochs must be >= 1");
    if (opt.batch_size < 1) throw ValidationError("train.batch_size must be >= 1");

    SegmentationModel model(mcfg, std::move(topo));
    check_compatible(model, data);
    fs::create_directories(opt.output_dir);
    echo_config(cfg, opt.output_dir, "train");
    for (const auto& n : names) {
        if (n.find_first_of(",\n") != std::string::npos) {
            throw ValidationError("class name '" + n + "' cannot be stored in a checkpoint");
        }
    }

    out << "train: " << data.size() << " sequences, " << names.size() << " classes, "
        << model.parameters().size() << " parameter arrays\n";
    const auto t0 = std::chrono::steady_clock::now();
    const auto outcome = train_model(model, data, opt, &out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto ckpt = model.to_checkpoint();
    ckpt.meta.emplace_back("data.class_names", join(names, ","));
    ad::save_checkpoint(ckpt, opt.output_dir / "checkpoint.ckpt");
    char buf[128];
    std::snprintf(buf, sizeof buf, "train: done in %.1f s, final total %.6f\n", secs, outcome.epochs.back().total);
    out << buf;
    return kExitOk;
}

// --- eval -----------------------------------------------------------------

int cmd_eval(const Config& cfg, std::ostream& out) {
    const auto entries = cfg.get_list("data.test");
    const auto schema = csv_schema_from(cfg);
    const fs::path ckpt_path = cfg.require_string("eval.checkpoint");
    const fs::path dir = cfg.require_string("eval.output_dir");
    const bool oracle = cfg.get_bool("eval.oracle", false);
    const auto opts = eval_options_from(cfg);
    cfg.check_all_used();
    if (entries.empty()) throw ValidationError("data.test is empty");
    if (!fs::exists(ckpt_path)) throw ValidationError("checkpoint '" + ckpt_path.string() + "' does not exist");

    const auto ckpt = ad::load_checkpoint(ckpt_path);
    auto model = SegmentationModel::from_checkpoint(ckpt);
    const auto data = load_sequences(entries, schema);
    check_compatible(model, data);
    if (const auto* names = ckpt.meta_value("data.class_names")) {
        if (split_list(*names) != data.front().class_names) {
            throw ValidationError("test data class names differ from the checkpoint's");
        }
    }

    fs::create_directories(dir);
    echo_config(cfg, dir, "eval");
    const auto result = evaluate_model(model, data, opts, oracle);
    write_text_file(dir / "metrics.txt", format_report_kv(result.pooled));
    std::string csv = report_csv_header(result.pooled);
    for (const auto& [id, r] : result.per_sequence) csv += report_csv_row(id, r);
    csv += report_csv_row("pooled", result.pooled);
    write_text_file(dir / "metrics.csv", csv);
    out << format_report_table(oracle ? "oracle" : "test", result.pooled, true);
    return kExitOk;
}

// --- inspect --------------------------------------------------------------

int cmd_inspect(const Config& cfg, std::ostream& out) {
    const fs::path path = cfg.require_string("inspect.path");
    const auto schema = csv_schema_from(cfg);
    cfg.check_all_used();
    if (!fs::exists(path)) throw ValidationError("'" + path.string() + "' does not exist");

    const auto ext = path.extension().string();
    if (ext == ".ckpt") {
        const auto ckpt = ad::load_checkpoint(path);
        for (const auto& [k, v] : ckpt.meta) out << k << " = " << v << "\n";
        std::size_t values = 0;
        for (const auto& a : ckpt.arrays) values += a.values.size();
        out << "arrays = " << ckpt.arrays.size() << "\nvalues = " << values << "\n";
    } else if (ext == ".jsonl") {
        std::size_t n = 0;
        std::string text = read_text_file(path), line;
        std::istringstream in(text);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto rec = parse_manifest_line(line);
            ++n;
            out << rec.output_id << ":";
            for (const auto& s : rec.slots) out << " " << s.source_id << "[" << s.class_id << "]";
            out << "\n";
        }
        out << "records = " << n << "\n";
    } else {
        const auto seq = load_sequence(path, format_from_path(path), schema);
        out << "id = " << seq.id << "\nframes = " << seq.length() << "\njoints = " << seq.joint_count
            << "\nedges = " << seq.edges.size() << "\nfps = " << format_real(seq.fps)
            << "\nclasses = " << join(seq.class_names, ",") << "\n";
        for (const auto& p : extract_primitives(seq)) {
            out << "segment " << p.class_id << " [" << p.source_span.begin << ", " << p.source_span.end << ")\n";
        }
    }
    out << "\n# resolved config\n" << cfg.format_resolved();
    return kExitOk;
}

}  // namespace

std::vector<LabeledSequence> load_sequences(const std::vector<std::string>& entries,
                                            const std::optional<CsvSchema>& schema) {
    std::vector<fs::path> files;
    for (const auto& e : entries) {
        const fs::path p(e);
        if (p.extension() == ".list") {
            for (auto& f : read_path_list(p)) files.push_back(std::move(f));
        } else {
            files.push_back(p);
        }
    }
    std::vector<LabeledSequence> out;
    for (const auto& f : files) {
        if (!fs::exists(f)) throw ValidationError("sequence file '" + f.string() + "' does not exist");
        out.push_back(load_sequence(f, format_from_path(f), schema));
    }
    return out;
}

void check_compatible(const SegmentationModel& model, const std::vector<LabeledSequence>& data) {
    const auto& topo = model.topology();
    for (const auto& s : data) {
        if (s.joint_count != topo.joint_count) {
            throw ValidationError("sequence '" + s.id + "' has " + std::to_string(s.joint_count) +
                                  " joints, the model's skeleton has " + std::to_string(topo.joint_count));
        }
        if (s.edges != topo.edges) {
            throw ValidationError("sequence '" + s.id + "' has a different skeleton than the model");
        }
        if (static_cast<int>(s.class_count()) != model.config().num_classes) {
            throw ValidationError("sequence '" + s.id + "' has " + std::to_string(s.class_count()) +
                                  " classes, the model predicts " + std::to_string(model.config().num_classes));
        }
    }
}

TrainOutcome train_model(SegmentationModel& model, const std::vector<LabeledSequence>& data,
                         const TrainOptions& opts, std::ostream* progress) {
    if (data.empty()) throw ValidationError("training set is empty");
    std::vector<FeatureTensor> features;
    for (const auto& s : data) features.push_back(to_feature_tensor(s));

    auto params = model.parameters();
    ad::Adam adam(opts.optim);
    TrainOutcome outcome;
    std::string log = "epoch,cls,tmse,ctc,total\n";
    const auto batch = static_cast<std::size_t>(opts.batch_size);

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        std::vector<std::size_t> order(data.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng = derived_rng(opts.seed, static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);

        LossBreakdown sum;
        for (std::size_t b = 0; b < order.size(); b += batch) {
            const std::size_t end = std::min(order.size(), b + batch);
            ad::reset_grads(params);
            for (std::size_t i = b; i < end; ++i) {
                const auto& seq = data[order[i]];
                const auto stages = model.forward(features[order[i]], ad::BatchNormMode::train);
                const auto cl = combined_loss(stages, seq.labels, opts.loss);
                if (!std::isfinite(cl.breakdown.total)) {
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on '" + seq.id + "'");
                }
                ad::backward(ad::scale(cl.loss, 1.0 / static_cast<double>(end - b)));
                sum.cls += cl.breakdown.cls;
                sum.tmse += cl.breakdown.tmse;
                sum.ctc += cl.breakdown.ctc;
                sum.total += cl.breakdown.total;
            }
            adam.step(params);
        }
        const double n = static_cast<double>(data.size());
        LossBreakdown mean{sum.cls / n, sum.tmse / n, sum.ctc / n, sum.total / n};
        outcome.epochs.push_back(mean);
        log += loss_row(epoch, mean);

        if (progress && opts.log_every > 0 && (epoch % opts.log_every == 0 || epoch == 1 || epoch == opts.epochs)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "epoch %4d  cls %.5f  tmse %.5f  ctc %.5f  total %.5f\n", epoch,
                          mean.cls, mean.tmse, mean.ctc, mean.total);
            *progress << buf;
        }
        if (!opts.output_dir.empty() && opts.checkpoint_every > 0 && epoch % opts.checkpoint_every == 0) {
            char name[64];
            std::snprintf(name, sizeof name, "checkpoint_e%04d.ckpt", epoch);
            ad::save_checkpoint(model.to_checkpoint(), opts.output_dir / name);
        }
    }
    if (!opts.output_dir.empty()) write_text_file(opts.output_dir / "train_log.csv", log);
    return outcome;
}

EvalOutcome evaluate_model(SegmentationModel& model, const std::vector<LabeledSequence>& data,
                           const EvalOptions& opts, bool oracle) {
    EvalOutcome out;
    MetricAccumulator pooled(opts);
    for (const auto& seq : data) {
        std::vector<int> pred = seq.labels;
        if (!oracle) {
            const auto stages = model.forward(to_feature_tensor(seq), ad::BatchNormMode::eval);
            pred = predict_labels(to_prob_table(stages.back().class_probs));
        }
        pooled.add(pred, seq.labels);
        out.per_sequence.emplace_back(seq.id, evaluate_labels(pred, seq.labels, opts));
    }
    out.pooled = pooled.report();
    return out;
}

int run_command(const std::string& name, const Config& cfg, std::ostream& out, std::ostream& err) {
    static const std::map<std::string, std::function<int(const Config&, std::ostream&)>> commands{
        {"synthdata", cmd_synthdata}, {"augment", cmd_augment}, {"train", cmd_train},
        {"eval", cmd_eval},           {"inspect", cmd_inspect},
    };
    auto it = commands.find(name);
    if (it == commands.end()) {
        err << "segforge: unknown command '" << name << "'\n";
        return kExitValidation;
    }
    try {
        return it->second(cfg, out);
    } catch (const NumericError& e) {
        err << "segforge " << name << ": numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ValidationError& e) {
        err << "segforge " << name << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        err << "segforge " << name << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "segforge " << name << ": " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace segforge::app
