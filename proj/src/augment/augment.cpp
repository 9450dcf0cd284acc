#include "segforge/augment.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "segforge/errors.hpp"
#include "segforge/random.hpp"

namespace segforge {

std::int64_t count_combinations(std::int64_t sources, std::int64_t slots) {
    if (sources < 1 || slots < 1) {
        throw ValidationError("count_combinations needs M >= 1 and n >= 1");
    }
    std::int64_t result = 1;
    for (std::int64_t i = 0; i < slots; ++i) {
        if (result > std::numeric_limits<std::int64_t>::max() / sources) {
            throw ValidationError("M^n overflows a signed 64-bit integer (M=" + std::to_string(sources) +
                                  ", n=" + std::to_string(slots) + ")");
        }
        result *= sources;
    }
    return result;
}

std::string_view to_string(AugmentMode m) {
    return m == AugmentMode::ordered ? "ordered" : "unordered";
}

AugmentMode parse_augment_mode(std::string_view name) {
    if (name == "ordered") return AugmentMode::ordered;
    if (name == "unordered") return AugmentMode::unordered;
    throw ValidationError("unknown augmentation mode '" + std::string(name) + "'");
}

std::int64_t AugmentPlan::combinations() const {
    return count_combinations(static_cast<std::int64_t>(source_count()),
                              static_cast<std::int64_t>(slot_count()));
}

std::vector<std::uint64_t> AugmentPlan::output_indices() const {
    const auto total = static_cast<std::uint64_t>(combinations());
    const auto& sel = options.selection;
    if (sel.kind == Selection::Kind::exhaustive) {
        std::vector<std::uint64_t> all(total);
        std::iota(all.begin(), all.end(), std::uint64_t{0});
        return all;
    }
    // Floyd's sampling: `count` distinct indices, uniform over [0, total).
    Rng rng(splitmix64(sel.seed));
    std::set<std::uint64_t> chosen;
    for (std::uint64_t j = total - sel.count; j < total; ++j) {
        const std::uint64_t r = uniform_below(rng, j + 1);
        if (!chosen.insert(r).second) chosen.insert(j);
    }
    return {chosen.begin(), chosen.end()};
}

std::vector<std::size_t> AugmentPlan::choice_for(std::uint64_t index) const {
    const std::size_t n = slot_count();
    const std::uint64_t m = source_count();
    std::vector<std::size_t> choice(n);
    for (std::size_t k = n; k-- > 0;) {
        choice[k] = static_cast<std::size_t>(index % m);
        index /= m;
    }
    return choice;
}

std::vector<std::size_t> AugmentPlan::slot_order_for(std::uint64_t index) const {
    std::vector<std::size_t> order(slot_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (options.mode == AugmentMode::unordered) {
        Rng rng = derived_rng(options.permutation_seed, index);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[uniform_below(rng, i)]);
        }
    }
    return order;
}

AugmentPlan plan_augmentation(const std::vector<LabeledSequence>& pool, const AugmentOptions& options) {
    if (pool.empty()) {
        throw ValidationError("augmentation pool is empty");
    }
    options.splice.validate();

    AugmentPlan plan;
    plan.options = options;
    const auto& first = pool.front();
    plan.joint_count = first.joint_count;
    plan.edges = first.edges;
    plan.fps = first.fps;
    plan.class_names = first.class_names;

    for (const auto& seq : pool) {
        validate_sequence(seq);
        if (!seq.same_topology(first)) {
            throw ValidationError("sequence '" + seq.id + "' has a different skeleton than '" + first.id + "'");
        }
        if (seq.class_names != first.class_names) {
            throw ValidationError("sequence '" + seq.id + "' has a different class vocabulary");
        }
    }

    auto class_list = [](const std::vector<ActionPrimitive>& prims) {
        std::vector<int> out;
        for (const auto& p : prims) out.push_back(p.class_id);
        return out;
    };

    std::vector<std::vector<ActionPrimitive>> per_source;
    for (const auto& seq : pool) per_source.push_back(extract_primitives(seq, options.background));

    plan.slots = class_list(per_source.front());
    if (plan.slots.empty()) {
        throw ValidationError("sequence '" + first.id + "' has no primitives to recombine");
    }

    for (std::size_t s = 0; s < pool.size(); ++s) {
        plan.source_ids.push_back(pool[s].id);
        auto classes = class_list(per_source[s]);
        if (options.mode == AugmentMode::ordered) {
            if (classes != plan.slots) {
                throw ValidationError("sequence '" + pool[s].id +
                                      "' does not share the primitive class order of '" + first.id + "'");
            }
            plan.primitives.push_back(std::move(per_source[s]));
            continue;
        }
        auto sorted_a = classes;
        auto sorted_b = plan.slots;
        std::sort(sorted_a.begin(), sorted_a.end());
        std::sort(sorted_b.begin(), sorted_b.end());
        if (sorted_a != sorted_b) {
            throw ValidationError("sequence '" + pool[s].id + "' does not contain the same primitive classes as '" +
                                  first.id + "'");
        }
        // Align by class: the k-th occurrence of a class fills the slot holding
        // the k-th occurrence in the reference source.
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < classes.size(); ++i) by_class[classes[i]].push_back(i);
        std::map<int, std::size_t> used;
        std::vector<ActionPrimitive> aligned;
        for (int cls : plan.slots) {
            aligned.push_back(std::move(per_source[s][by_class[cls][used[cls]++]]));
        }
        plan.primitives.push_back(std::move(aligned));
    }

    const auto total = plan.combinations();
    if (options.selection.kind == Selection::Kind::sample) {
        if (options.selection.count == 0) {
            throw ValidationError("sample count must be positive");
        }
        if (options.selection.count > static_cast<std::uint64_t>(total)) {
            throw ValidationError("sample count " + std::to_string(options.selection.count) +
                                  " exceeds the " + std::to_string(total) + " available combinations");
        }
    }
    return plan;
}

SynthesizedSequence synthesize_one(const AugmentPlan& plan, std::uint64_t index) {
    const auto choice = plan.choice_for(index);
    const auto order = plan.slot_order_for(index);

    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "_%06llu", static_cast<unsigned long long>(index));

    SynthesizedSequence out;
    out.record.output_id = plan.options.output_prefix + id_buf;
    out.record.index = index;

    SplicedFragment frag;
    int previous_class = 0;
    for (std::size_t k : order) {
        const std::size_t src = choice[k];
        const auto& prim = plan.primitives[src][k];
        const std::size_t before = frag.frames.size();
        append_with_transition(frag, previous_class, prim, plan.options.splice);
        const std::size_t start = frag.frames.size() - prim.length();
        if (start > before) out.record.transitions.push_back({before, start});
        out.record.slots.push_back({k, prim.class_id, src, plan.source_ids[src], prim.source_span,
                                    {start, frag.frames.size()}});
        previous_class = prim.class_id;
    }

    auto& seq = out.sequence;
    seq.id = out.record.output_id;
    seq.joint_count = plan.joint_count;
    seq.edges = plan.edges;
    seq.fps = plan.fps;
    seq.class_names = plan.class_names;
    seq.frames = std::move(frag.frames);
    seq.labels = std::move(frag.labels);
    return out;
}

std::vector<SynthesizedSequence> synthesize(const AugmentPlan& plan) {
    const auto indices = plan.output_indices();
    std::vector<SynthesizedSequence> out(indices.size());
    const auto count = static_cast<std::ptrdiff_t>(indices.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = synthesize_one(plan, indices[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::string format_manifest_line(const SynthesisRecord& record) {
    nlohmann::ordered_json j;
    j["output_id"] = record.output_id;
    j["index"] = record.index;
    auto slots = nlohmann::ordered_json::array();
    for (const auto& s : record.slots) {
        nlohmann::ordered_json js;
        js["slot"] = s.slot;
        js["class"] = s.class_id;
        js["source_index"] = s.source_index;
        js["source"] = s.source_id;
        js["source_span"] = {s.source_span.begin, s.source_span.end};
        js["output_span"] = {s.output_span.begin, s.output_span.end};
        slots.push_back(std::move(js));
    }
    j["slots"] = std::move(slots);
    auto transitions = nlohmann::ordered_json::array();
    for (const auto& t : record.transitions) transitions.push_back({t.begin, t.end});
    j["transitions"] = std::move(transitions);
    return j.dump();
}

SynthesisRecord parse_manifest_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        SynthesisRecord r;
        r.output_id = j.at("output_id").get<std::string>();
        r.index = j.at("index").get<std::uint64_t>();
        for (const auto& js : j.at("slots")) {
            SlotProvenance s;
            s.slot = js.at("slot").get<std::size_t>();
            s.class_id = js.at("class").get<int>();
            s.source_index = js.at("source_index").get<std::size_t>();
            s.source_id = js.at("source").get<std::string>();
            s.source_span = {js.at("source_span").at(0).get<std::size_t>(), js.at("source_span").at(1).get<std::size_t>()};
            s.output_span = {js.at("output_span").at(0).get<std::size_t>(), js.at("output_span").at(1).get<std::size_t>()};
            r.slots.push_back(std::move(s));
        }
        for (const auto& jt : j.at("transitions")) {
            r.transitions.push_back({jt.at(0).get<std::size_t>(), jt.at(1).get<std::size_t>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed manifest line: ") + e.what());
    }
}

}  // namespace segforge
