#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segforge/interp.hpp"
#include "segforge/sequence.hpp"

namespace segforge {

/// Number of synthetic sequences from M sources with n primitives each: M^n.
/// Throws ValidationError for M < 1 or n < 1 and when the result exceeds
/// 2^63 - 1.
std::int64_t count_combinations(std::int64_t sources, std::int64_t slots);

enum class AugmentMode { ordered, unordered };

std::string_view to_string(AugmentMode m);
AugmentMode parse_augment_mode(std::string_view name);

struct Selection {
    enum class Kind { exhaustive, sample };
    Kind kind = Kind::exhaustive;
    std::uint64_t count = 0;
    std::uint64_t seed = 0;

    static Selection exhaustive() { return {}; }
    static Selection sample(std::uint64_t count, std::uint64_t seed) { return {Kind::sample, count, seed}; }
};

struct AugmentOptions {
    AugmentMode mode = AugmentMode::ordered;
    Selection selection;
    SpliceConfig splice;
    /// Primitives of this class are dropped before slotting.
    std::optional<int> background;
    /// Seed for per-output slot permutations in unordered mode.
    std::uint64_t permutation_seed = 0;
    std::string output_prefix = "synth";
};

/// A validated recombination plan: `primitives[s][k]` is the primitive that
/// source s contributes to slot k, and `slots[k]` is that slot's class.
struct AugmentPlan {
    std::vector<std::string> source_ids;
    std::vector<std::vector<ActionPrimitive>> primitives;
    std::vector<int> slots;
    AugmentOptions options;

    // Skeleton and vocabulary shared by every output.
    int joint_count = 0;
    std::vector<Edge> edges;
    double fps = 30.0;
    std::vector<std::string> class_names;

    std::size_t source_count() const { return source_ids.size(); }
    std::size_t slot_count() const { return slots.size(); }
    std::int64_t combinations() const;

    /// Enumeration indices to synthesize, ascending.
    std::vector<std::uint64_t> output_indices() const;

    /// Source chosen for each slot by enumeration index; slot 0 is the most
    /// significant digit, so the order is lexicographic in source index.
    std::vector<std::size_t> choice_for(std::uint64_t index) const;

    /// Order in which slots are concatenated for this output.
    std::vector<std::size_t> slot_order_for(std::uint64_t index) const;
};

/// Throws ValidationError on an empty pool, mismatched topologies, or (ordered
/// mode) differing primitive class order across sources. Unordered mode only
/// needs every source to hold the same multiset of classes.
AugmentPlan plan_augmentation(const std::vector<LabeledSequence>& pool, const AugmentOptions& options);

struct SlotProvenance {
    std::size_t slot = 0;
    int class_id = 0;
    std::size_t source_index = 0;
    std::string source_id;
    FrameSpan source_span;
    FrameSpan output_span;

    bool operator==(const SlotProvenance&) const = default;
};

struct SynthesisRecord {
    std::string output_id;
    std::uint64_t index = 0;
    std::vector<SlotProvenance> slots;
    std::vector<FrameSpan> transitions;

    bool operator==(const SynthesisRecord&) const = default;
};

struct SynthesizedSequence {
    LabeledSequence sequence;
    SynthesisRecord record;
};

/// Builds every output of the plan. Outputs are independent and may be built
/// in parallel; the result is ordered by enumeration index.
std::vector<SynthesizedSequence> synthesize(const AugmentPlan& plan);

/// Builds a single output by enumeration index.
SynthesizedSequence synthesize_one(const AugmentPlan& plan, std::uint64_t index);

/// One JSON object per line.
std::string format_manifest_line(const SynthesisRecord& record);
SynthesisRecord parse_manifest_line(const std::string& line);

}  // namespace segforge
