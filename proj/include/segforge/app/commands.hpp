#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "segforge/adam.hpp"
#include "segforge/app/config.hpp"
#include "segforge/losses.hpp"
#include "segforge/metrics.hpp"
#include "segforge/model.hpp"
#include "segforge/sequence.hpp"
#include "segforge/sequence_io.hpp"

namespace segforge::app {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitValidation = 2, kExitNumeric = 3 };

/// Runs `augment`, `train`, `eval`, `synthdata` or `inspect`. Errors are
/// reported on `err` and mapped to exit codes.
int run_command(const std::string& name, const Config& cfg, std::ostream& out, std::ostream& err);

/// Entries are sequence files or `.list` files; CSV files need `schema`.
std::vector<LabeledSequence> load_sequences(const std::vector<std::string>& entries,
                                            const std::optional<CsvSchema>& schema = {});

struct TrainOptions {
    int epochs = 100;
    int batch_size = 4;
    std::uint64_t seed = 0;
    LossConfig loss;
    ad::AdamConfig optim;
    int log_every = 10;
    int checkpoint_every = 0;
    std::filesystem::path output_dir;  // empty: nothing written
};

struct TrainOutcome {
    std::vector<LossBreakdown> epochs;  // mean over sequences
};

/// Mini-batch Adam. Gradients of a batch are the mean over its sequences.
/// Throws NumericError on a non-finite loss.
TrainOutcome train_model(SegmentationModel& model, const std::vector<LabeledSequence>& data,
                         const TrainOptions& opts, std::ostream* progress = nullptr);

struct EvalOutcome {
    MetricReport pooled;
    std::vector<std::pair<std::string, MetricReport>> per_sequence;
};

/// `oracle` scores the ground truth against itself.
EvalOutcome evaluate_model(SegmentationModel& model, const std::vector<LabeledSequence>& data,
                           const EvalOptions& opts, bool oracle = false);

/// Throws ValidationError when the sequences do not fit the model.
void check_compatible(const SegmentationModel& model, const std::vector<LabeledSequence>& data);

}  // namespace segforge::app
