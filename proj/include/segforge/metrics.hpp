#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segforge {

struct Segment {
    int class_id = 0;
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // exclusive

    bool operator==(const Segment&) const = default;
};

/// Maximal constant-label runs, skipping runs of `background` when set.
std::vector<Segment> to_segments(std::span<const int> labels, std::optional<int> background = {});

double frame_accuracy(std::span<const int> pred, std::span<const int> truth);

double segment_iou(const Segment& a, const Segment& b);

struct F1Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    double precision() const;
    double recall() const;
    double f1() const;

    F1Counts& operator+=(const F1Counts& o);
};

/// Predictions are visited in temporal order; each takes the unmatched
/// same-class truth segment with the highest IoU and counts as a hit when
/// that IoU is strictly above k.
F1Counts match_segments(std::span<const Segment> pred, std::span<const Segment> truth, double k);

struct F1Score {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

F1Score f1_at_k(std::span<const Segment> pred, std::span<const Segment> truth, double k);

inline const std::vector<double> kDefaultThresholds{0.1, 0.25, 0.5};

struct ThresholdResult {
    double k = 0.0;
    F1Counts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricReport {
    double acc = 0.0;
    std::size_t frames = 0;
    std::size_t sequences = 0;
    std::vector<ThresholdResult> f1_at;

    const ThresholdResult* at(double k) const;
};

struct EvalOptions {
    std::vector<double> thresholds = kDefaultThresholds;
    std::optional<int> background;
    /// Average per-sequence scores instead of pooling counts.
    bool macro = false;
};

MetricReport evaluate_labels(std::span<const int> pred, std::span<const int> truth, const EvalOptions& opts = {});

/// Pools sequences. Accuracy is frame-weighted; F1 uses pooled counts unless
/// `macro` is set.
class MetricAccumulator {
public:
    explicit MetricAccumulator(EvalOptions opts = {});

    void add(std::span<const int> pred, std::span<const int> truth);
    MetricReport report() const;
    std::size_t sequences() const { return sequences_; }

private:
    EvalOptions opts_;
    std::size_t correct_ = 0;
    std::size_t frames_ = 0;
    std::size_t sequences_ = 0;
    std::vector<F1Counts> pooled_;
    std::vector<double> macro_precision_, macro_recall_, macro_f1_;
};

/// key=value lines.
std::string format_report_kv(const MetricReport& r);
std::string report_csv_header(const MetricReport& r);
std::string report_csv_row(const std::string& name, const MetricReport& r);
/// Acc, F1@10, F1@25, F1@50 as a fixed-width table.
std::string format_report_table(const std::string& name, const MetricReport& r, bool header);

}  // namespace segforge
