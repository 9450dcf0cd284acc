#include "segforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "segforge/errors.hpp"
#include "segforge/sequence_io.hpp"

namespace segforge {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

void check_threshold(double k) {
    if (!(k > 0.0 && k < 1.0)) throw ValidationError("IoU threshold must be in (0, 1)");
}

std::string threshold_tag(double k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", k * 100.0);
    return buf;
}

}  // namespace

std::vector<Segment> to_segments(std::span<const int> labels, std::optional<int> background) {
    std::vector<Segment> out;
    std::size_t start = 0;
    for (std::size_t t = 1; t <= labels.size(); ++t) {
        if (t < labels.size() && labels[t] == labels[start]) continue;
        if (!(background && labels[start] == *background)) out.push_back({labels[start], start, t});
        start = t;
    }
    return out;
}

double frame_accuracy(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) throw ValidationError("frame_accuracy: length mismatch");
    if (truth.empty()) throw ValidationError("frame_accuracy: empty sequence");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
    return ratio(hit, truth.size());
}

double segment_iou(const Segment& a, const Segment& b) {
    const std::size_t lo = std::max(a.start, b.start), hi = std::min(a.end, b.end);
    const std::size_t inter = hi > lo ? hi - lo : 0;
    const std::size_t uni = std::max(a.end, b.end) - std::min(a.start, b.start);
    return ratio(inter, uni);
}

double F1Counts::precision() const { return ratio(tp, tp + fp); }
double F1Counts::recall() const { return ratio(tp, tp + fn); }
double F1Counts::f1() const { return harmonic(precision(), recall()); }

F1Counts& F1Counts::operator+=(const F1Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
}

F1Counts match_segments(std::span<const Segment> pred, std::span<const Segment> truth, double k) {
    check_threshold(k);
    std::vector<std::size_t> order(pred.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pred[a].start < pred[b].start; });

    std::vector<bool> used(truth.size(), false);
    F1Counts c;
    for (std::size_t i : order) {
        const auto& p = pred[i];
        double best = -1.0;
        std::size_t best_j = truth.size();
        for (std::size_t j = 0; j < truth.size(); ++j) {
            if (used[j] || truth[j].class_id != p.class_id) continue;
            const double iou = segment_iou(p, truth[j]);
            if (iou > best) {
                best = iou;
                best_j = j;
            }
        }
        if (best_j < truth.size() && best > k) {
            used[best_j] = true;
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    c.fn = truth.size() - c.tp;
    return c;
}

F1Score f1_at_k(std::span<const Segment> pred, std::span<const Segment> truth, double k) {
    const auto c = match_segments(pred, truth, k);
    return {c.precision(), c.recall(), c.f1()};
}

const ThresholdResult* MetricReport::at(double k) const {
    for (const auto& r : f1_at) {
        if (std::abs(r.k - k) < 1e-12) return &r;
    }
    return nullptr;
}

MetricAccumulator::MetricAccumulator(EvalOptions opts) : opts_(std::move(opts)) {
    for (double k : opts_.thresholds) check_threshold(k);
    pooled_.resize(opts_.thresholds.size());
    macro_precision_.assign(opts_.thresholds.size(), 0.0);
    macro_recall_.assign(opts_.thresholds.size(), 0.0);
    macro_f1_.assign(opts_.thresholds.size(), 0.0);
}

void MetricAccumulator::add(std::span<const int> pred, std::span<const int> truth) {
    frame_accuracy(pred, truth);  // validates lengths
    for (std::size_t i = 0; i < pred.size(); ++i) correct_ += pred[i] == truth[i];
    frames_ += truth.size();
    ++sequences_;
    const auto ps = to_segments(pred, opts_.background);
    const auto ts = to_segments(truth, opts_.background);
    for (std::size_t i = 0; i < opts_.thresholds.size(); ++i) {
        const auto c = match_segments(ps, ts, opts_.thresholds[i]);
        pooled_[i] += c;
        macro_precision_[i] += c.precision();
        macro_recall_[i] += c.recall();
        macro_f1_[i] += c.f1();
    }
}

MetricReport MetricAccumulator::report() const {
    MetricReport r;
    r.acc = ratio(correct_, frames_);
    r.frames = frames_;
    r.sequences = sequences_;
    const double n = static_cast<double>(std::max<std::size_t>(sequences_, 1));
    for (std::size_t i = 0; i < opts_.thresholds.size(); ++i) {
        ThresholdResult t;
        t.k = opts_.thresholds[i];
        t.counts = pooled_[i];
        if (opts_.macro) {
            t.precision = macro_precision_[i] / n;
            t.recall = macro_recall_[i] / n;
            t.f1 = macro_f1_[i] / n;
        } else {
            t.precision = pooled_[i].precision();
            t.recall = pooled_[i].recall();
            t.f1 = pooled_[i].f1();
        }
        r.f1_at.push_back(t);
    }
    return r;
}

MetricReport evaluate_labels(std::span<const int> pred, std::span<const int> truth, const EvalOptions& opts) {
    MetricAccumulator acc(opts);
    acc.add(pred, truth);
    return acc.report();
}

std::string format_report_kv(const MetricReport& r) {
    std::string out = "sequences=" + std::to_string(r.sequences) + "\n";
    out += "frames=" + std::to_string(r.frames) + "\n";
    out += "acc=" + format_real(r.acc) + "\n";
    for (const auto& t : r.f1_at) {
        const auto tag = threshold_tag(t.k);
        out += "f1@" + tag + "=" + format_real(t.f1) + "\n";
        out += "precision@" + tag + "=" + format_real(t.precision) + "\n";
        out += "recall@" + tag + "=" + format_real(t.recall) + "\n";
        out += "tp@" + tag + "=" + std::to_string(t.counts.tp) + "\n";
        out += "fp@" + tag + "=" + std::to_string(t.counts.fp) + "\n";
        out += "fn@" + tag + "=" + std::to_string(t.counts.fn) + "\n";
    }
    return out;
}

std::string report_csv_header(const MetricReport& r) {
    std::string out = "name,sequences,frames,acc";
    for (const auto& t : r.f1_at) {
        const auto tag = threshold_tag(t.k);
        out += ",f1@" + tag + ",precision@" + tag + ",recall@" + tag + ",tp@" + tag + ",fp@" + tag + ",fn@" + tag;
    }
    return out + "\n";
}

std::string report_csv_row(const std::string& name, const MetricReport& r) {
    std::string out = name + "," + std::to_string(r.sequences) + "," + std::to_string(r.frames) + "," +
                      format_real(r.acc);
    for (const auto& t : r.f1_at) {
        out += "," + format_real(t.f1) + "," + format_real(t.precision) + "," + format_real(t.recall) + "," +
               std::to_string(t.counts.tp) + "," + std::to_string(t.counts.fp) + "," + std::to_string(t.counts.fn);
    }
    return out + "\n";
}

std::string format_report_table(const std::string& name, const MetricReport& r, bool header) {
    char buf[256];
    std::string out;
    if (header) {
        std::snprintf(buf, sizeof buf, "%-20s %8s", "set", "Acc");
        out += buf;
        for (const auto& t : r.f1_at) {
            std::snprintf(buf, sizeof buf, " %8s", ("F1@" + threshold_tag(t.k)).c_str());
            out += buf;
        }
        out += "\n";
    }
    std::snprintf(buf, sizeof buf, "%-20s %8.4f", name.c_str(), r.acc);
    out += buf;
    for (const auto& t : r.f1_at) {
        std::snprintf(buf, sizeof buf, " %8.4f", t.f1);
        out += buf;
    }
    return out + "\n";
}

}  // namespace segforge
