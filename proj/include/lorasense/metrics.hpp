#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lorasense {

// k x k confusion counts; rows are true classes, columns predicted classes,
// both in the order given at construction.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::vector<int> classes);

    // Tallies equal-length label sequences. Labels outside `classes` raise
    // DomainError.
    static ConfusionMatrix from_labels(const std::vector<int>& truths,
                                       const std::vector<int>& predictions,
                                       std::vector<int> classes);

    void add(int true_label, int predicted_label);

    const std::vector<int>& classes() const { return classes_; }
    std::int64_t at(std::size_t true_idx, std::size_t pred_idx) const;
    std::int64_t total() const;
    std::size_t size() const { return classes_.size(); }

private:
    std::size_t index_of(int label) const;

    std::vector<int> classes_;
    std::vector<std::int64_t> counts_; // row-major k*k
};

struct BinaryCounts {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
};

// One-vs-rest reduction of a multiclass confusion matrix for one class.
BinaryCounts binarize(const ConfusionMatrix& cm, int cls);

// The four evaluation measures. A zero denominator yields nullopt, never a
// silent 0 or 1.
std::optional<double> accuracy(const BinaryCounts& c);
std::optional<double> precision(const BinaryCounts& c);
std::optional<double> recall(const BinaryCounts& c);
std::optional<double> false_detection_rate(const BinaryCounts& c);

struct ClassMetrics {
    int cls = 0;
    BinaryCounts counts;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> false_detection_rate;
};

// Per-class one-vs-rest metrics plus unweighted macro averages. Macro values
// average only the classes where the measure is defined; if no class defines
// it, the macro value is nullopt too.
struct EvalReport {
    ConfusionMatrix confusion;
    std::vector<ClassMetrics> per_class;
    std::optional<double> macro_accuracy;
    std::optional<double> macro_precision;
    std::optional<double> macro_recall;
    std::optional<double> macro_false_detection_rate;
    std::int64_t n_samples = 0;
};

EvalReport evaluate(const ConfusionMatrix& cm);
EvalReport evaluate(const std::vector<int>& truths,
                    const std::vector<int>& predictions,
                    std::vector<int> classes);

// CSV rows: class,tp,tn,fp,fn,accuracy,precision,recall,fdr
// Undefined measures are written as "nan".
void write_report_csv(const EvalReport& report, std::ostream& os);

// Human-readable summary with the confusion matrix and macro averages.
void write_report_summary(const EvalReport& report, std::ostream& os);

std::string format_metric(const std::optional<double>& v);

} // namespace lorasense
