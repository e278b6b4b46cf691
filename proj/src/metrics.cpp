#include "lorasense/metrics.hpp"

#include <algorithm>
#include <iomanip>

#include "lorasense/errors.hpp"
#include "lorasense/textio.hpp"

namespace lorasense {

ConfusionMatrix::ConfusionMatrix(std::vector<int> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {
    if (classes_.empty()) throw DomainError("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_labels(const std::vector<int>& truths,
                                             const std::vector<int>& predictions,
                                             std::vector<int> classes) {
    if (truths.size() != predictions.size())
        throw DomainError("label sequences have different lengths");
    ConfusionMatrix cm(std::move(classes));
    for (std::size_t i = 0; i < truths.size(); ++i) cm.add(truths[i], predictions[i]);
    return cm;
}

std::size_t ConfusionMatrix::index_of(int label) const {
    auto it = std::find(classes_.begin(), classes_.end(), label);
    if (it == classes_.end())
        throw DomainError("label " + std::to_string(label) + " not in class list");
    return static_cast<std::size_t>(it - classes_.begin());
}

void ConfusionMatrix::add(int true_label, int predicted_label) {
    const std::size_t k = classes_.size();
    counts_[index_of(true_label) * k + index_of(predicted_label)] += 1;
}

std::int64_t ConfusionMatrix::at(std::size_t true_idx, std::size_t pred_idx) const {
    return counts_[true_idx * classes_.size() + pred_idx];
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t sum = 0;
    for (auto c : counts_) sum += c;
    return sum;
}

BinaryCounts binarize(const ConfusionMatrix& cm, int cls) {
    const auto& classes = cm.classes();
    auto it = std::find(classes.begin(), classes.end(), cls);
    if (it == classes.end())
        throw DomainError("class " + std::to_string(cls) + " not in confusion matrix");
    const auto c = static_cast<std::size_t>(it - classes.begin());
    const std::size_t k = classes.size();

    BinaryCounts out;
    out.tp = cm.at(c, c);
    for (std::size_t j = 0; j < k; ++j) {
        if (j == c) continue;
        out.fn += cm.at(c, j);
        out.fp += cm.at(j, c);
    }
    out.tn = cm.total() - out.tp - out.fp - out.fn;
    return out;
}

namespace {
std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}
} // namespace

std::optional<double> accuracy(const BinaryCounts& c) {
    return ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
}

std::optional<double> precision(const BinaryCounts& c) {
    return ratio(c.tp, c.tp + c.fp);
}

std::optional<double> recall(const BinaryCounts& c) {
    return ratio(c.tp, c.tp + c.fn);
}

std::optional<double> false_detection_rate(const BinaryCounts& c) {
    return ratio(c.fp, c.fp + c.tn);
}

namespace {
struct MacroAccum {
    double sum = 0.0;
    int n = 0;
    void add(const std::optional<double>& v) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    std::optional<double> mean() const {
        if (n == 0) return std::nullopt;
        return sum / n;
    }
};
} // namespace

EvalReport evaluate(const ConfusionMatrix& cm) {
    EvalReport report;
    report.confusion = cm;
    report.n_samples = cm.total();

    MacroAccum acc, prec, rec, fdr;
    for (int cls : cm.classes()) {
        ClassMetrics m;
        m.cls = cls;
        m.counts = binarize(cm, cls);
        m.accuracy = accuracy(m.counts);
        m.precision = precision(m.counts);
        m.recall = recall(m.counts);
        m.false_detection_rate = false_detection_rate(m.counts);
        acc.add(m.accuracy);
        prec.add(m.precision);
        rec.add(m.recall);
        fdr.add(m.false_detection_rate);
        report.per_class.push_back(std::move(m));
    }
    report.macro_accuracy = acc.mean();
    report.macro_precision = prec.mean();
    report.macro_recall = rec.mean();
    report.macro_false_detection_rate = fdr.mean();
    return report;
}

EvalReport evaluate(const std::vector<int>& truths,
                    const std::vector<int>& predictions,
                    std::vector<int> classes) {
    return evaluate(ConfusionMatrix::from_labels(truths, predictions, std::move(classes)));
}

std::string format_metric(const std::optional<double>& v) {
    return v ? format_double(*v) : "nan";
}

void write_report_csv(const EvalReport& report, std::ostream& os) {
    os << "class,tp,tn,fp,fn,accuracy,precision,recall,fdr\n";
    for (const auto& m : report.per_class) {
        os << m.cls << ',' << m.counts.tp << ',' << m.counts.tn << ',' << m.counts.fp
           << ',' << m.counts.fn << ',' << format_metric(m.accuracy) << ','
           << format_metric(m.precision) << ',' << format_metric(m.recall) << ','
           << format_metric(m.false_detection_rate) << '\n';
    }
    os << "macro,,,,," << format_metric(report.macro_accuracy) << ','
       << format_metric(report.macro_precision) << ','
       << format_metric(report.macro_recall) << ','
       << format_metric(report.macro_false_detection_rate) << '\n';
}

void write_report_summary(const EvalReport& report, std::ostream& os) {
    os << "samples: " << report.n_samples << "\n\n";
    os << "confusion matrix (rows = true, cols = predicted):\n";
    os << "      ";
    for (int cls : report.confusion.classes()) os << std::setw(8) << cls;
    os << '\n';
    const std::size_t k = report.confusion.size();
    for (std::size_t i = 0; i < k; ++i) {
        os << std::setw(6) << report.confusion.classes()[i];
        for (std::size_t j = 0; j < k; ++j) os << std::setw(8) << report.confusion.at(i, j);
        os << '\n';
    }
    os << "\nper-class (one-vs-rest):\n";
    os << "class    accuracy   precision  recall     fdr\n";
    for (const auto& m : report.per_class) {
        os << std::left << std::setw(9) << m.cls << std::setw(11)
           << format_metric(m.accuracy) << std::setw(11) << format_metric(m.precision)
           << std::setw(11) << format_metric(m.recall) << format_metric(m.false_detection_rate)
           << '\n'
           << std::right;
    }
    os << "\nmacro accuracy:  " << format_metric(report.macro_accuracy) << '\n';
    os << "macro precision: " << format_metric(report.macro_precision) << '\n';
    os << "macro recall:    " << format_metric(report.macro_recall) << '\n';
    os << "macro fdr:       " << format_metric(report.macro_false_detection_rate) << '\n';
}

} // namespace lorasense
