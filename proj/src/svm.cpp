#include "lorasense/svm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <istream>
#include <map>
#include <ostream>
#include <thread>

#include "lorasense/errors.hpp"
#include "lorasense/rng.hpp"
#include "lorasense/textio.hpp"

namespace lorasense {

double kernel_eval(const KernelSpec& k, std::span<const double> a,
                   std::span<const double> b) {
    if (k.kind == KernelSpec::Kind::linear) {
        double dot = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
        return dot;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::exp(-k.gamma * sq);
}

Scaler Scaler::fit(const std::vector<FeatureVector>& vectors) {
    if (vectors.empty()) throw TrainingError("cannot fit a scaler on no vectors");
    const std::size_t dim = vectors.front().features.size();
    Scaler s;
    s.mean.assign(dim, 0.0);
    s.stddev.assign(dim, 0.0);
    for (const auto& fv : vectors) {
        if (fv.features.size() != dim)
            throw DomainError("inconsistent feature dimensions");
        for (std::size_t j = 0; j < dim; ++j) s.mean[j] += fv.features[j];
    }
    const auto n = static_cast<double>(vectors.size());
    for (std::size_t j = 0; j < dim; ++j) s.mean[j] /= n;
    for (const auto& fv : vectors)
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = fv.features[j] - s.mean[j];
            s.stddev[j] += d * d;
        }
    for (std::size_t j = 0; j < dim; ++j) {
        s.stddev[j] = std::sqrt(s.stddev[j] / n);
        if (s.stddev[j] <= 0.0) s.stddev[j] = 1.0; // constant feature
    }
    return s;
}

std::vector<double> Scaler::apply(std::span<const double> x) const {
    if (x.size() != mean.size())
        throw DomainError("feature dimension mismatch: expected " +
                          std::to_string(mean.size()) + ", got " +
                          std::to_string(x.size()));
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / stddev[j];
    return out;
}

double BinarySvm::decision(std::span<const double> x_standardized) const {
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
        f += dual_coefs[i] * kernel_eval(kernel, support_vectors[i], x_standardized);
    return f;
}

BinarySvm train_binary(const std::vector<std::vector<double>>& x,
                       const std::vector<int>& y, const KernelSpec& kernel,
                       const SmoParams& params, std::uint64_t seed,
                       std::vector<double>* alphas_out) {
    const std::size_t n = x.size();
    if (n == 0 || y.size() != n) throw TrainingError("empty or mismatched training set");
    if (!(params.C > 0.0)) throw TrainingError("C must be > 0");
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] == 1) has_pos = true;
        else if (y[i] == -1) has_neg = true;
        else throw TrainingError("labels must be +1 or -1");
        for (double v : x[i])
            if (!std::isfinite(v)) throw DomainError("non-finite feature value");
    }
    if (!has_pos || !has_neg)
        throw TrainingError("degenerate training set: needs both classes");
    if (kernel.kind == KernelSpec::Kind::rbf && !(kernel.gamma > 0.0))
        throw TrainingError("rbf kernel requires gamma > 0");

    const double C = params.C;

    std::vector<double> alpha(n, 0.0);
    std::vector<double> err(n); // E_i = f(x_i) - y_i, maintained incrementally
    for (std::size_t i = 0; i < n; ++i) err[i] = -static_cast<double>(y[i]);
    double b = 0.0;

    Rng rng(seed);
    std::vector<double> k_row_i(n), k_row_j(n);

    // Hard cap keeps pathological fixtures from spinning; normal exits are
    // max_passes consecutive change-free sweeps.
    const long max_sweeps = 20000;
    int passes = 0;
    for (long sweep = 0; passes < params.max_passes && sweep < max_sweeps; ++sweep) {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double yi = y[i];
            const double r = err[i] * yi;
            const bool violates = (r < -params.tol && alpha[i] < C) ||
                                  (r > params.tol && alpha[i] > 0.0);
            if (!violates) continue;

            std::size_t j = rng.bounded(n - 1);
            if (j >= i) ++j;
            const double yj = y[j];

            double L, H;
            if (y[i] == y[j]) {
                L = std::max(0.0, alpha[i] + alpha[j] - C);
                H = std::min(C, alpha[i] + alpha[j]);
            } else {
                L = std::max(0.0, alpha[j] - alpha[i]);
                H = std::min(C, C + alpha[j] - alpha[i]);
            }
            if (L >= H) continue;

            const double kii = kernel_eval(kernel, x[i], x[i]);
            const double kjj = kernel_eval(kernel, x[j], x[j]);
            const double kij = kernel_eval(kernel, x[i], x[j]);
            const double eta = kii + kjj - 2.0 * kij;
            if (eta <= 0.0) continue; // duplicate points under this kernel

            double aj = alpha[j] + yj * (err[i] - err[j]) / eta;
            aj = std::clamp(aj, L, H);
            const double daj = aj - alpha[j];
            if (std::abs(daj) < 1e-10) continue;
            const double dai = -yi * yj * daj;
            const double ai = alpha[i] + dai;

            const double b1 = b - err[i] - yi * dai * kii - yj * daj * kij;
            const double b2 = b - err[j] - yi * dai * kij - yj * daj * kjj;
            double b_new;
            if (ai > 0.0 && ai < C) b_new = b1;
            else if (aj > 0.0 && aj < C) b_new = b2;
            else b_new = 0.5 * (b1 + b2);

            for (std::size_t k = 0; k < n; ++k) {
                k_row_i[k] = kernel_eval(kernel, x[i], x[k]);
                k_row_j[k] = kernel_eval(kernel, x[j], x[k]);
            }
            const double db = b_new - b;
            for (std::size_t k = 0; k < n; ++k)
                err[k] += yi * dai * k_row_i[k] + yj * daj * k_row_j[k] + db;

            alpha[i] = ai;
            alpha[j] = aj;
            b = b_new;
            ++changed;
        }
        if (changed == 0) ++passes;
        else passes = 0;
    }

    BinarySvm model;
    model.kernel = kernel;
    model.bias = b;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) {
            model.support_vectors.push_back(x[i]);
            model.dual_coefs.push_back(alpha[i] * y[i]);
        }
    }
    if (alphas_out) *alphas_out = std::move(alpha);
    return model;
}

double dual_objective(const BinarySvm& model) {
    double sum_alpha = 0.0;
    for (double c : model.dual_coefs) sum_alpha += std::abs(c);
    double quad = 0.0;
    const std::size_t m = model.support_vectors.size();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            quad += model.dual_coefs[i] * model.dual_coefs[j] *
                    kernel_eval(model.kernel, model.support_vectors[i],
                                model.support_vectors[j]);
    return sum_alpha - 0.5 * quad;
}

double max_kkt_violation(const BinarySvm& model,
                         const std::vector<std::vector<double>>& x,
                         const std::vector<int>& y,
                         const std::vector<double>& alphas, double C) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double yf = y[i] * model.decision(x[i]);
        double v = 0.0;
        if (alphas[i] <= 0.0) v = std::max(0.0, 1.0 - yf);
        else if (alphas[i] >= C) v = std::max(0.0, yf - 1.0);
        else v = std::abs(yf - 1.0);
        worst = std::max(worst, v);
    }
    return worst;
}

namespace {

double resolve_gamma(const KernelSpec& kernel,
                     const std::vector<std::vector<double>>& standardized) {
    if (kernel.kind != KernelSpec::Kind::rbf || kernel.gamma > 0.0)
        return kernel.gamma;
    const std::size_t dim = standardized.front().size();
    const auto n = static_cast<double>(standardized.size());
    double total_var = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        double mean = 0.0;
        for (const auto& row : standardized) mean += row[j];
        mean /= n;
        double var = 0.0;
        for (const auto& row : standardized) {
            const double d = row[j] - mean;
            var += d * d;
        }
        total_var += var / n;
    }
    const double mean_var = total_var / static_cast<double>(dim);
    if (mean_var <= 0.0) return 1.0 / static_cast<double>(dim);
    return 1.0 / (static_cast<double>(dim) * mean_var);
}

template <typename Fn>
void parallel_for_index(std::size_t count, Fn&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::future<void>> futures;
    futures.reserve(workers);
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
        futures.push_back(std::async(std::launch::async, [&]() {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                fn(i);
        }));
    for (auto& f : futures) f.get();
}

} // namespace

SvmModel train_one_vs_one(const Dataset& ds, KernelSpec kernel,
                          const SmoParams& params, std::uint64_t seed) {
    if (ds.vectors.empty()) throw TrainingError("empty training dataset");
    if (!ds.fully_labeled())
        throw TrainingError("training requires a fully labeled dataset");

    SvmModel model;
    model.n_features = ds.vectors.front().features.size();
    model.scaler = Scaler::fit(ds.vectors);

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.vectors.size(); ++i)
        by_class[ds.vectors[i].label->class_id].push_back(i);
    if (by_class.size() < 2)
        throw TrainingError("training requires at least two classes");
    for (const auto& [cls, idx] : by_class) model.classes.push_back(cls);

    std::vector<std::vector<double>> standardized(ds.vectors.size());
    for (std::size_t i = 0; i < ds.vectors.size(); ++i)
        standardized[i] = model.scaler.apply(ds.vectors[i].features);

    kernel.gamma = resolve_gamma(kernel, standardized);
    model.kernel = kernel;

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < model.classes.size(); ++a)
        for (std::size_t b = a + 1; b < model.classes.size(); ++b)
            pairs.emplace_back(model.classes[a], model.classes[b]);

    model.binaries.resize(pairs.size());
    parallel_for_index(pairs.size(), [&](std::size_t p) {
        const auto [pos, neg] = pairs[p];
        std::vector<std::vector<double>> x;
        std::vector<int> y;
        for (std::size_t i : by_class.at(pos)) {
            x.push_back(standardized[i]);
            y.push_back(1);
        }
        for (std::size_t i : by_class.at(neg)) {
            x.push_back(standardized[i]);
            y.push_back(-1);
        }
        BinarySvm bin =
            train_binary(x, y, kernel, params, derive_seed(seed, p));
        bin.class_pair = {pos, neg};
        model.binaries[p] = std::move(bin);
    });
    return model;
}

Prediction predict(const SvmModel& model, std::span<const double> x) {
    const std::vector<double> z = model.scaler.apply(x);
    Prediction out;
    out.votes.assign(model.classes.size(), 0);
    auto class_index = [&](int cls) {
        return static_cast<std::size_t>(
            std::find(model.classes.begin(), model.classes.end(), cls) -
            model.classes.begin());
    };
    for (const auto& bin : model.binaries) {
        const double f = bin.decision(z);
        const int vote = f >= 0.0 ? bin.class_pair.first : bin.class_pair.second;
        out.votes[class_index(vote)] += 1;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.votes.size(); ++i)
        if (out.votes[i] > out.votes[best]) best = i; // ties keep the lowest id
    out.label = {model.classes[best]};
    return out;
}

std::vector<int> predict_labels(const SvmModel& model, const Dataset& ds) {
    std::vector<int> labels;
    labels.reserve(ds.vectors.size());
    for (const auto& fv : ds.vectors)
        labels.push_back(predict(model, fv.features).label.class_id);
    return labels;
}

namespace {

Dataset dataset_from_indices(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.gateway_order = ds.gateway_order;
    for (std::size_t i : idx) {
        const auto& fv = ds.vectors[i];
        if (fv.label)
            out.class_counts[static_cast<std::size_t>(fv.label->class_id - 1)] += 1;
        else
            out.n_unlabeled += 1;
        out.vectors.push_back(fv);
    }
    return out;
}

} // namespace

CvResult cross_validate(const Dataset& ds, int k, KernelSpec kernel,
                        const SmoParams& params, std::uint64_t seed) {
    if (k < 2) throw SplitError("cross-validation requires k >= 2");
    if (!ds.fully_labeled())
        throw SplitError("cross-validation requires a fully labeled dataset");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.vectors.size(); ++i)
        by_class[ds.vectors[i].label->class_id].push_back(i);
    for (const auto& [cls, idx] : by_class)
        if (idx.size() < static_cast<std::size_t>(k))
            throw SplitError("class " + std::to_string(cls) + " has fewer than " +
                             std::to_string(k) + " members");

    // Stratified fold assignment: shuffle inside each class, deal round-robin.
    Rng rng(seed);
    std::vector<int> fold_of(ds.vectors.size(), 0);
    for (auto& [cls, idx] : by_class) {
        rng.shuffle(idx.begin(), idx.end());
        for (std::size_t m = 0; m < idx.size(); ++m)
            fold_of[idx[m]] = static_cast<int>(m % static_cast<std::size_t>(k));
    }

    CvResult result;
    double sum_acc = 0, sum_prec = 0, sum_rec = 0, sum_fdr = 0;
    int n_acc = 0, n_prec = 0, n_rec = 0, n_fdr = 0;
    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx, val_idx;
        for (std::size_t i = 0; i < ds.vectors.size(); ++i)
            (fold_of[i] == f ? val_idx : train_idx).push_back(i);

        const Dataset train = dataset_from_indices(ds, train_idx);
        const Dataset val = dataset_from_indices(ds, val_idx);
        const SvmModel model =
            train_one_vs_one(train, kernel, params, derive_seed(seed, 1000 + f));

        std::vector<int> classes(model.classes);
        for (int cls : labels_of(val))
            if (std::find(classes.begin(), classes.end(), cls) == classes.end())
                classes.push_back(cls);
        std::sort(classes.begin(), classes.end());

        EvalReport report =
            evaluate(labels_of(val), predict_labels(model, val), classes);
        if (report.macro_accuracy) { sum_acc += *report.macro_accuracy; ++n_acc; }
        if (report.macro_precision) { sum_prec += *report.macro_precision; ++n_prec; }
        if (report.macro_recall) { sum_rec += *report.macro_recall; ++n_rec; }
        if (report.macro_false_detection_rate) {
            sum_fdr += *report.macro_false_detection_rate;
            ++n_fdr;
        }
        result.fold_reports.push_back(std::move(report));
    }
    if (n_acc) result.mean_macro_accuracy = sum_acc / n_acc;
    if (n_prec) result.mean_macro_precision = sum_prec / n_prec;
    if (n_rec) result.mean_macro_recall = sum_rec / n_rec;
    if (n_fdr) result.mean_macro_false_detection_rate = sum_fdr / n_fdr;
    return result;
}

void write_cv_report_csv(const CvResult& cv, std::ostream& os) {
    os << "fold,n_samples,macro_accuracy,macro_precision,macro_recall,macro_fdr\n";
    for (std::size_t f = 0; f < cv.fold_reports.size(); ++f) {
        const auto& r = cv.fold_reports[f];
        os << f << ',' << r.n_samples << ',' << format_metric(r.macro_accuracy) << ','
           << format_metric(r.macro_precision) << ',' << format_metric(r.macro_recall)
           << ',' << format_metric(r.macro_false_detection_rate) << '\n';
    }
    os << "mean,," << format_metric(cv.mean_macro_accuracy) << ','
       << format_metric(cv.mean_macro_precision) << ','
       << format_metric(cv.mean_macro_recall) << ','
       << format_metric(cv.mean_macro_false_detection_rate) << '\n';
}

namespace {

std::string kernel_name(KernelSpec::Kind kind) {
    return kind == KernelSpec::Kind::linear ? "linear" : "rbf";
}

KernelSpec::Kind kernel_kind_from(const std::string& name) {
    if (name == "linear") return KernelSpec::Kind::linear;
    if (name == "rbf") return KernelSpec::Kind::rbf;
    throw FormatError("unknown kernel '" + name + "'");
}

// "key: rest" reader for the model file format.
struct LineReader {
    std::istream& is;
    std::size_t line_no = 0;

    std::pair<std::string, std::string> next(const std::string& expected_key) {
        std::string line;
        while (std::getline(is, line)) {
            ++line_no;
            std::string_view body = trim(line);
            if (body.empty()) continue;
            auto colon = body.find(':');
            if (colon == std::string_view::npos)
                throw FormatError("model file line " + std::to_string(line_no) +
                                  ": expected 'key: value'");
            std::string key{trim(body.substr(0, colon))};
            std::string value{trim(body.substr(colon + 1))};
            if (key != expected_key)
                throw FormatError("model file line " + std::to_string(line_no) +
                                  ": expected key '" + expected_key + "', got '" +
                                  key + "'");
            return {key, value};
        }
        throw FormatError("model file truncated: expected key '" + expected_key + "'");
    }
};

std::vector<double> parse_double_list(const std::string& text, std::size_t line_no) {
    std::vector<double> out;
    for (auto tok : split(text, ' ')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        auto v = parse_double(tok);
        if (!v)
            throw FormatError("model file line " + std::to_string(line_no) +
                              ": bad number '" + std::string(tok) + "'");
        out.push_back(*v);
    }
    return out;
}

} // namespace

void save_svm_model(const SvmModel& model, std::ostream& os) {
    os << "format_version: 1\n";
    os << "model: svm_ovo\n";
    os << "features: " << model.n_features << '\n';
    os << "kernel: " << kernel_name(model.kernel.kind) << '\n';
    os << "gamma: " << format_double(model.kernel.gamma) << '\n';
    os << "classes:";
    for (int cls : model.classes) os << ' ' << cls;
    os << '\n';
    os << "scaler_mean:";
    for (double v : model.scaler.mean) os << ' ' << format_double(v);
    os << '\n';
    os << "scaler_std:";
    for (double v : model.scaler.stddev) os << ' ' << format_double(v);
    os << '\n';
    os << "binaries: " << model.binaries.size() << '\n';
    for (const auto& bin : model.binaries) {
        os << "binary: " << bin.class_pair.first << ' ' << bin.class_pair.second << '\n';
        os << "bias: " << format_double(bin.bias) << '\n';
        os << "support_vectors: " << bin.support_vectors.size() << '\n';
        for (std::size_t i = 0; i < bin.support_vectors.size(); ++i) {
            os << "sv: " << format_double(bin.dual_coefs[i]);
            for (double v : bin.support_vectors[i]) os << ' ' << format_double(v);
            os << '\n';
        }
    }
}

SvmModel load_svm_model(std::istream& is) {
    if (!is) throw FormatError("model stream is not readable");
    LineReader reader{is};
    SvmModel model;

    if (reader.next("format_version").second != "1")
        throw FormatError("unsupported model format_version");
    if (reader.next("model").second != "svm_ovo")
        throw FormatError("not an svm_ovo model file");

    auto features = parse_u64(reader.next("features").second);
    if (!features) throw FormatError("bad features count");
    model.n_features = *features;

    model.kernel.kind = kernel_kind_from(reader.next("kernel").second);
    auto gamma = parse_double(reader.next("gamma").second);
    if (!gamma) throw FormatError("bad gamma value");
    model.kernel.gamma = *gamma;

    for (auto tok : split(reader.next("classes").second, ' ')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        auto v = parse_int(tok);
        if (!v) throw FormatError("bad class id '" + std::string(tok) + "'");
        model.classes.push_back(static_cast<int>(*v));
    }
    model.scaler.mean = parse_double_list(reader.next("scaler_mean").second, reader.line_no);
    model.scaler.stddev =
        parse_double_list(reader.next("scaler_std").second, reader.line_no);
    if (model.scaler.mean.size() != model.n_features ||
        model.scaler.stddev.size() != model.n_features)
        throw FormatError("scaler size does not match feature count");

    auto n_binaries = parse_u64(reader.next("binaries").second);
    if (!n_binaries) throw FormatError("bad binaries count");
    for (std::size_t bi = 0; bi < *n_binaries; ++bi) {
        BinarySvm bin;
        bin.kernel = model.kernel;
        auto pair_text = reader.next("binary").second;
        auto parts = split(pair_text, ' ');
        if (parts.size() != 2)
            throw FormatError("bad class pair '" + pair_text + "'");
        auto a = parse_int(trim(parts[0]));
        auto b = parse_int(trim(parts[1]));
        if (!a || !b) throw FormatError("bad class pair '" + pair_text + "'");
        bin.class_pair = {static_cast<int>(*a), static_cast<int>(*b)};

        auto bias = parse_double(reader.next("bias").second);
        if (!bias) throw FormatError("bad bias value");
        bin.bias = *bias;

        auto n_sv = parse_u64(reader.next("support_vectors").second);
        if (!n_sv) throw FormatError("bad support vector count");
        for (std::size_t s = 0; s < *n_sv; ++s) {
            auto values = parse_double_list(reader.next("sv").second, reader.line_no);
            if (values.size() != model.n_features + 1)
                throw FormatError("model file line " + std::to_string(reader.line_no) +
                                  ": support vector has wrong arity");
            bin.dual_coefs.push_back(values.front());
            bin.support_vectors.emplace_back(values.begin() + 1, values.end());
        }
        model.binaries.push_back(std::move(bin));
    }
    return model;
}

} // namespace lorasense
