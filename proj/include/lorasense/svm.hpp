#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lorasense/dataset.hpp"
#include "lorasense/metrics.hpp"

namespace lorasense {

struct KernelSpec {
    enum class Kind { linear, rbf };

    Kind kind = Kind::rbf;
    // RBF width. <= 0 requests the automatic value
    // 1 / (n_features * mean per-feature variance of the standardized
    // training matrix), resolved at training time.
    double gamma = 0.0;
};

double kernel_eval(const KernelSpec& k, std::span<const double> a,
                   std::span<const double> b);

// Per-feature standardization to zero mean / unit variance. Constant
// features keep std = 1 so transforms stay invertible.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Scaler fit(const std::vector<FeatureVector>& vectors);
    std::vector<double> apply(std::span<const double> x) const;
};

// Soft-margin binary SVM in dual form. dual_coefs holds alpha_i * y_i for
// the retained support vectors (already standardized).
struct BinarySvm {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;
    double bias = 0.0;
    KernelSpec kernel;
    std::pair<int, int> class_pair{0, 0}; // (positive class, negative class)

    double decision(std::span<const double> x_standardized) const;
};

struct SmoParams {
    double C = 1.0;
    double tol = 1e-3;   // KKT tolerance
    int max_passes = 50; // consecutive change-free sweeps before exit
};

// Sequential minimal optimization with random second-multiplier selection
// under the seeded RNG. Inputs must already be standardized by the caller's
// scaler; labels are +1/-1 with at least one example of each sign.
// alphas_out, when given, receives the final multiplier of every training
// point (needed for KKT audits over non-support vectors).
BinarySvm train_binary(const std::vector<std::vector<double>>& x,
                       const std::vector<int>& y, const KernelSpec& kernel,
                       const SmoParams& params, std::uint64_t seed,
                       std::vector<double>* alphas_out = nullptr);

// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij,
// computed from the retained support vectors.
double dual_objective(const BinarySvm& model);

// Largest KKT violation over the training set:
//   alpha = 0:      max(0, 1 - y f(x))
//   0 < alpha < C:  |y f(x) - 1|
//   alpha = C:      max(0, y f(x) - 1)
double max_kkt_violation(const BinarySvm& model,
                         const std::vector<std::vector<double>>& x,
                         const std::vector<int>& y,
                         const std::vector<double>& alphas, double C);

// One-vs-one multiclass model with the stored input scaler.
struct SvmModel {
    std::vector<BinarySvm> binaries; // one per unordered class pair
    std::vector<int> classes;        // ascending
    Scaler scaler;
    KernelSpec kernel; // gamma resolved
    std::size_t n_features = 0;
};

SvmModel train_one_vs_one(const Dataset& ds, KernelSpec kernel,
                          const SmoParams& params, std::uint64_t seed);

struct Prediction {
    TrafficClass label;
    std::vector<int> votes; // aligned with SvmModel::classes
};

// Majority vote across the binaries; ties go to the lowest class id.
Prediction predict(const SvmModel& model, std::span<const double> x);

std::vector<int> predict_labels(const SvmModel& model, const Dataset& ds);

struct CvResult {
    std::vector<EvalReport> fold_reports;
    std::optional<double> mean_macro_accuracy;
    std::optional<double> mean_macro_precision;
    std::optional<double> mean_macro_recall;
    std::optional<double> mean_macro_false_detection_rate;
};

// Stratified k-fold cross-validation; every vector lands in exactly one
// validation fold. Requires k >= 2 and at least k members per class.
CvResult cross_validate(const Dataset& ds, int k, KernelSpec kernel,
                        const SmoParams& params, std::uint64_t seed);

void write_cv_report_csv(const CvResult& cv, std::ostream& os);

// Self-describing text serialization, bit-exact round trip.
void save_svm_model(const SvmModel& model, std::ostream& os);
SvmModel load_svm_model(std::istream& is);

} // namespace lorasense
