#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lorasense/dataset.hpp"

namespace lorasense {

// K-means clustering baseline with a majority-vote cluster-to-class mapping.
struct KMeansModel {
    std::vector<std::vector<double>> centroids;
    std::size_t k = 0;
    double inertia = 0.0;                    // sum of squared distances
    std::vector<int> cluster_to_class;       // empty until assign_classes()

    bool has_mapping() const { return !cluster_to_class.empty(); }
};

struct KMeansParams {
    int max_iter = 100;
    int n_restarts = 10;
};

// Lloyd iterations from distance-weighted sampled initial centroids, best of
// n_restarts by inertia (ties keep the earlier restart). Empty clusters are
// reseeded from the point farthest from its assigned centroid. Requires
// k <= number of distinct vectors. iteration_trace, when given, receives the
// winning restart's inertia after every Lloyd update.
KMeansModel kmeans_fit(const Dataset& ds, std::size_t k, std::uint64_t seed,
                       const KMeansParams& params = {},
                       std::vector<double>* iteration_trace = nullptr);

// Maps each cluster to the majority TrafficClass among its members; ties go
// to the lowest class id, clusters with no members to Class 1.
KMeansModel assign_classes(KMeansModel model, const Dataset& labeled);

// Nearest centroid (ties to the lowest cluster id), then the mapped class.
TrafficClass kmeans_predict(const KMeansModel& model, std::span<const double> x);

std::size_t nearest_centroid(const KMeansModel& model, std::span<const double> x);

std::vector<int> kmeans_predict_labels(const KMeansModel& model, const Dataset& ds);

void save_kmeans_model(const KMeansModel& model, std::ostream& os);
KMeansModel load_kmeans_model(std::istream& is);

} // namespace lorasense
