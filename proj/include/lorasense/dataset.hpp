#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lorasense/radio_model.hpp"

namespace lorasense {

// Traffic levels 1..5 over the car count, fixed boundaries for a 50-car lot:
//   1: count <= 17, 2: 18-24, 3: 25-31, 4: 32-38, 5: count >= 39.
struct TrafficClass {
    int class_id = 1;

    bool operator==(const TrafficClass&) const = default;
};

inline constexpr std::array<int, 5> kTrafficClassIds{1, 2, 3, 4, 5};

TrafficClass label_class(int occupancy); // throws DomainError for negative counts

// Per-uplink feature vector: one mean RSSI per configured gateway.
struct FeatureVector {
    std::vector<double> features;
    std::optional<TrafficClass> label;
    double timestamp_s = 0.0; // window anchor (earliest record of the group)
};

struct Dataset {
    std::vector<FeatureVector> vectors;
    std::vector<std::string> gateway_order;
    std::array<std::size_t, 5> class_counts{}; // indexed by class_id - 1
    std::size_t n_unlabeled = 0;

    std::size_t size() const { return vectors.size(); }
    bool fully_labeled() const { return n_unlabeled == 0; }
};

enum class RecordFormat { csv, jsonl };

// Exact CSV header; occupancy may be empty.
inline constexpr const char* kCsvHeader =
    "timestamp_s,node_id,gateway_id,rssi_dbm,snr_db,sf,bw_khz,cr,freq_mhz,occupancy";

struct RowError {
    std::size_t line = 0; // 1-based, header included
    std::string column;
    std::string message;
};

struct ParseResult {
    std::vector<RssiRecord> records;
    std::vector<RowError> row_errors;
};

// Streaming parse of the record schema. A malformed header (CSV) or
// unreadable stream raises FormatError; bad rows are skipped and reported in
// row_errors with their line number and offending column.
ParseResult parse_records(std::istream& in, RecordFormat format);

void write_records(const std::vector<RssiRecord>& records, std::ostream& out,
                   RecordFormat format);

struct FeatureBuildOptions {
    double join_tolerance_s = 5.0;
    std::size_t min_gateways = 2;
};

// Groups records of one node whose timestamps lie within join_tolerance_s of
// the group's earliest member; each group becomes one feature vector holding
// the per-gateway mean RSSI in gateway_order. Groups heard by fewer than
// min_gateways of the configured gateways are dropped; a gateway missing
// from an accepted group is imputed with its input-wide mean RSSI. Labels
// must agree inside a group (LabelConflictError otherwise); records from
// gateways outside gateway_order are ignored.
Dataset build_features(const std::vector<RssiRecord>& records,
                       std::vector<std::string> gateway_order,
                       const FeatureBuildOptions& opts = {});

struct SplitResult {
    Dataset train;
    Dataset test;
};

// Deterministic shuffled split. Stratified keeps every class's train share
// within one element of train_fraction * class size and requires >= 2
// members per class.
SplitResult split_train_test(const Dataset& ds, double train_fraction,
                             std::uint64_t seed, bool stratified = true);

// Labels and feature matrix views used by the classifiers.
std::vector<int> labels_of(const Dataset& ds); // throws MappingError if unlabeled

} // namespace lorasense
