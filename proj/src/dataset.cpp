#include "lorasense/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "lorasense/errors.hpp"
#include "lorasense/rng.hpp"
#include "lorasense/textio.hpp"

namespace lorasense {

TrafficClass label_class(int occupancy) {
    if (occupancy < 0) throw DomainError("occupancy must be >= 0");
    if (occupancy <= 17) return {1};
    if (occupancy <= 24) return {2};
    if (occupancy <= 31) return {3};
    if (occupancy <= 38) return {4};
    return {5};
}

namespace {

const std::array<std::string, 10> kColumns = {
    "timestamp_s", "node_id", "gateway_id", "rssi_dbm", "snr_db",
    "sf",          "bw_khz",  "cr",         "freq_mhz", "occupancy"};

struct FieldError {
    std::string column;
    std::string message;
};

// Field assignment shared by the CSV and JSONL readers. Returns an error
// description instead of throwing so row errors can be accumulated.
std::optional<FieldError> assign_field(RssiRecord& rec, std::size_t col,
                                       std::string_view value) {
    auto bad = [&](const char* what) {
        return FieldError{kColumns[col], std::string(what) + ": '" + std::string(value) + "'"};
    };
    switch (col) {
    case 0:
        if (auto v = parse_double(value)) rec.timestamp_s = *v;
        else return bad("not a number");
        break;
    case 1:
        if (value.empty()) return bad("empty node_id");
        rec.node_id = std::string(value);
        break;
    case 2:
        if (value.empty()) return bad("empty gateway_id");
        rec.gateway_id = std::string(value);
        break;
    case 3:
        if (auto v = parse_double(value); v && std::isfinite(*v)) rec.rssi_dbm = *v;
        else return bad("not a finite number");
        break;
    case 4:
        if (auto v = parse_double(value); v && std::isfinite(*v)) rec.snr_db = *v;
        else return bad("not a finite number");
        break;
    case 5:
        if (auto v = parse_int(value)) rec.sf = static_cast<int>(*v);
        else return bad("not an integer");
        break;
    case 6:
        if (auto v = parse_double(value)) rec.bw_khz = *v;
        else return bad("not a number");
        break;
    case 7:
        rec.cr = std::string(value);
        break;
    case 8:
        if (auto v = parse_double(value)) rec.freq_mhz = *v;
        else return bad("not a number");
        break;
    case 9:
        if (value.empty()) {
            rec.occupancy.reset();
        } else if (auto v = parse_int(value); v && *v >= 0) {
            rec.occupancy = static_cast<int>(*v);
        } else {
            return bad("not a nonnegative integer");
        }
        break;
    }
    return std::nullopt;
}

ParseResult parse_csv(std::istream& in) {
    ParseResult result;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty input: missing CSV header");
    if (trim(line) != kCsvHeader)
        throw FormatError("malformed CSV header: expected '" + std::string(kCsvHeader) +
                          "', got '" + std::string(trim(line)) + "'");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = trim(line);
        if (body.empty()) continue;
        auto fields = split(body, ',');
        if (fields.size() != kColumns.size()) {
            result.row_errors.push_back(
                {line_no, "", "expected " + std::to_string(kColumns.size()) +
                                  " fields, got " + std::to_string(fields.size())});
            continue;
        }
        RssiRecord rec;
        bool ok = true;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (auto err = assign_field(rec, c, trim(fields[c]))) {
                result.row_errors.push_back({line_no, err->column, err->message});
                ok = false;
                break;
            }
        }
        if (ok) result.records.push_back(std::move(rec));
    }
    return result;
}

ParseResult parse_jsonl(std::istream& in) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = trim(line);
        if (body.empty()) continue;
        nlohmann::json obj = nlohmann::json::parse(body, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            result.row_errors.push_back({line_no, "", "not a JSON object"});
            continue;
        }
        RssiRecord rec;
        bool ok = true;
        for (std::size_t c = 0; c < kColumns.size() && ok; ++c) {
            const auto& key = kColumns[c];
            if (!obj.contains(key) || obj[key].is_null()) {
                if (key == "occupancy") {
                    rec.occupancy.reset();
                    continue;
                }
                result.row_errors.push_back({line_no, key, "missing field"});
                ok = false;
                break;
            }
            const auto& v = obj[key];
            std::string text;
            if (v.is_string()) text = v.get<std::string>();
            else text = v.dump();
            if (auto err = assign_field(rec, c, text)) {
                result.row_errors.push_back({line_no, err->column, err->message});
                ok = false;
            }
        }
        if (ok) result.records.push_back(std::move(rec));
    }
    return result;
}

void write_csv(const std::vector<RssiRecord>& records, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << format_double(r.timestamp_s) << ',' << r.node_id << ',' << r.gateway_id
            << ',' << format_double(r.rssi_dbm) << ',' << format_double(r.snr_db) << ','
            << r.sf << ',' << format_double(r.bw_khz) << ',' << r.cr << ','
            << format_double(r.freq_mhz) << ',';
        if (r.occupancy) out << *r.occupancy;
        out << '\n';
    }
}

void write_jsonl(const std::vector<RssiRecord>& records, std::ostream& out) {
    for (const auto& r : records) {
        nlohmann::json obj;
        obj["timestamp_s"] = r.timestamp_s;
        obj["node_id"] = r.node_id;
        obj["gateway_id"] = r.gateway_id;
        obj["rssi_dbm"] = r.rssi_dbm;
        obj["snr_db"] = r.snr_db;
        obj["sf"] = r.sf;
        obj["bw_khz"] = r.bw_khz;
        obj["cr"] = r.cr;
        obj["freq_mhz"] = r.freq_mhz;
        if (r.occupancy) obj["occupancy"] = *r.occupancy;
        else obj["occupancy"] = nullptr;
        out << obj.dump() << '\n';
    }
}

} // namespace

ParseResult parse_records(std::istream& in, RecordFormat format) {
    if (!in) throw FormatError("input stream is not readable");
    return format == RecordFormat::csv ? parse_csv(in) : parse_jsonl(in);
}

void write_records(const std::vector<RssiRecord>& records, std::ostream& out,
                   RecordFormat format) {
    if (format == RecordFormat::csv) write_csv(records, out);
    else write_jsonl(records, out);
}

Dataset build_features(const std::vector<RssiRecord>& records,
                       std::vector<std::string> gateway_order,
                       const FeatureBuildOptions& opts) {
    if (gateway_order.empty()) throw DomainError("gateway_order must not be empty");
    if (!(opts.join_tolerance_s >= 0.0))
        throw DomainError("join_tolerance_s must be >= 0");

    std::map<std::string, std::size_t> gw_index;
    for (std::size_t i = 0; i < gateway_order.size(); ++i) {
        if (!gw_index.emplace(gateway_order[i], i).second)
            throw DomainError("duplicate gateway id in gateway_order");
    }

    // Input-wide per-gateway mean RSSI, the imputation value for gateways
    // missing from an accepted group.
    std::vector<double> gw_sum(gateway_order.size(), 0.0);
    std::vector<std::size_t> gw_n(gateway_order.size(), 0);

    std::map<std::string, std::vector<const RssiRecord*>> by_node;
    for (const auto& rec : records) {
        auto it = gw_index.find(rec.gateway_id);
        if (it == gw_index.end()) continue;
        gw_sum[it->second] += rec.rssi_dbm;
        gw_n[it->second] += 1;
        by_node[rec.node_id].push_back(&rec);
    }

    Dataset ds;
    ds.gateway_order = std::move(gateway_order);
    const std::size_t dim = ds.gateway_order.size();

    for (auto& [node, recs] : by_node) {
        std::stable_sort(recs.begin(), recs.end(),
                         [](const RssiRecord* a, const RssiRecord* b) {
                             if (a->timestamp_s != b->timestamp_s)
                                 return a->timestamp_s < b->timestamp_s;
                             return a->gateway_id < b->gateway_id;
                         });

        std::size_t begin = 0;
        while (begin < recs.size()) {
            const double anchor = recs[begin]->timestamp_s;
            std::size_t end = begin + 1;
            while (end < recs.size() &&
                   recs[end]->timestamp_s - anchor <= opts.join_tolerance_s)
                ++end;

            std::vector<double> sum(dim, 0.0);
            std::vector<std::size_t> n(dim, 0);
            std::optional<int> occupancy;
            for (std::size_t i = begin; i < end; ++i) {
                const auto& rec = *recs[i];
                const std::size_t g = gw_index.at(rec.gateway_id);
                sum[g] += rec.rssi_dbm;
                n[g] += 1;
                if (rec.occupancy) {
                    if (occupancy && *occupancy != *rec.occupancy)
                        throw LabelConflictError(
                            "conflicting occupancy labels in uplink group of node '" +
                            node + "' at t=" + format_double(anchor));
                    occupancy = rec.occupancy;
                }
            }

            const auto seen = static_cast<std::size_t>(
                std::count_if(n.begin(), n.end(), [](std::size_t c) { return c > 0; }));
            if (seen >= opts.min_gateways) {
                FeatureVector fv;
                fv.timestamp_s = anchor;
                fv.features.resize(dim);
                for (std::size_t g = 0; g < dim; ++g) {
                    if (n[g] > 0) {
                        fv.features[g] = sum[g] / static_cast<double>(n[g]);
                    } else {
                        if (gw_n[g] == 0)
                            throw DomainError("cannot impute gateway '" +
                                              ds.gateway_order[g] +
                                              "': no records for it in the input");
                        fv.features[g] = gw_sum[g] / static_cast<double>(gw_n[g]);
                    }
                }
                if (occupancy) {
                    fv.label = label_class(*occupancy);
                    ds.class_counts[static_cast<std::size_t>(fv.label->class_id - 1)] += 1;
                } else {
                    ds.n_unlabeled += 1;
                }
                ds.vectors.push_back(std::move(fv));
            }
            begin = end;
        }
    }
    return ds;
}

namespace {

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.gateway_order = ds.gateway_order;
    out.vectors.reserve(idx.size());
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

SplitResult split_train_test(const Dataset& ds, double train_fraction,
                             std::uint64_t seed, bool stratified) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw SplitError("train_fraction must be in (0, 1)");
    if (ds.vectors.size() < 2)
        throw SplitError("cannot split a dataset with fewer than 2 vectors");

    Rng rng(seed);
    std::vector<std::size_t> train_idx, test_idx;

    if (stratified) {
        if (!ds.fully_labeled())
            throw SplitError("stratified split requires a fully labeled dataset");
        std::map<int, std::vector<std::size_t>> strata;
        for (std::size_t i = 0; i < ds.vectors.size(); ++i)
            strata[ds.vectors[i].label->class_id].push_back(i);
        for (auto& [cls, idx] : strata) {
            if (idx.size() < 2)
                throw SplitError("class " + std::to_string(cls) +
                                 " has fewer than 2 members");
            rng.shuffle(idx.begin(), idx.end());
            auto n_train = static_cast<std::size_t>(
                std::llround(train_fraction * static_cast<double>(idx.size())));
            n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
            train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + n_train);
            test_idx.insert(test_idx.end(), idx.begin() + n_train, idx.end());
        }
    } else {
        std::vector<std::size_t> idx(ds.vectors.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx.begin(), idx.end());
        auto n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(idx.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        train_idx.assign(idx.begin(), idx.begin() + n_train);
        test_idx.assign(idx.begin() + n_train, idx.end());
    }

    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {subset(ds, train_idx), subset(ds, test_idx)};
}

std::vector<int> labels_of(const Dataset& ds) {
    std::vector<int> labels;
    labels.reserve(ds.vectors.size());
    for (const auto& fv : ds.vectors) {
        if (!fv.label) throw MappingError("dataset contains unlabeled vectors");
        labels.push_back(fv.label->class_id);
    }
    return labels;
}

} // namespace lorasense
