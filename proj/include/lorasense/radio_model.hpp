#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lorasense {

struct Position {
    double x_m = 0.0;
    double y_m = 0.0;
    double z_m = 0.0;
};

inline double distance_m(const Position& a, const Position& b) {
    const double dx = a.x_m - b.x_m;
    const double dy = a.y_m - b.y_m;
    const double dz = a.z_m - b.z_m;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Link-budget and log-distance path-loss parameters.
struct RadioParams {
    double ptx_dbm = 14.0;  // transmit power
    double gtx_dbi = 2.0;   // transmitter antenna gain
    double pl_d0_db = 40.0; // path loss at the reference distance
    double n_exponent = 2.7;
    double d0_m = 1.0;
    double sigma_db = 0.5;  // shadow-fading standard deviation

    void validate() const; // throws ConfigError on invariant violation
};

// One gateway's reception report for one uplink.
struct RssiRecord {
    double timestamp_s = 0.0;
    std::string node_id;
    std::string gateway_id;
    double rssi_dbm = 0.0;
    double snr_db = 0.0;
    int sf = 7;
    double bw_khz = 125.0;
    std::string cr = "4/5";
    double freq_mhz = 868.0;
    std::optional<int> occupancy;
};

enum class PathLossMode {
    physical, // ptx + gtx - rssi, conventional positive loss (default)
    paper     // rssi + snr + ptx + gtx, verbatim link-budget form
};

// Path loss of one reception report. `physical` is the default convention;
// `paper` reproduces the verbatim sum including SNR and the RSSI sign.
double path_loss_from_measurement(const RssiRecord& rec, const RadioParams& params,
                                  PathLossMode mode = PathLossMode::physical);

// Log-distance expected path loss:
//   pl_d0 + 10 * n * log10(d / d0) + shadow
// Throws DomainError for d_m <= 0.
double expected_path_loss(double d_m, const RadioParams& params, double shadow_db = 0.0);

// measured - expected, in dB.
double path_loss_residual(double measured_pl_db, double expected_pl_db);

struct GatewaySite {
    std::string id;
    Position position;
};

// Occupancy over time: either a piecewise-constant schedule (optionally
// repeating with a fixed period) or an integer random walk reflected into
// [0, capacity].
struct OccupancyProcess {
    enum class Kind { schedule, random_walk };

    Kind kind = Kind::schedule;

    struct Step {
        double t_start_s = 0.0;
        int count = 0;
    };
    std::vector<Step> schedule;   // sorted by t_start_s; first step at t = 0
    double schedule_period_s = 0; // > 0 repeats the schedule with this period

    int walk_start = 25;
    int walk_step_max = 2; // per-uplink step drawn uniformly from [-max, max]
};

struct ScenarioConfig {
    double lot_length_m = 100.0;
    double lot_width_m = 35.0;
    int capacity = 50;
    std::vector<GatewaySite> gateways;
    Position node_position{50.0, 17.5, 3.0};
    std::string node_id = "node1";
    double tx_interval_s = 60.0;
    double duration_s = 420000.0;
    double beta_db_per_car = 0.2; // occupancy attenuation coefficient
    RadioParams radio;
    std::uint64_t seed = 42;
    OccupancyProcess occupancy;

    // Radio constants stamped into every record.
    int sf = 7;
    double bw_khz = 125.0;
    std::string cr = "4/5";
    double freq_mhz = 868.0;

    void validate() const; // throws ConfigError on invariant violation
};

// Scenario with the stock testbed geometry: a 100 m x 35 m lot, three
// gateways 300/500/800 m away at 30/32/35 m height, one node at lot center,
// 60 s uplinks for 7000 uplinks, and a repeating fill/drain occupancy
// profile over the 50-car capacity.
ScenarioConfig default_scenario();

// Occupancy value c(t) of the configured process. For a random walk this is
// only meaningful inside simulate_scenario; schedule lookup is pure.
int schedule_value(const OccupancyProcess& proc, double t_s);

// Generates one uplink per tx_interval_s starting at t = 0. Every gateway
// hears every uplink:
//   rssi = ptx + gtx - [pl(d_g) + beta * c(t) + X_g],
// X_g gaussian per gateway per uplink (skipped entirely when sigma == 0).
// Records of one uplink are emitted in ascending gateway_id order. The same
// seed yields a bit-identical stream.
std::vector<RssiRecord> simulate_scenario(const ScenarioConfig& cfg);

} // namespace lorasense
