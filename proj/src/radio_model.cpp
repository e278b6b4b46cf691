#include "lorasense/radio_model.hpp"

#include <algorithm>

#include "lorasense/errors.hpp"
#include "lorasense/rng.hpp"

namespace lorasense {

void RadioParams::validate() const {
    if (!(d0_m > 0.0)) throw ConfigError("d0_m must be > 0");
    if (!(sigma_db >= 0.0)) throw ConfigError("sigma_db must be >= 0");
    if (!(n_exponent > 0.0)) throw ConfigError("n_exponent must be > 0");
    for (double v : {ptx_dbm, gtx_dbi, pl_d0_db, n_exponent, d0_m, sigma_db})
        if (!std::isfinite(v)) throw ConfigError("radio parameters must be finite");
}

double path_loss_from_measurement(const RssiRecord& rec, const RadioParams& params,
                                  PathLossMode mode) {
    if (!std::isfinite(rec.rssi_dbm) || !std::isfinite(rec.snr_db))
        throw DomainError("invalid measurement: rssi/snr must be finite");
    if (!std::isfinite(params.ptx_dbm) || !std::isfinite(params.gtx_dbi))
        throw DomainError("invalid measurement: ptx/gtx must be finite");
    if (mode == PathLossMode::paper)
        return rec.rssi_dbm + rec.snr_db + params.ptx_dbm + params.gtx_dbi;
    return params.ptx_dbm + params.gtx_dbi - rec.rssi_dbm;
}

double expected_path_loss(double d_m, const RadioParams& params, double shadow_db) {
    if (!(d_m > 0.0)) throw DomainError("distance must be > 0");
    return params.pl_d0_db + 10.0 * params.n_exponent * std::log10(d_m / params.d0_m) +
           shadow_db;
}

double path_loss_residual(double measured_pl_db, double expected_pl_db) {
    if (!std::isfinite(measured_pl_db) || !std::isfinite(expected_pl_db))
        throw DomainError("path loss values must be finite");
    return measured_pl_db - expected_pl_db;
}

void ScenarioConfig::validate() const {
    radio.validate();
    if (!(lot_length_m > 0.0) || !(lot_width_m > 0.0))
        throw ConfigError("lot dimensions must be > 0");
    if (capacity <= 0) throw ConfigError("capacity must be > 0");
    if (!(tx_interval_s > 0.0)) throw ConfigError("tx_interval_s must be > 0");
    if (!(duration_s >= 0.0)) throw ConfigError("duration_s must be >= 0");
    if (gateways.empty()) throw ConfigError("at least one gateway is required");
    if (!(beta_db_per_car >= 0.0)) throw ConfigError("beta_db_per_car must be >= 0");
    if (node_position.z_m < 0.0) throw ConfigError("node height must be >= 0");
    for (const auto& gw : gateways) {
        if (gw.id.empty()) throw ConfigError("gateway id must not be empty");
        if (gw.position.z_m < 0.0)
            throw ConfigError("gateway " + gw.id + " height must be >= 0");
    }
    for (std::size_t i = 0; i + 1 < gateways.size(); ++i)
        for (std::size_t j = i + 1; j < gateways.size(); ++j)
            if (gateways[i].id == gateways[j].id)
                throw ConfigError("duplicate gateway id " + gateways[i].id);
    if (node_id.empty()) throw ConfigError("node_id must not be empty");

    if (occupancy.kind == OccupancyProcess::Kind::schedule) {
        if (occupancy.schedule.empty())
            throw ConfigError("occupancy schedule must have at least one step");
        double prev = -1.0;
        for (const auto& step : occupancy.schedule) {
            if (step.t_start_s <= prev)
                throw ConfigError("occupancy schedule times must be strictly increasing");
            if (step.count < 0 || step.count > capacity)
                throw ConfigError("occupancy schedule count outside [0, capacity]");
            prev = step.t_start_s;
        }
        if (occupancy.schedule.front().t_start_s != 0.0)
            throw ConfigError("occupancy schedule must start at t = 0");
        if (occupancy.schedule_period_s < 0.0)
            throw ConfigError("schedule period must be >= 0");
        if (occupancy.schedule_period_s > 0.0 &&
            occupancy.schedule.back().t_start_s >= occupancy.schedule_period_s)
            throw ConfigError("schedule steps must fall inside the repeat period");
    } else {
        if (occupancy.walk_start < 0 || occupancy.walk_start > capacity)
            throw ConfigError("walk start outside [0, capacity]");
        if (occupancy.walk_step_max < 0)
            throw ConfigError("walk step must be >= 0");
    }
}

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    // Lot center is (50, 17.5); gateway horizontal distances from it are
    // 300, 500 and 800 m at tower heights 30/32/35 m.
    cfg.gateways = {
        {"gw1", {350.0, 17.5, 30.0}},
        {"gw2", {50.0, 517.5, 32.0}},
        {"gw3", {-750.0, 17.5, 35.0}},
    };

    // Fill/drain occupancy profile: climb from near-empty to near-full and
    // back once per period, dwelling at fixed levels. Five periods cover the
    // stock 7000-uplink run.
    const int up[] = {2, 16, 19, 23, 26, 30, 33, 37, 40, 45};
    const double dwell_end_s = 5040.0; // near-empty / near-full dwell
    const double dwell_mid_s = 4620.0;
    OccupancyProcess proc;
    proc.kind = OccupancyProcess::Kind::schedule;
    double t = 0.0;
    for (int i = 0; i < 10; ++i) {
        proc.schedule.push_back({t, up[i]});
        t += (i == 0 || i == 9) ? dwell_end_s : dwell_mid_s;
    }
    for (int i = 8; i >= 1; --i) {
        proc.schedule.push_back({t, up[i]});
        t += dwell_mid_s;
    }
    proc.schedule_period_s = t; // 84000 s
    cfg.occupancy = proc;
    return cfg;
}

int schedule_value(const OccupancyProcess& proc, double t_s) {
    if (proc.kind != OccupancyProcess::Kind::schedule)
        throw DomainError("schedule_value requires a schedule process");
    double t = t_s;
    if (proc.schedule_period_s > 0.0) {
        t = std::fmod(t, proc.schedule_period_s);
        if (t < 0.0) t += proc.schedule_period_s;
    }
    // last step with t_start <= t; clock positions before the first step take
    // the first step's value
    int value = proc.schedule.front().count;
    for (const auto& step : proc.schedule) {
        if (step.t_start_s <= t)
            value = step.count;
        else
            break;
    }
    return value;
}

std::vector<RssiRecord> simulate_scenario(const ScenarioConfig& cfg) {
    cfg.validate();

    std::vector<const GatewaySite*> order;
    order.reserve(cfg.gateways.size());
    for (const auto& gw : cfg.gateways) order.push_back(&gw);
    std::sort(order.begin(), order.end(),
              [](const GatewaySite* a, const GatewaySite* b) { return a->id < b->id; });

    std::vector<double> epl(order.size());
    for (std::size_t g = 0; g < order.size(); ++g) {
        const double d = distance_m(cfg.node_position, order[g]->position);
        if (!(d > 0.0))
            throw ConfigError("gateway " + order[g]->id + " coincides with the node");
        epl[g] = expected_path_loss(d, cfg.radio);
    }

    Rng rng(cfg.seed);
    const bool walk = cfg.occupancy.kind == OccupancyProcess::Kind::random_walk;
    int count = walk ? cfg.occupancy.walk_start : 0;

    std::vector<RssiRecord> records;
    const auto n_uplinks =
        static_cast<std::size_t>(std::max(0.0, std::ceil(cfg.duration_s / cfg.tx_interval_s)));
    records.reserve(n_uplinks * order.size());

    for (std::size_t k = 0; ; ++k) {
        const double t = static_cast<double>(k) * cfg.tx_interval_s;
        if (!(t < cfg.duration_s)) break;

        if (walk) {
            if (k > 0 && cfg.occupancy.walk_step_max > 0) {
                const auto span = static_cast<std::uint64_t>(2 * cfg.occupancy.walk_step_max + 1);
                const int step = static_cast<int>(rng.bounded(span)) - cfg.occupancy.walk_step_max;
                count = std::clamp(count + step, 0, cfg.capacity);
            }
        } else {
            count = schedule_value(cfg.occupancy, t);
        }

        for (std::size_t g = 0; g < order.size(); ++g) {
            const double shadow =
                cfg.radio.sigma_db > 0.0 ? rng.gaussian(0.0, cfg.radio.sigma_db) : 0.0;
            const double attenuation =
                epl[g] + cfg.beta_db_per_car * static_cast<double>(count) + shadow;

            RssiRecord rec;
            rec.timestamp_s = t;
            rec.node_id = cfg.node_id;
            rec.gateway_id = order[g]->id;
            rec.rssi_dbm = cfg.radio.ptx_dbm + cfg.radio.gtx_dbi - attenuation;
            // SNR against the ~-123 dBm thermal floor of a 125 kHz channel,
            // capped at the demodulator ceiling.
            rec.snr_db = std::min(10.0, rec.rssi_dbm + 123.0);
            rec.sf = cfg.sf;
            rec.bw_khz = cfg.bw_khz;
            rec.cr = cfg.cr;
            rec.freq_mhz = cfg.freq_mhz;
            rec.occupancy = count;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

} // namespace lorasense
