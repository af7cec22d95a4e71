#include "dode/ingest.hpp"

#include "dode/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace dode {

std::vector<double> interpolate_missing(std::span<const MaybeValue> series)
{
    std::vector<double> out(series.size(), 0.0);
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series[i])
            continue;
        out[i] = *series[i];
        if (!prev) {
            for (std::size_t j = 0; j < i; ++j)
                out[j] = out[i];
        } else if (i - *prev > 1) {
            const double a = out[*prev];
            const double b = out[i];
            const double span = static_cast<double>(i - *prev);
            for (std::size_t j = *prev + 1; j < i; ++j)
                out[j] = a + (b - a) * static_cast<double>(j - *prev) / span;
        }
        prev = i;
    }
    if (!prev)
        throw AllMissing("series has no observed values");
    for (std::size_t j = *prev + 1; j < series.size(); ++j)
        out[j] = out[*prev];
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> find_gaps(std::span<const MaybeValue> series,
                                                           std::size_t min_length)
{
    std::vector<std::pair<std::size_t, std::size_t>> gaps;
    std::size_t i = 0;
    while (i < series.size()) {
        if (series[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < series.size() && !series[j])
            ++j;
        if (j - i >= min_length)
            gaps.emplace_back(i, j - i);
        i = j;
    }
    return gaps;
}

CleanSensor clean_sensor(const SensorSeries& raw, const CleaningOptions& options, std::vector<GapWarning>* warnings)
{
    std::vector<MaybeValue> flow = raw.flow;
    std::vector<MaybeValue> speed = raw.speed;
    for (auto& f : flow) {
        if (f && (!std::isfinite(*f) || *f < 0.0))
            f.reset();
    }
    for (auto& v : speed) {
        if (v && (!std::isfinite(*v) || *v <= 0.0 || *v > options.speed_cap_kmh))
            v.reset();
    }
    if (warnings) {
        const auto min_len = options.max_gap_intervals + 1;
        for (auto [first, len] : find_gaps(flow, min_len))
            warnings->push_back({raw.sensor_id, "flow", first, len});
        for (auto [first, len] : find_gaps(speed, min_len))
            warnings->push_back({raw.sensor_id, "speed", first, len});
    }
    CleanSensor clean;
    clean.sensor_id = raw.sensor_id;
    try {
        clean.flow = interpolate_missing(flow);
        clean.speed = interpolate_missing(speed);
    } catch (const AllMissing&) {
        throw AllMissing("sensor '" + raw.sensor_id + "' has no valid observations");
    }
    return clean;
}

std::vector<SensorSeries> collect_series(std::span<const SensorRecord> records, std::size_t intervals)
{
    std::map<std::string, SensorSeries> by_id;
    for (const auto& rec : records) {
        if (rec.interval >= intervals)
            throw InvalidArgument("record for sensor '" + rec.sensor_id + "' lies outside the time grid");
        auto [it, inserted] = by_id.try_emplace(rec.sensor_id);
        auto& s = it->second;
        if (inserted) {
            s.sensor_id = rec.sensor_id;
            s.flow.assign(intervals, std::nullopt);
            s.speed.assign(intervals, std::nullopt);
        }
        s.flow[rec.interval] = rec.flow;
        s.speed[rec.interval] = rec.speed;
    }
    std::vector<SensorSeries> out;
    out.reserve(by_id.size());
    for (auto& [id, s] : by_id)
        out.push_back(std::move(s));
    return out;
}

CleanSensor rebin(const CleanSensor& sensor, std::size_t factor)
{
    if (factor == 0 || sensor.flow.size() % factor != 0)
        throw InvalidArgument("rebin factor must divide the series length");
    CleanSensor out;
    out.sensor_id = sensor.sensor_id;
    const auto n = sensor.flow.size() / factor;
    out.flow.resize(n);
    out.speed.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0, weighted = 0.0, plain = 0.0;
        for (std::size_t j = i * factor; j < (i + 1) * factor; ++j) {
            total += sensor.flow[j];
            weighted += sensor.flow[j] * sensor.speed[j];
            plain += sensor.speed[j];
        }
        out.flow[i] = total;
        out.speed[i] = total > 0.0 ? weighted / total : plain / static_cast<double>(factor);
    }
    return out;
}

double sensor_span_length_km(const TrafficNetwork& network, const Link& link)
{
    if (link.sensor_ids.size() < 2)
        return link.length_km;
    std::vector<LatLon> points;
    for (const auto& id : link.sensor_ids) {
        auto p = network.sensor_position(id);
        if (!p)
            return link.length_km;
        points.push_back(*p);
    }
    return polyline_length_km(points);
}

double link_flow(const Link& link, const SensorTable& sensors, std::size_t t, double span_length_km)
{
    if (link.sensor_ids.empty())
        throw NoSensorsOnLink("link '" + link.id + "' has no sensors");
    const double count = static_cast<double>(link.sensor_ids.size());
    double density = 0.0;
    for (const auto& id : link.sensor_ids) {
        auto it = sensors.find(id);
        if (it == sensors.end())
            throw InvalidArgument("no data for sensor '" + id + "' on link '" + link.id + "'");
        const auto& s = it->second;
        if (t >= s.flow.size() || t >= s.speed.size())
            throw InvalidArgument("sensor '" + id + "' series is shorter than the time grid");
        const double v = s.speed[t];
        if (!(v > 0.0))
            throw ZeroSpeed("sensor '" + id + "' has non-positive speed at interval " + std::to_string(t));
        density += s.flow[t] / (count * v);
    }
    return density * span_length_km;
}

Table link_flows(const TrafficNetwork& network, const SensorTable& sensors, std::size_t intervals)
{
    Table y(network.link_count(), intervals);
    for (std::size_t a = 0; a < network.link_count(); ++a) {
        const auto& link = network.links()[a];
        const double length = sensor_span_length_km(network, link);
        for (std::size_t t = 0; t < intervals; ++t)
            y(a, t) = link_flow(link, sensors, t, length);
    }
    return y;
}

Table link_speeds(const TrafficNetwork& network, const SensorTable& sensors, std::size_t intervals)
{
    Table speeds(network.link_count(), intervals);
    for (std::size_t a = 0; a < network.link_count(); ++a) {
        const auto& link = network.links()[a];
        if (link.sensor_ids.empty())
            throw NoSensorsOnLink("link '" + link.id + "' has no sensors");
        for (const auto& id : link.sensor_ids) {
            auto it = sensors.find(id);
            if (it == sensors.end() || it->second.speed.size() < intervals)
                throw InvalidArgument("no complete speed data for sensor '" + id + "'");
            for (std::size_t t = 0; t < intervals; ++t)
                speeds(a, t) += it->second.speed[t];
        }
        const double count = static_cast<double>(link.sensor_ids.size());
        for (std::size_t t = 0; t < intervals; ++t) {
            speeds(a, t) /= count;
            if (!(speeds(a, t) > 0.0))
                throw ZeroSpeed("link '" + link.id + "' has non-positive speed at interval " + std::to_string(t));
        }
    }
    return speeds;
}

double local_lower_bound(const LatLon& node, std::span<const ArterialSensor> arterials, std::size_t t,
                         double lambda_km, double alpha)
{
    if (!(lambda_km > 0.0))
        throw InvalidArgument("lambda must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw InvalidArgument("alpha must lie in [0, 1]");
    double total = 0.0;
    for (const auto& s : arterials) {
        if (haversine_km(node, s.position) <= lambda_km)
            total += s.flow.at(t);
    }
    return alpha * total;
}

Table lower_bounds(const TrafficNetwork& network, std::span<const ArterialSensor> arterials, std::size_t intervals,
                   double lambda_km, double alpha)
{
    if (!(lambda_km > 0.0))
        throw InvalidArgument("lambda must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw InvalidArgument("alpha must lie in [0, 1]");
    Table lb(network.node_count(), intervals);
    for (std::size_t i = 0; i < network.node_count(); ++i) {
        const auto& pos = network.nodes()[i].position;
        for (const auto& s : arterials) {
            if (haversine_km(pos, s.position) > lambda_km)
                continue;
            if (s.flow.size() < intervals)
                throw InvalidArgument("arterial sensor '" + s.sensor_id + "' series is shorter than the time grid");
            for (std::size_t t = 0; t < intervals; ++t)
                lb(i, t) += s.flow[t];
        }
        for (std::size_t t = 0; t < intervals; ++t)
            lb(i, t) *= alpha;
    }
    return lb;
}

} // namespace dode
