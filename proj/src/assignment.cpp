#include "dode/assignment.hpp"

#include "dode/error.hpp"
#include "dode/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <tuple>

namespace dode {

namespace {

std::size_t interval_at(double minutes, double dt)
{
    auto k = static_cast<std::size_t>(std::max(0.0, std::floor(minutes / dt)));
    if (static_cast<double>(k + 1) * dt <= minutes)
        ++k;
    else if (k > 0 && static_cast<double>(k) * dt > minutes)
        --k;
    return k;
}

/// Calls emit(t, weight) for every in-horizon interval credited by one traversal.
template <class Emit>
void credit_traversal(const LinkTraversal& tr, double dt, std::size_t intervals, DarMode mode, Emit&& emit)
{
    const auto first = interval_at(tr.entry_minutes, dt);
    if (mode == DarMode::Entry) {
        if (first < intervals)
            emit(first, 1.0);
        return;
    }
    const double dwell = tr.exit_minutes - tr.entry_minutes;
    for (auto t = first; t < intervals; ++t) {
        const double lo = static_cast<double>(t) * dt;
        if (lo >= tr.exit_minutes)
            break;
        const double hi = lo + dt;
        const double overlap = std::min(hi, tr.exit_minutes) - std::max(lo, tr.entry_minutes);
        if (overlap <= 0.0)
            continue;
        if (mode == DarMode::AnyOverlap)
            emit(t, 1.0);
        else
            emit(t, dwell > 0.0 ? overlap / dwell : 1.0);
    }
}

double departure_instant(std::size_t t_prime, std::size_t sample, std::size_t samples, double dt)
{
    return (static_cast<double>(t_prime) + (static_cast<double>(sample) + 0.5) / static_cast<double>(samples)) * dt;
}

void check_speeds(const TrafficNetwork& network, const SpeedProfile& speeds)
{
    if (speeds.kmh.rows != network.link_count())
        throw DimensionMismatch("speed profile has " + std::to_string(speeds.kmh.rows) + " links, network has "
                                + std::to_string(network.link_count()));
    if (speeds.kmh.cols == 0 || !(speeds.interval_minutes > 0.0))
        throw InvalidArgument("speed profile must cover at least one interval");
}

} // namespace

Trajectory trajectory(const TrafficNetwork& network, const Path& path, double departure_minutes,
                      const SpeedProfile& speeds)
{
    check_speeds(network, speeds);
    const double dt = speeds.interval_minutes;
    const std::size_t last = speeds.intervals() - 1;
    if (!(departure_minutes >= 0.0) || departure_minutes >= speeds.horizon_minutes())
        throw InvalidArgument("departure time lies outside the time grid");

    Trajectory out;
    out.links.reserve(path.links.size());
    double now = departure_minutes;
    for (auto link : path.links) {
        double remaining = network.links()[link].length_km;
        const double entry = now;
        while (remaining > 0.0) {
            const auto k = std::min(interval_at(now, dt), last);
            const double v = speeds.kmh(link, k);
            if (!(v > 0.0))
                throw ZeroSpeed("non-positive speed on link '" + network.links()[link].id + "'");
            const double boundary = k < last ? static_cast<double>(k + 1) * dt
                                             : std::numeric_limits<double>::infinity();
            const double reach_km = v * (boundary - now) / 60.0;
            if (remaining <= reach_km) {
                now += remaining / v * 60.0;
                remaining = 0.0;
            } else {
                remaining -= reach_km;
                now = boundary;
            }
        }
        out.links.push_back({link, entry, now});
    }
    out.truncated = now > speeds.horizon_minutes();
    return out;
}

double compute_dar(const TrafficNetwork& network, const Path& path, std::size_t link, std::size_t t,
                   std::size_t t_prime, const SpeedProfile& speeds, const DarOptions& options)
{
    const auto pos = std::find(path.links.begin(), path.links.end(), link);
    if (pos == path.links.end())
        return 0.0;
    if (options.samples_per_interval == 0)
        throw InvalidArgument("samples_per_interval must be at least 1");
    const auto idx = static_cast<std::size_t>(pos - path.links.begin());
    const auto n = options.samples_per_interval;
    const double dt = speeds.interval_minutes;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto trip = trajectory(network, path, departure_instant(t_prime, i, n, dt), speeds);
        credit_traversal(trip.links[idx], dt, speeds.intervals(), options.mode, [&](std::size_t tt, double w) {
            if (tt == t)
                total += w;
        });
    }
    return total / static_cast<double>(n);
}

DarTensor::DarTensor(std::size_t od_count, std::size_t intervals, std::vector<DarEntry> entries)
    : od_count_(od_count), intervals_(intervals), entries_(std::move(entries))
{
    auto key = [](const DarEntry& e) { return std::tie(e.od, e.path, e.t_prime, e.link, e.t); };
    std::sort(entries_.begin(), entries_.end(), [&](const DarEntry& a, const DarEntry& b) { return key(a) < key(b); });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.od >= od_count_ || e.t >= intervals_ || e.t_prime >= intervals_)
            throw DimensionMismatch("DAR entry out of range");
        if (!(e.ratio >= 0.0 && e.ratio <= 1.0 + 1e-12))
            throw InvalidArgument("DAR ratio outside [0, 1]");
        if (i > 0 && key(entries_[i - 1]) == key(e))
            throw InvalidArgument("duplicate DAR entry");
    }
}

std::span<const DarEntry> DarTensor::column(std::size_t od, std::size_t path, std::size_t t_prime) const
{
    auto col = [](const DarEntry& e) { return std::tuple<std::size_t, std::size_t, std::size_t>(e.od, e.path, e.t_prime); };
    const auto target = std::tuple<std::size_t, std::size_t, std::size_t>(od, path, t_prime);
    auto lo = std::lower_bound(entries_.begin(), entries_.end(), target,
                               [&](const DarEntry& e, const auto& k) { return col(e) < k; });
    auto hi = std::upper_bound(lo, entries_.end(), target, [&](const auto& k, const DarEntry& e) { return k < col(e); });
    return {entries_.data() + (lo - entries_.begin()), static_cast<std::size_t>(hi - lo)};
}

double DarTensor::ratio(std::size_t od, std::size_t path, std::size_t link, std::size_t t, std::size_t t_prime) const
{
    for (const auto& e : column(od, path, t_prime)) {
        if (e.link == link && e.t == t)
            return e.ratio;
    }
    return 0.0;
}

namespace {

std::vector<DarEntry> dar_for_od(const TrafficNetwork& network, const OdPair& od, std::uint32_t od_index,
                                 const SpeedProfile& speeds, const DarOptions& options)
{
    const auto n = options.samples_per_interval;
    const double dt = speeds.interval_minutes;
    const auto intervals = speeds.intervals();
    std::vector<DarEntry> out;
    std::vector<std::pair<std::uint64_t, double>> acc;
    for (std::size_t k = 0; k < od.paths.size(); ++k) {
        const auto& path = od.paths[k];
        for (std::size_t tp = 0; tp < intervals; ++tp) {
            acc.clear();
            for (std::size_t i = 0; i < n; ++i) {
                const auto trip = trajectory(network, path, departure_instant(tp, i, n, dt), speeds);
                for (const auto& tr : trip.links) {
                    credit_traversal(tr, dt, intervals, options.mode, [&](std::size_t t, double w) {
                        acc.emplace_back((static_cast<std::uint64_t>(tr.link) << 32) | t, w);
                    });
                }
            }
            std::stable_sort(acc.begin(), acc.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            for (std::size_t i = 0; i < acc.size();) {
                std::size_t j = i;
                double sum = 0.0;
                while (j < acc.size() && acc[j].first == acc[i].first)
                    sum += acc[j++].second;
                const double ratio = std::min(1.0, sum / static_cast<double>(n));
                if (ratio > 0.0) {
                    out.push_back(DarEntry{od_index, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(tp),
                                           static_cast<std::uint32_t>(acc[i].first >> 32),
                                           static_cast<std::uint32_t>(acc[i].first & 0xffffffffU), ratio});
                }
                i = j;
            }
        }
    }
    return out;
}

} // namespace

DarTensor compute_dar_tensor(const TrafficNetwork& network, std::span<const OdPair> od_pairs,
                             const SpeedProfile& speeds, const DarOptions& options)
{
    check_speeds(network, speeds);
    if (options.samples_per_interval == 0)
        throw InvalidArgument("samples_per_interval must be at least 1");

    std::vector<std::vector<DarEntry>> per_od(od_pairs.size());
    unsigned threads = options.threads ? options.threads : std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, od_pairs.size())));
    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < od_pairs.size(); i += step)
            per_od[i] = dar_for_od(network, od_pairs[i], static_cast<std::uint32_t>(i), speeds, options);
    };
    if (threads <= 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back(work, w, threads);
    }

    std::vector<DarEntry> entries;
    for (auto& v : per_od)
        entries.insert(entries.end(), v.begin(), v.end());
    return DarTensor(od_pairs.size(), speeds.intervals(), std::move(entries));
}

std::string dar_cache_key(const TrafficNetwork& network, std::span<const OdPair> od_pairs,
                          const SpeedProfile& speeds, const DarOptions& options)
{
    Digest d;
    d.add(network.digest());
    d.add(std::uint64_t{od_pairs.size()});
    for (const auto& od : od_pairs) {
        d.add(std::uint64_t{od.origin}).add(std::uint64_t{od.destination}).add(std::uint64_t{od.paths.size()});
        for (const auto& p : od.paths) {
            d.add(std::uint64_t{p.links.size()});
            for (auto l : p.links)
                d.add(std::uint64_t{l});
        }
    }
    d.add(std::uint64_t{speeds.kmh.rows}).add(std::uint64_t{speeds.kmh.cols}).add(speeds.interval_minutes);
    d.add(std::span<const double>(speeds.kmh.values));
    d.add(std::uint64_t{options.samples_per_interval}).add(static_cast<std::uint64_t>(options.mode));
    return d.hex();
}

std::vector<double> route_choice_portions(std::size_t path_count, RouteChoiceMode mode)
{
    if (path_count == 0)
        throw InvalidArgument("route choice needs at least one path");
    std::vector<double> p(path_count, 0.0);
    if (mode == RouteChoiceMode::Single)
        p[0] = 1.0;
    else
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(path_count));
    return p;
}

RouteChoice::RouteChoice(std::span<const OdPair> od_pairs, RouteChoiceMode mode)
{
    portions_.reserve(od_pairs.size());
    for (const auto& od : od_pairs)
        portions_.push_back(route_choice_portions(od.paths.size(), mode));
}

} // namespace dode
