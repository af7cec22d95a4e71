#pragma once

#include "dode/network.hpp"
#include "dode/table.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dode {

/// Per-link, per-interval speeds in km/h; constant within an interval.
struct SpeedProfile {
    Table kmh; ///< [link][interval]
    double interval_minutes = 5.0;

    std::size_t intervals() const noexcept { return kmh.cols; }
    double horizon_minutes() const noexcept { return static_cast<double>(kmh.cols) * interval_minutes; }
};

struct LinkTraversal {
    std::size_t link = 0;
    double entry_minutes = 0.0;
    double exit_minutes = 0.0;
};

struct Trajectory {
    std::vector<LinkTraversal> links;
    /// The trip ends after the horizon; times past it use the last interval's speed.
    bool truncated = false;
};

/// Traces one vehicle along `path`, switching speed at interval boundaries.
Trajectory trajectory(const TrafficNetwork& network, const Path& path, double departure_minutes,
                      const SpeedProfile& speeds);

/// What "arrives at link a within interval t" counts.
enum class DarMode {
    TimeWeighted, ///< share of the vehicle's dwell on the link that falls in t (sums to 1 over t)
    AnyOverlap,   ///< 1 when [entry, exit) intersects t
    Entry,        ///< 1 when the entry instant falls in t
};

struct DarOptions {
    std::size_t samples_per_interval = 16;
    DarMode mode = DarMode::TimeWeighted;
    unsigned threads = 0; ///< 0 = hardware concurrency
};

/// Portion of path flow departing in t_prime that is on `link` during t,
/// averaged over midpoint-stratified departure instants in t_prime.
double compute_dar(const TrafficNetwork& network, const Path& path, std::size_t link, std::size_t t,
                   std::size_t t_prime, const SpeedProfile& speeds, const DarOptions& options = {});

struct DarEntry {
    std::uint32_t od = 0;
    std::uint32_t path = 0;
    std::uint32_t t_prime = 0;
    std::uint32_t link = 0;
    std::uint32_t t = 0;
    double ratio = 0.0;

    bool operator==(const DarEntry&) const = default;
};

/// Sparse rho(od, path, link, t, t') with only nonzero ratios stored,
/// sorted by (od, path, t', link, t).
class DarTensor {
public:
    DarTensor() = default;
    DarTensor(std::size_t od_count, std::size_t intervals, std::vector<DarEntry> entries);

    std::span<const DarEntry> entries() const noexcept { return entries_; }
    std::size_t od_count() const noexcept { return od_count_; }
    std::size_t intervals() const noexcept { return intervals_; }

    /// Entries for one departure column (od, path, t').
    std::span<const DarEntry> column(std::size_t od, std::size_t path, std::size_t t_prime) const;
    double ratio(std::size_t od, std::size_t path, std::size_t link, std::size_t t, std::size_t t_prime) const;

    bool operator==(const DarTensor&) const = default;

private:
    std::size_t od_count_ = 0;
    std::size_t intervals_ = 0;
    std::vector<DarEntry> entries_;
};

DarTensor compute_dar_tensor(const TrafficNetwork& network, std::span<const OdPair> od_pairs,
                             const SpeedProfile& speeds, const DarOptions& options = {});

/// Cache key over network, retained paths, speed profile and sampling configuration.
std::string dar_cache_key(const TrafficNetwork& network, std::span<const OdPair> od_pairs,
                          const SpeedProfile& speeds, const DarOptions& options);

enum class RouteChoiceMode {
    Single,  ///< all demand on the first retained path
    Uniform, ///< equal split over retained shortest paths
};

std::vector<double> route_choice_portions(std::size_t path_count, RouteChoiceMode mode);

/// p_rs^k(t); time-invariant under both modes.
class RouteChoice {
public:
    RouteChoice() = default;
    RouteChoice(std::span<const OdPair> od_pairs, RouteChoiceMode mode);

    double probability(std::size_t od, std::size_t path, std::size_t /*interval*/) const
    {
        return portions_[od][path];
    }
    const std::vector<double>& portions(std::size_t od) const { return portions_[od]; }
    std::size_t od_count() const noexcept { return portions_.size(); }

private:
    std::vector<std::vector<double>> portions_;
};

} // namespace dode
