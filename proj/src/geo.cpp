#include "dode/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dode {

namespace {
constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
} // namespace

bool valid_position(const LatLon& p) noexcept
{
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0
        && p.lon >= -180.0 && p.lon <= 180.0;
}

double haversine_km(const LatLon& a, const LatLon& b) noexcept
{
    const double phi1 = deg2rad(a.lat);
    const double phi2 = deg2rad(b.lat);
    const double dphi = phi2 - phi1;
    const double dlambda = deg2rad(b.lon - a.lon);
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double polyline_length_km(std::span<const LatLon> points) noexcept
{
    double total = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        total += haversine_km(points[i - 1], points[i]);
    return total;
}

} // namespace dode
