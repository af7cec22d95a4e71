#pragma once

#include <span>

namespace dode {

inline constexpr double kEarthRadiusKm = 6371.0;

struct LatLon {
    double lat = 0.0; ///< decimal degrees, [-90, 90]
    double lon = 0.0; ///< decimal degrees, [-180, 180]
};

bool valid_position(const LatLon& p) noexcept;

/// Great-circle (haversine) distance in kilometers on a sphere of radius kEarthRadiusKm.
double haversine_km(const LatLon& a, const LatLon& b) noexcept;

/// Sum of great-circle distances between consecutive points.
double polyline_length_km(std::span<const LatLon> points) noexcept;

} // namespace dode
