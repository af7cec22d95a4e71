#include "dode/util.hpp"

#include "dode/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace dode {

Digest& Digest::add(std::string_view bytes) noexcept
{
    for (unsigned char c : bytes) {
        state_ ^= c;
        state_ *= 0x100000001b3ULL;
    }
    // field separator so that ("ab","c") and ("a","bc") differ
    state_ ^= 0xff;
    state_ *= 0x100000001b3ULL;
    return *this;
}

Digest& Digest::add(std::uint64_t value) noexcept
{
    for (int i = 0; i < 8; ++i) {
        state_ ^= (value >> (8 * i)) & 0xffU;
        state_ *= 0x100000001b3ULL;
    }
    return *this;
}

Digest& Digest::add(double value) noexcept
{
    return add(std::bit_cast<std::uint64_t>(value));
}

Digest& Digest::add(std::span<const double> values) noexcept
{
    add(static_cast<std::uint64_t>(values.size()));
    for (double v : values)
        add(v);
    return *this;
}

std::string Digest::hex() const
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

std::string format_double(double value)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc())
        return "nan";
    return std::string(buf, ptr);
}

double parse_double(std::string_view text, std::string_view what)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    return value;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double Rng::uniform()
{
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::index(std::uint64_t n)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
        r = next();
    } while (r >= limit);
    return r % n;
}

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(theta);
    has_spare_ = true;
    return radius * std::cos(theta);
}

} // namespace dode
