#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace dode {

/// 64-bit FNV-1a accumulator for content digests (cache keys, headers).
class Digest {
public:
    Digest& add(std::string_view bytes) noexcept;
    Digest& add(double value) noexcept;
    Digest& add(std::uint64_t value) noexcept;
    Digest& add(std::span<const double> values) noexcept;

    std::uint64_t value() const noexcept { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

/// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);

/// Parses a full string as a double; throws ParseError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seeded generator whose draws are identical across standard libraries
/// (std distributions are implementation-defined, the engine is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t index(std::uint64_t n);
    /// Standard normal deviate (Box-Muller).
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace dode
