#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pie/draws.hpp"
#include "pie/model.hpp"

namespace pie {

/// Coefficients used by simulate_linear: the first ceil(p/10) entries
/// alternate +1, -1; the rest are 0.
Vector linear_truth(std::size_t p);

/// Design entries independent uniform on {-1, +1}, y = X beta + N(0, 1) noise
/// with beta = linear_truth(p). Stream (seed, Data, 0).
ObservationSet simulate_linear(std::size_t n, std::size_t p, std::uint64_t seed);

/// n i.i.d. observations from a scalar family at theta0 (Poisson mean,
/// exponential rate, Bernoulli probability). Stream (seed, Data, 0).
ObservationSet simulate_univariate(Family family, double theta0, std::size_t n,
                                   std::uint64_t seed);

/// Reads the observation CSV: header row, column "y", optional columns
/// x1..xp. Parse errors name the 1-based line number.
ObservationSet load_csv(const std::filesystem::path& path);
ObservationSet parse_csv(const std::string& text, const std::string& source = "<memory>");

/// Writes an observation set in the format load_csv reads.
void write_observations_csv(const ObservationSet& data, const std::filesystem::path& path);

/// Draws CSV: header theta1..thetad, one row per draw.
void write_draws_csv(const DrawMatrix& draws, const std::filesystem::path& path);
DrawMatrix load_draws_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_double(double value);

/// Writes `contents` to `path`, throwing Io with the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace pie
