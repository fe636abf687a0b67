#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

namespace allabel {

/// 64-bit FNV-1a. Used wherever a hash must be stable across runs and
/// platforms (prompt hashes, simulator noise streams).
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Lowercase 16-digit hex of a 64-bit value.
std::string hex64(std::uint64_t value);

/// SplitMix64 finaliser; maps any 64-bit value to a well-mixed one.
std::uint64_t mix64(std::uint64_t x);

/// Uniform double in [0, 1) from a 64-bit value.
double unit_interval(std::uint64_t bits);

/// Uniform integer in [0, n) from a 64-bit engine. Rejection-sampled so the
/// result only depends on the engine's raw output, not on the standard
/// library's distribution implementation.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename, so readers never observe a
/// partially written file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace allabel
