#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kgc {

using json = nlohmann::json;

/// Seeded random source with a portable integer draw.
///
/// std::uniform_int_distribution and std::shuffle are implementation-defined,
/// so every seeded split/sample in the toolkit goes through this wrapper to
/// keep manifests reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  /// Uniform real in [0, 1) with 53 bits of entropy.
  double uniform01();

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  /// First m elements of a uniformly random permutation of [0, n).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 mix of (seed, stream), for independent per-task streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Round half away from zero at the given number of decimals. A tiny nudge
/// absorbs binary representation error (e.g. 74.245 stored as 74.24499...).
double round_half_up(double value, int decimals);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Calls fn(line_number, parsed) for every non-blank line of a JSONL file.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& fn);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

}  // namespace kgc
