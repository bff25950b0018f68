#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace dbroute {

// ---------------------------------------------------------------------------
// Logging. Tiny stderr logger; levels: 0 silent, 1 warn, 2 info, 3 debug.
// ---------------------------------------------------------------------------
namespace logging {
void set_level(int level);
int level();
void warn(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);
} // namespace logging

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

// FNV-1a, 64-bit. Used for deterministic token hashing and seed derivation.
std::uint64_t fnv1a64(std::string_view data);

// Hex-encoded SHA-256 of `data` (lowercase hex, 64 chars).
std::string sha256_hex(std::string_view data);

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

std::string to_lower(std::string_view s);

// Trims and collapses internal whitespace runs to single spaces.
std::string normalize_ws(std::string_view s);

bool iequals(std::string_view a, std::string_view b);

// Case-insensitive substring test.
bool icontains(std::string_view haystack, std::string_view needle);

std::string trim(std::string_view s);

std::vector<std::string> split_lines(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// ---------------------------------------------------------------------------
// Deterministic randomness. std::shuffle / distributions are not pinned by
// the standard, so shuffling goes through an explicit Fisher-Yates with
// rejection sampling on mt19937_64 output (identical on every platform).
// ---------------------------------------------------------------------------

// Uniform integer in [0, n) by rejection sampling; n > 0.
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n);

template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(bounded_rand(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

// Seed derivation for per-key streams: seed XOR fnv1a64(key).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

// ---------------------------------------------------------------------------
// Bounded parallel map: applies fn to indices [0, n) on up to `parallelism`
// worker threads; results land at their input index. The first exception is
// rethrown after all workers join. parallelism <= 1 runs inline.
// ---------------------------------------------------------------------------
template <typename Result, typename Fn>
std::vector<Result> parallel_map(std::size_t n, int parallelism, Fn&& fn) {
    std::vector<Result> results(n);
    if (parallelism <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                results[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), n);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory, then renames into place.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace dbroute
