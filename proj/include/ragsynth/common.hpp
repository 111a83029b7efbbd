/// @file common.hpp
/// @brief Error categories, stable hashing, and seed fan-out shared by all modules.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ragsynth {

// Error categories aligned with CLI exit codes (0 success, 1 usage, 2 data, 3 gateway).
enum class ErrorKind { usage = 1, data = 2, gateway = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

struct GatewayError : Error {
    explicit GatewayError(const std::string& msg, int status = 0, int attempts = 0)
        : Error(ErrorKind::gateway, msg), status(status), attempts(attempts) {}
    int status;    // last HTTP status, 0 if transport-level
    int attempts;  // attempts made before giving up
};

// A rejected generation that callers may retry with a reseeded request before dropping.
struct GenerationRejected : DataError {
    using DataError::DataError;
};

// FNV-1a 64-bit. Used for request fingerprints, config hashes, and seed fan-out;
// stable across runs and platforms (std::hash makes no such promise).
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a64_u64(uint64_t v, uint64_t h = kFnvOffset) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= kFnvPrime;
    }
    return h;
}

// Child seed = hash(global seed, module name, item id [, index]). Gives every
// parallel work item an independent stream whose value does not depend on
// scheduling order.
inline uint64_t derive_seed(uint64_t global_seed, std::string_view module_name,
                            std::string_view item_id = {}, uint64_t index = 0) {
    uint64_t h = fnv1a64_u64(global_seed);
    h = fnv1a64(module_name, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(item_id, h);
    h = fnv1a64_u64(index, h);
    return h;
}

std::string hex64(uint64_t v);

}  // namespace ragsynth
