#pragma once

#include "viroclave/bytes.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

namespace viroclave {

/// XOR with an xorshift64* keystream seeded by `key`:
///   s ^= s >> 12; s ^= s << 25; s ^= s >> 27; ks = low byte of (s * 0x2545F4914F6CDD1D)
/// Self-inverse. Throws Error(ZeroKey).
Bytes scramble(ByteView bytes, std::uint64_t key);

using UnixTime = std::int64_t;

struct QuarantineEntry {
    std::string id;
    std::string original_name;
    std::string stored_name;  // original stem + ".vbin"
    std::uint64_t key = 0;
    std::string virus;
    UnixTime quarantined_at = 0;
    Bytes scrambled;
};

inline constexpr std::chrono::seconds kDefaultRetention = std::chrono::hours(24 * 30);

/// Virus bin. Add and purge take the lock exclusively; restores and listing
/// share it.
///
/// On disk a vault is a directory holding one <stored_name> payload per entry
/// and an "index" file with lines id|original_name|stored_name|key_hex|virus|unix_time.
class Vault {
public:
    explicit Vault(std::chrono::seconds retention = kDefaultRetention, std::uint64_t seed = std::random_device{}());

    Vault(const Vault&) = delete;
    Vault& operator=(const Vault&) = delete;

    /// Scrambles under a fresh random key (redrawn until the payload fails all
    /// three format parsers) and files it under a ".vbin" name.
    QuarantineEntry add(const std::string& name, ByteView bytes, const std::string& virus_name, UnixTime now);

    /// Unscrambled original bytes; the entry stays in the vault. Throws Error(UnknownId).
    Bytes restore(const std::string& id) const;

    /// Drops entries older than the retention period (strictly greater). Returns the count.
    std::size_t purge_expired(UnixTime now);

    std::vector<QuarantineEntry> entries() const;
    std::optional<QuarantineEntry> find(const std::string& id) const;
    std::size_t size() const;
    std::chrono::seconds retention() const noexcept { return retention_; }

    void save(const std::filesystem::path& dir) const;
    static std::unique_ptr<Vault> load(const std::filesystem::path& dir, std::chrono::seconds retention = kDefaultRetention);

private:
    void insert_locked(QuarantineEntry entry);

    std::chrono::seconds retention_;
    mutable std::shared_mutex mutex_;
    std::mt19937_64 rng_;
    std::map<std::string, QuarantineEntry> entries_;
};

/// Free-function spellings of the vault operations.
QuarantineEntry quarantine_add(Vault& vault, const std::string& name, ByteView bytes, const std::string& virus_name,
                               UnixTime now);
Bytes quarantine_restore(const Vault& vault, const std::string& id);
std::size_t purge_expired(Vault& vault, UnixTime now);

}  // namespace viroclave
