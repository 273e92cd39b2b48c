#pragma once

#include "viroclave/bytes.hpp"
#include "viroclave/quarantine.hpp"
#include "viroclave/scanner.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace viroclave {

/// 64-bit FNV-1a.
std::uint64_t fingerprint(ByteView bytes) noexcept;

inline constexpr std::size_t kDefaultHeadLength = 64;

struct FingerprintRecord {
    std::string id;
    std::uint64_t fingerprint = 0;
    Bytes head;
    std::size_t length = 0;

    bool operator==(const FingerprintRecord&) const = default;
};

/// Throws Error(RefusedInfected) unless the bytes scan clean.
FingerprintRecord record_snapshot(const std::string& id, ByteView bytes, const DefinitionSet& defs,
                                  std::size_t head_length = kDefaultHeadLength, const ScanConfig& config = {});

/// Put the recorded head back, cut to the recorded length, and return the
/// result only if its fingerprint matches. Throws Error(LengthUnderflow) or
/// Error(ReconstructionFailed).
Bytes reconstruct_and_verify(ByteView infected, const FingerprintRecord& record);

/// Snapshot directory: "index" with lines id|fingerprint_hex|length|head_hex.
void save_records(const std::filesystem::path& dir, const std::vector<FingerprintRecord>& records);
std::map<std::string, FingerprintRecord> load_records(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------

struct SyncResult {
    enum class Status { Updated, RejectedInfected };
    Status status = Status::Updated;
    std::uint64_t version = 0;  // Updated only
    std::string reason;         // verdict text when rejected

    bool updated() const noexcept { return status == Status::Updated; }
};

/// Mirror appliance: accepts a new copy only if it scans clean, so every
/// stored payload is a pre-infection restore point. Single writer, many readers.
class MirrorStore {
public:
    MirrorStore() = default;
    MirrorStore(const MirrorStore&) = delete;
    MirrorStore& operator=(const MirrorStore&) = delete;

    SyncResult sync(const std::string& id, ByteView bytes, const DefinitionSet& defs, const ScanConfig& config = {});
    /// Throws Error(NoBackup).
    Bytes restore(const std::string& id) const;

    std::optional<std::uint64_t> version(const std::string& id) const;
    std::vector<std::string> ids() const;

    /// Directory with "index" (id|version|fingerprint_hex) and one payload per id.
    void save(const std::filesystem::path& dir) const;
    static std::unique_ptr<MirrorStore> load(const std::filesystem::path& dir);

private:
    struct Slot {
        Bytes bytes;
        std::uint64_t version = 0;
    };
    mutable std::shared_mutex mutex_;
    std::map<std::string, Slot> slots_;
};

SyncResult mirror_sync(MirrorStore& store, const std::string& id, ByteView bytes, const DefinitionSet& defs);
Bytes mirror_restore(const MirrorStore& store, const std::string& id);

// ---------------------------------------------------------------------------

class BackupManifest;

enum class LockedOutcome {
    Unchanged,       // same fingerprint as the backup
    KeptCurrent,     // modified or new, scans clean
    Repaired,        // infected, repaired from definitions
    RestoredBackup,  // infected and not repairable: backup copy used
    Omitted,         // infected, no backup exists
    Recovered,       // missing from the current volume: backup copy used
};

std::string_view locked_outcome_name(LockedOutcome o) noexcept;

struct LockedFileReport {
    std::string id;
    LockedOutcome outcome = LockedOutcome::Unchanged;
    ScanVerdict verdict;
};

struct LockedRestore {
    std::map<std::string, Bytes> files;
    std::vector<LockedFileReport> report;
};

/// Files modified since the backup are scanned; clean edits survive, repairable
/// infections are repaired, everything else falls back to the backup copy or
/// is dropped when there is none.
LockedRestore locked_partition_restore(const BackupManifest& manifest, const std::map<std::string, Bytes>& current,
                                       const DefinitionSet& defs, const ScanConfig& config = {});

/// Full-copy backup held on the locked partition. Payload bytes are only
/// reachable through locked_partition_restore.
class BackupManifest {
public:
    static BackupManifest capture(UnixTime time, const std::map<std::string, Bytes>& files);

    UnixTime time() const noexcept { return time_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::optional<std::uint64_t> fingerprint_of(const std::string& id) const;

    /// Same index layout as save_records plus one payload file per id.
    void save(const std::filesystem::path& dir) const;
    static BackupManifest load(const std::filesystem::path& dir);

private:
    struct Entry {
        Bytes bytes;
        std::uint64_t fingerprint = 0;
    };
    UnixTime time_ = 0;
    std::map<std::string, Entry> entries_;

    friend LockedRestore locked_partition_restore(const BackupManifest&, const std::map<std::string, Bytes>&,
                                                  const DefinitionSet&, const ScanConfig&);
};

}  // namespace viroclave
