#include "viroclave/snapshots.hpp"

#include "viroclave/error.hpp"
#include "viroclave/repair.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <mutex>
#include <sstream>

namespace viroclave {

std::uint64_t fingerprint(ByteView bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x00000100000001B3ULL;
    }
    return h;
}

FingerprintRecord record_snapshot(const std::string& id, ByteView bytes, const DefinitionSet& defs,
                                  std::size_t head_length, const ScanConfig& config)
{
    const auto verdict = scan_file(bytes, defs, config);
    if (!verdict.is_clean()) throw Error(Errc::RefusedInfected, id + " scans " + verdict.describe());
    const auto n = std::min(head_length, bytes.size());
    return {id, fingerprint(bytes), Bytes(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n)), bytes.size()};
}

Bytes reconstruct_and_verify(ByteView infected, const FingerprintRecord& record)
{
    if (infected.size() < record.length) {
        throw Error(Errc::LengthUnderflow, record.id + ": file has " + std::to_string(infected.size()) +
                                               " bytes, record says " + std::to_string(record.length));
    }
    if (record.head.size() > record.length) {
        throw Error(Errc::ReconstructionFailed, record.id + ": record head longer than recorded length");
    }
    Bytes candidate(infected.begin(), infected.begin() + static_cast<std::ptrdiff_t>(record.length));
    std::copy(record.head.begin(), record.head.end(), candidate.begin());
    if (fingerprint(candidate) != record.fingerprint) {
        throw Error(Errc::ReconstructionFailed, record.id + ": fingerprint mismatch after reconstruction");
    }
    return candidate;
}

namespace {

constexpr const char* kIndexName = "index";

std::vector<std::string> split_bars(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const auto bar = line.find('|', pos);
        out.push_back(line.substr(pos, bar == std::string::npos ? bar : bar - pos));
        if (bar == std::string::npos) return out;
        pos = bar + 1;
    }
}

template <typename T>
T parse_number(const std::string& s, int base, std::size_t line)
{
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) throw ParseError(line, "bad number \"" + s + "\"");
    return v;
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream out;
    out << std::hex << v;
    return out.str();
}

void check_id(const std::string& id)
{
    if (id.empty() || id.find_first_of("|\n\r") != std::string::npos) {
        throw Error(Errc::InvalidParameters, "file id must be non-empty and free of '|' and newlines");
    }
}

/// Payload file name for an id: hex keeps arbitrary ids filesystem-safe.
std::string payload_name(const std::string& id)
{
    return to_hex(as_bytes(id)) + ".bin";
}

void write_text_atomic(const std::filesystem::path& dir, const std::string& name, const std::string& text)
{
    const auto tmp = dir / (name + ".tmp");
    write_file(tmp, as_bytes(text));
    std::filesystem::rename(tmp, dir / name);
}

template <typename F>
void for_each_index_line(const std::filesystem::path& dir, F&& f)
{
    std::ifstream in(dir / kIndexName);
    if (!in) throw Error(Errc::IoError, "cannot open " + (dir / kIndexName).string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        f(split_bars(line), line_no);
    }
}

FingerprintRecord parse_record(const std::vector<std::string>& f, std::size_t line)
{
    if (f.size() != 4) throw ParseError(line, "snapshot index needs 4 fields");
    auto head = from_hex(f[3]);
    if (!head) throw ParseError(line, "bad head hex");
    return {f[0], parse_number<std::uint64_t>(f[1], 16, line), std::move(*head),
            parse_number<std::size_t>(f[2], 10, line)};
}

std::string format_record(const FingerprintRecord& r)
{
    return r.id + "|" + hex64(r.fingerprint) + "|" + std::to_string(r.length) + "|" + to_hex(r.head) + "\n";
}

}  // namespace

void save_records(const std::filesystem::path& dir, const std::vector<FingerprintRecord>& records)
{
    std::filesystem::create_directories(dir);
    std::string text;
    for (const auto& r : records) {
        check_id(r.id);
        text += format_record(r);
    }
    write_text_atomic(dir, kIndexName, text);
}

std::map<std::string, FingerprintRecord> load_records(const std::filesystem::path& dir)
{
    std::map<std::string, FingerprintRecord> out;
    if (!std::filesystem::exists(dir / kIndexName)) return out;
    for_each_index_line(dir, [&](const std::vector<std::string>& f, std::size_t line) {
        auto r = parse_record(f, line);
        out.insert_or_assign(r.id, std::move(r));
    });
    return out;
}

// ---------------------------------------------------------------------------

SyncResult MirrorStore::sync(const std::string& id, ByteView bytes, const DefinitionSet& defs, const ScanConfig& config)
{
    check_id(id);
    const auto verdict = scan_file(bytes, defs, config);
    if (!verdict.is_clean()) return {SyncResult::Status::RejectedInfected, 0, verdict.describe()};
    std::unique_lock lock(mutex_);
    auto& slot = slots_[id];
    slot.bytes.assign(bytes.begin(), bytes.end());
    ++slot.version;
    return {SyncResult::Status::Updated, slot.version, {}};
}

Bytes MirrorStore::restore(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    const auto it = slots_.find(id);
    if (it == slots_.end()) throw Error(Errc::NoBackup, "no mirrored copy of " + id);
    return it->second.bytes;
}

std::optional<std::uint64_t> MirrorStore::version(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    const auto it = slots_.find(id);
    if (it == slots_.end()) return std::nullopt;
    return it->second.version;
}

std::vector<std::string> MirrorStore::ids() const
{
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : slots_) out.push_back(id);
    return out;
}

void MirrorStore::save(const std::filesystem::path& dir) const
{
    std::shared_lock lock(mutex_);
    std::filesystem::create_directories(dir);
    std::string text;
    for (const auto& [id, slot] : slots_) {
        write_file(dir / payload_name(id), slot.bytes);
        text += id + "|" + std::to_string(slot.version) + "|" + hex64(fingerprint(slot.bytes)) + "\n";
    }
    write_text_atomic(dir, kIndexName, text);
}

std::unique_ptr<MirrorStore> MirrorStore::load(const std::filesystem::path& dir)
{
    auto store = std::make_unique<MirrorStore>();
    if (!std::filesystem::exists(dir / kIndexName)) return store;
    for_each_index_line(dir, [&](const std::vector<std::string>& f, std::size_t line) {
        if (f.size() != 3) throw ParseError(line, "mirror index needs 3 fields");
        Slot slot{read_file(dir / payload_name(f[0])), parse_number<std::uint64_t>(f[1], 10, line)};
        if (fingerprint(slot.bytes) != parse_number<std::uint64_t>(f[2], 16, line)) {
            throw ParseError(line, "payload for " + f[0] + " does not match its fingerprint");
        }
        store->slots_.insert_or_assign(f[0], std::move(slot));
    });
    return store;
}

SyncResult mirror_sync(MirrorStore& store, const std::string& id, ByteView bytes, const DefinitionSet& defs)
{
    return store.sync(id, bytes, defs);
}

Bytes mirror_restore(const MirrorStore& store, const std::string& id)
{
    return store.restore(id);
}

// ---------------------------------------------------------------------------

std::string_view locked_outcome_name(LockedOutcome o) noexcept
{
    switch (o) {
    case LockedOutcome::Unchanged: return "Unchanged";
    case LockedOutcome::KeptCurrent: return "KeptCurrent";
    case LockedOutcome::Repaired: return "Repaired";
    case LockedOutcome::RestoredBackup: return "RestoredBackup";
    case LockedOutcome::Omitted: return "Omitted";
    case LockedOutcome::Recovered: return "Recovered";
    }
    return "?";
}

BackupManifest BackupManifest::capture(UnixTime time, const std::map<std::string, Bytes>& files)
{
    BackupManifest m;
    m.time_ = time;
    for (const auto& [id, bytes] : files) {
        check_id(id);
        m.entries_.emplace(id, Entry{bytes, fingerprint(bytes)});
    }
    return m;
}

std::optional<std::uint64_t> BackupManifest::fingerprint_of(const std::string& id) const
{
    const auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second.fingerprint;
}

void BackupManifest::save(const std::filesystem::path& dir) const
{
    std::filesystem::create_directories(dir);
    std::string text = "# time " + std::to_string(time_) + "\n";
    for (const auto& [id, e] : entries_) {
        write_file(dir / payload_name(id), e.bytes);
        const auto n = std::min(kDefaultHeadLength, e.bytes.size());
        text += format_record({id, e.fingerprint, Bytes(e.bytes.begin(), e.bytes.begin() + static_cast<std::ptrdiff_t>(n)),
                               e.bytes.size()});
    }
    write_text_atomic(dir, kIndexName, text);
}

BackupManifest BackupManifest::load(const std::filesystem::path& dir)
{
    BackupManifest m;
    {
        std::ifstream in(dir / kIndexName);
        std::string first;
        if (std::getline(in, first) && first.rfind("# time ", 0) == 0) {
            m.time_ = parse_number<UnixTime>(first.substr(7), 10, 1);
        }
    }
    for_each_index_line(dir, [&](const std::vector<std::string>& f, std::size_t line) {
        const auto r = parse_record(f, line);
        Entry e{read_file(dir / payload_name(r.id)), r.fingerprint};
        if (fingerprint(e.bytes) != r.fingerprint || e.bytes.size() != r.length) {
            throw ParseError(line, "payload for " + r.id + " does not match the index");
        }
        m.entries_.insert_or_assign(r.id, std::move(e));
    });
    return m;
}

LockedRestore locked_partition_restore(const BackupManifest& manifest, const std::map<std::string, Bytes>& current,
                                       const DefinitionSet& defs, const ScanConfig& config)
{
    LockedRestore out;
    for (const auto& [id, e] : manifest.entries_) out.files.emplace(id, e.bytes);

    for (const auto& [id, bytes] : current) {
        const auto backup = manifest.entries_.find(id);
        const bool has_backup = backup != manifest.entries_.end();
        LockedFileReport report{id, LockedOutcome::Unchanged, {}};
        if (has_backup && backup->second.fingerprint == fingerprint(bytes)) {
            out.report.push_back(std::move(report));
            continue;
        }

        report.verdict = scan_file(bytes, defs, config);
        std::optional<Bytes> replacement;
        if (report.verdict.is_clean()) {
            replacement = bytes;
            report.outcome = LockedOutcome::KeptCurrent;
        } else if (report.verdict.is_infected() && report.verdict.repairable) {
            try {
                auto repaired = repair_file(bytes, defs, config).repaired;
                if (scan_file(repaired, defs, config).is_clean()) {
                    replacement = std::move(repaired);
                    report.outcome = LockedOutcome::Repaired;
                }
            } catch (const Error&) {
            }
        }

        if (replacement) {
            out.files.insert_or_assign(id, std::move(*replacement));
        } else if (has_backup) {
            report.outcome = LockedOutcome::RestoredBackup;  // already seeded from the manifest
        } else {
            report.outcome = LockedOutcome::Omitted;
        }
        out.report.push_back(std::move(report));
    }

    for (const auto& [id, _] : manifest.entries_) {
        if (current.count(id) == 0) out.report.push_back({id, LockedOutcome::Recovered, {}});
    }
    return out;
}

}  // namespace viroclave
