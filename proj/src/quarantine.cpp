#include "viroclave/quarantine.hpp"

#include "viroclave/error.hpp"
#include "viroclave/toyimage.hpp"

#include <charconv>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

namespace viroclave {

Bytes scramble(ByteView bytes, std::uint64_t key)
{
    if (key == 0) throw Error(Errc::ZeroKey, "scramble key must be nonzero");
    Bytes out(bytes.begin(), bytes.end());
    std::uint64_t state = key;
    for (auto& b : out) {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        b ^= static_cast<std::uint8_t>(state * 0x2545F4914F6CDD1DULL);
    }
    return out;
}

namespace {

bool parses_as_any_format(ByteView bytes)
{
    const auto ok = [&](auto parse) {
        try {
            parse(bytes);
            return true;
        } catch (const Error&) {
            return false;
        }
    };
    return ok(parse_executable) || ok(parse_document) || ok(parse_email);
}

std::string index_safe(std::string s)
{
    for (auto& c : s) {
        if (c == '|' || c == '\n' || c == '\r') c = '_';
    }
    return s;
}

constexpr const char* kIndexName = "index";

}  // namespace

Vault::Vault(std::chrono::seconds retention, std::uint64_t seed) : retention_(retention), rng_(seed) {}

QuarantineEntry Vault::add(const std::string& name, ByteView bytes, const std::string& virus_name, UnixTime now)
{
    std::unique_lock lock(mutex_);
    QuarantineEntry e;
    do {
        std::ostringstream id;
        id << std::hex << rng_();
        e.id = id.str();
    } while (entries_.count(e.id) != 0);

    e.original_name = index_safe(name);
    std::string stem = index_safe(std::filesystem::path(name).stem().string());
    if (stem.empty()) stem = "payload";
    std::set<std::string> taken;
    for (const auto& [_, other] : entries_) taken.insert(other.stored_name);
    e.stored_name = stem + ".vbin";
    for (int n = 2; taken.count(e.stored_name) != 0; ++n) e.stored_name = stem + "~" + std::to_string(n) + ".vbin";

    e.virus = index_safe(virus_name);
    e.quarantined_at = now;
    do {
        e.key = rng_();
        if (e.key == 0) continue;
        e.scrambled = scramble(bytes, e.key);
    } while (e.key == 0 || parses_as_any_format(e.scrambled));

    entries_.emplace(e.id, e);
    return e;
}

Bytes Vault::restore(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(id);
    if (it == entries_.end()) throw Error(Errc::UnknownId, id);
    return scramble(it->second.scrambled, it->second.key);
}

std::size_t Vault::purge_expired(UnixTime now)
{
    std::unique_lock lock(mutex_);
    return std::erase_if(entries_, [&](const auto& kv) { return now - kv.second.quarantined_at > retention_.count(); });
}

std::vector<QuarantineEntry> Vault::entries() const
{
    std::shared_lock lock(mutex_);
    std::vector<QuarantineEntry> out;
    for (const auto& [_, e] : entries_) out.push_back(e);
    return out;
}

std::optional<QuarantineEntry> Vault::find(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::size_t Vault::size() const
{
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void Vault::save(const std::filesystem::path& dir) const
{
    namespace fs = std::filesystem;
    std::shared_lock lock(mutex_);
    fs::create_directories(dir);
    std::ostringstream index;
    std::set<std::string> live;
    for (const auto& [id, e] : entries_) {
        write_file(dir / e.stored_name, e.scrambled);
        live.insert(e.stored_name);
        std::ostringstream key;
        key << std::hex << e.key;
        index << e.id << '|' << e.original_name << '|' << e.stored_name << '|' << key.str() << '|' << e.virus << '|'
              << e.quarantined_at << '\n';
    }
    const auto text = index.str();
    const auto tmp = dir / (std::string(kIndexName) + ".tmp");
    write_file(tmp, as_bytes(text));
    fs::rename(tmp, dir / kIndexName);
    for (const auto& f : fs::directory_iterator(dir)) {
        if (f.path().extension() == ".vbin" && live.count(f.path().filename().string()) == 0) fs::remove(f.path());
    }
}

void Vault::insert_locked(QuarantineEntry entry)
{
    const auto id = entry.id;
    if (!entries_.emplace(id, std::move(entry)).second) throw Error(Errc::ParseError, "duplicate vault id " + id);
}

std::unique_ptr<Vault> Vault::load(const std::filesystem::path& dir, std::chrono::seconds retention)
{
    auto vault = std::make_unique<Vault>(retention);
    const auto index_path = dir / kIndexName;
    if (!std::filesystem::exists(index_path)) return vault;

    std::ifstream in(index_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string item; std::getline(ss, item, '|');) f.push_back(item);
        if (f.size() != 6) throw ParseError(line_no, "vault index needs 6 fields");
        QuarantineEntry e;
        e.id = f[0];
        e.original_name = f[1];
        e.stored_name = f[2];
        const auto [p1, ec1] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), e.key, 16);
        const auto [p2, ec2] = std::from_chars(f[5].data(), f[5].data() + f[5].size(), e.quarantined_at);
        if (ec1 != std::errc{} || ec2 != std::errc{} || e.key == 0) throw ParseError(line_no, "bad key or timestamp");
        e.virus = f[4];
        e.scrambled = read_file(dir / e.stored_name);
        vault->insert_locked(std::move(e));
    }
    return vault;
}

QuarantineEntry quarantine_add(Vault& vault, const std::string& name, ByteView bytes, const std::string& virus_name,
                               UnixTime now)
{
    return vault.add(name, bytes, virus_name, now);
}

Bytes quarantine_restore(const Vault& vault, const std::string& id)
{
    return vault.restore(id);
}

std::size_t purge_expired(Vault& vault, UnixTime now)
{
    return vault.purge_expired(now);
}

}  // namespace viroclave
