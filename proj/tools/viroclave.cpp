// viroclave: command-line front end over the library.
//
// Exit codes: 0 nothing infected / success, 1 infections found (or a
// scenario assertion failed), 2 usage, I/O or parse errors.
#include "viroclave/emucleaner.hpp"
#include "viroclave/error.hpp"
#include "viroclave/infectors.hpp"
#include "viroclave/pipeline.hpp"
#include "viroclave/quarantine.hpp"
#include "viroclave/repair.hpp"
#include "viroclave/scanner.hpp"
#include "viroclave/scenario.hpp"
#include "viroclave/snapshots.hpp"
#include "viroclave/syssim.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace viroclave;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitInfected = 1;
constexpr int kExitError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

DefinitionSet load_defs(const std::string& flag)
{
    std::string path = flag;
    if (path.empty()) {
        if (const char* env = std::getenv("VIROCLAVE_DEFS")) path = env;
    }
    if (path.empty()) throw UsageError("no definitions: pass --defs or set VIROCLAVE_DEFS");
    return load_definitions_file(path);
}

UnixTime now_or(std::optional<UnixTime> t)
{
    return t ? *t : static_cast<UnixTime>(std::time(nullptr));
}

/// Id of `file` below `root`: the relative path, or the file name when root is the file.
std::string relative_id(const fs::path& root, const fs::path& file)
{
    if (fs::is_regular_file(root)) return file.filename().generic_string();
    return fs::relative(file, root).generic_string();
}

struct Options {
    std::string defs;
    // scan / clean
    std::string path;
    std::string report = "text";
    unsigned jobs = 1;
    std::string policy = "repair,quarantine,delete";
    std::string dangerous_policy = "delete,quarantine";
    bool heuristic = false;
    std::uint64_t budget = kDefaultBudget;
    std::string vault_dir;
    std::string snapshots_dir;
    std::optional<UnixTime> now;
    // infect / make-program
    std::string virus;
    std::uint64_t seed = 1;
    std::string output;
    std::size_t size = 1000;
    std::size_t cavity = 0;
    // quarantine
    std::vector<std::string> files;
    std::string id;
    bool keep = false;
    double retention_days = 30;
    // snapshot / mirror
    std::string dir;
    std::string store;
    // sim / bootfix
    std::string script;
    std::string disk;
    std::string sector;
};

void add_defs(CLI::App* cmd, Options& o)
{
    cmd->add_option("--defs", o.defs, "Definition database (default: $VIROCLAVE_DEFS)");
}

// ---------------------------------------------------------------------------

int cmd_defs_list(const Options& o)
{
    const auto defs = load_defs(o.path.empty() ? o.defs : o.path);
    for (const auto& d : defs) {
        std::cout << d.name << '\t' << kind_name(d.kind) << '\t'
                  << (d.body_len ? std::to_string(*d.body_len) : "?") << '\t' << to_hex(d.signature)
                  << (d.memory_resident ? "\tresident" : "") << (d.dangerous ? "\tdangerous" : "")
                  << (d.triz_tag.empty() ? "" : "\t[" + d.triz_tag + "]") << '\n';
    }
    return kExitClean;
}

int cmd_defs_check(const Options& o)
{
    const auto defs = load_defs(o.path.empty() ? o.defs : o.path);
    std::cout << "ok: " << defs.size() << " definitions\n";
    return kExitClean;
}

int cmd_infect(const Options& o)
{
    const auto defs = load_defs(o.defs);
    const auto* defn = defs.find(o.virus);
    if (!defn) throw Error(Errc::UnknownVirus, o.virus);
    const auto bytes = read_file(o.path);
    Bytes out;
    if (defn->kind == VirusKind::MacroVirus) {
        out = serialize_document(infect_document(parse_document(bytes), *defn));
    } else {
        const auto inf = infect(parse_executable(bytes), *defn, o.seed);
        out = serialize_executable(inf.image);
        std::cerr << "infected " << o.path << " with " << defn->name << ": " << inf.record.original_len << " -> "
                  << inf.image.code.size() << " code bytes, body at " << inf.record.body_start << '\n';
    }
    write_file(o.output.empty() ? fs::path(o.path) : fs::path(o.output), out);
    return kExitClean;
}

int cmd_make_program(const Options& o)
{
    const auto img = o.cavity ? generate_cavity_host(o.size, o.cavity, o.seed) : generate_program(o.size, o.seed);
    write_file(o.path, serialize_executable(img));
    return kExitClean;
}

void emit_report(const Options& o, const FileReport& r)
{
    std::cout << (o.report == "json" ? report_json(r) : report_text(r)) << '\n' << std::flush;
}

int finish_report(const Options& o, const ReportSummary& s)
{
    std::cout << (o.report == "json" ? summary_json(s) : summary_text(s)) << '\n';
    if (s.errors) return kExitError;
    return s.infected + s.suspicious ? kExitInfected : kExitClean;
}

int cmd_scan(const Options& o)
{
    const auto defs = load_defs(o.defs);
    ReportSummary summary;
    for_each_file(
        collect_files(o.path), o.jobs, [&](const fs::path& p) { return scan_path(p, defs); },
        [&](const FileReport& r) {
            summary.add(r);
            emit_report(o, r);
        });
    return finish_report(o, summary);
}

int cmd_clean(const Options& o)
{
    const auto defs = load_defs(o.defs);
    CleanOptions opt;
    opt.policy = DispositionPolicy::parse(o.policy, o.dangerous_policy);
    opt.heuristic = o.heuristic;
    opt.heuristic_options.budget = o.budget;
    opt.now = now_or(o.now);
    if (!o.snapshots_dir.empty()) opt.records = load_records(o.snapshots_dir);
    std::unique_ptr<Vault> vault;
    if (!o.vault_dir.empty()) {
        vault = Vault::load(o.vault_dir);
        opt.vault = vault.get();
    }

    ReportSummary summary;
    for_each_file(
        collect_files(o.path), o.jobs, [&](const fs::path& p) { return clean_path(p, defs, opt); },
        [&](const FileReport& r) {
            summary.add(r);
            emit_report(o, r);
        });
    if (vault) vault->save(o.vault_dir);
    return finish_report(o, summary);
}

// ---------------------------------------------------------------------------

std::chrono::seconds retention_of(const Options& o)
{
    return std::chrono::seconds(static_cast<std::int64_t>(o.retention_days * 86400));
}

int cmd_quarantine_add(const Options& o)
{
    std::optional<DefinitionSet> defs;
    if (o.virus.empty()) defs = load_defs(o.defs);
    auto vault = Vault::load(o.vault_dir, retention_of(o));
    const auto now = now_or(o.now);
    for (const auto& f : o.files) {
        const auto bytes = read_file(f);
        std::string virus = o.virus;
        if (virus.empty()) {
            const auto v = scan_file(bytes, *defs);
            virus = v.is_infected() ? v.virus : v.is_suspicious() ? "suspicious" : "unknown";
        }
        const auto e = vault->add(fs::path(f).filename().string(), bytes, virus, now);
        std::cout << e.id << '\t' << e.stored_name << '\t' << e.virus << '\n';
        if (!o.keep) fs::remove(f);
    }
    vault->save(o.vault_dir);
    return kExitClean;
}

int cmd_quarantine_list(const Options& o)
{
    const auto vault = Vault::load(o.vault_dir, retention_of(o));
    for (const auto& e : vault->entries()) {
        std::cout << e.id << '\t' << e.original_name << '\t' << e.stored_name << '\t' << e.virus << '\t'
                  << e.quarantined_at << '\n';
    }
    return kExitClean;
}

int cmd_quarantine_restore(const Options& o)
{
    const auto vault = Vault::load(o.vault_dir, retention_of(o));
    const auto e = vault->find(o.id);
    if (!e) throw Error(Errc::UnknownId, o.id);
    const fs::path out = o.output.empty() ? fs::path(e->original_name).filename() : fs::path(o.output);
    write_file(out, vault->restore(o.id));
    std::cerr << "restored " << o.id << " to " << out.string() << " (still infected with " << e->virus << ")\n";
    return kExitClean;
}

int cmd_quarantine_purge(const Options& o)
{
    auto vault = Vault::load(o.vault_dir, retention_of(o));
    const auto n = vault->purge_expired(now_or(o.now));
    vault->save(o.vault_dir);
    std::cout << "purged " << n << ", kept " << vault->size() << '\n';
    return kExitClean;
}

// ---------------------------------------------------------------------------

int cmd_snapshot_record(const Options& o)
{
    const auto defs = load_defs(o.defs);
    auto existing = load_records(o.dir);
    int refused = 0;
    for (const auto& f : collect_files(o.path)) {
        const auto id = f.filename().string();
        try {
            existing.insert_or_assign(id, record_snapshot(id, read_file(f), defs));
            std::cout << "recorded " << id << '\n';
        } catch (const Error& e) {
            if (e.code() != Errc::RefusedInfected) throw;
            std::cout << "refused " << id << ": " << e.what() << '\n';
            ++refused;
        }
    }
    std::vector<FingerprintRecord> records;
    for (auto& [_, r] : existing) records.push_back(std::move(r));
    save_records(o.dir, records);
    return refused ? kExitInfected : kExitClean;
}

int cmd_snapshot_repair(const Options& o)
{
    const auto records = load_records(o.dir);
    const auto id = fs::path(o.path).filename().string();
    const auto it = records.find(id);
    if (it == records.end()) throw Error(Errc::NoBackup, "no fingerprint record for " + id);
    const auto out = reconstruct_and_verify(read_file(o.path), it->second);
    write_file(o.output.empty() ? fs::path(o.path) : fs::path(o.output), out);
    std::cout << "reconstructed " << id << " (" << out.size() << " bytes, fingerprint verified)\n";
    return kExitClean;
}

int cmd_mirror_sync(const Options& o)
{
    const auto defs = load_defs(o.defs);
    auto store = MirrorStore::load(o.store);
    int rejected = 0;
    for (const auto& f : collect_files(o.path)) {
        const auto id = relative_id(o.path, f);
        const auto r = store->sync(id, read_file(f), defs);
        if (r.updated()) {
            std::cout << "updated " << id << " v" << r.version << '\n';
        } else {
            std::cout << "rejected " << id << ": " << r.reason << '\n';
            ++rejected;
        }
    }
    store->save(o.store);
    return rejected ? kExitInfected : kExitClean;
}

int cmd_mirror_restore(const Options& o)
{
    const auto store = MirrorStore::load(o.store);
    const auto bytes = store->restore(o.id);
    write_file(o.output.empty() ? fs::path(o.id).filename() : fs::path(o.output), bytes);
    std::cout << "restored " << o.id << " v" << *store->version(o.id) << '\n';
    return kExitClean;
}

// ---------------------------------------------------------------------------

int print_scenario(const ScenarioResult& r)
{
    for (const auto& line : r.transcript) std::cout << line << '\n';
    for (const auto& a : r.assertions) {
        std::cout << (a.passed ? "PASS" : "FAIL") << " line " << a.line << ": " << a.text;
        if (!a.passed) std::cout << " (actual " << a.actual << ")";
        std::cout << '\n';
    }
    return r.all_passed() ? kExitClean : kExitInfected;
}

int cmd_sim_memres(const Options& o)
{
    const auto defs = load_defs(o.defs);
    const auto text = to_string(read_file(o.script));
    return print_scenario(run_memres_scenario(text, defs, fs::path(o.script).parent_path()));
}

int cmd_sim_recovery(const Options& o)
{
    return print_scenario(run_recovery_scenario(to_string(read_file(o.script))));
}

int cmd_bootfix(const Options& o)
{
    const auto disk = DiskImage::parse(read_file(o.disk));
    const auto fixed = repair_boot_sector(disk, read_file(o.sector));
    write_file(o.output.empty() ? fs::path(o.disk) : fs::path(o.output), fixed.serialize());
    std::cout << "boot sector replaced; " << fixed.data.size() << " data bytes untouched\n";
    return kExitClean;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"viroclave: toy antivirus scanner, cleaner and recovery simulator"};
    app.require_subcommand(1);
    Options o;
    std::function<int(const Options&)> run;
    const auto on = [&](CLI::App* cmd, int (*fn)(const Options&)) {
        cmd->callback([&run, fn] { run = fn; });
    };

    auto* defs = app.add_subcommand("defs", "Inspect a definition database");
    defs->require_subcommand(1);
    auto* defs_list = defs->add_subcommand("list", "List definitions");
    auto* defs_check = defs->add_subcommand("check", "Validate a database");
    for (auto* c : {defs_list, defs_check}) {
        c->add_option("db", o.path, "Database file (default: --defs or $VIROCLAVE_DEFS)");
        add_defs(c, o);
    }
    on(defs_list, cmd_defs_list);
    on(defs_check, cmd_defs_check);

    auto* inf = app.add_subcommand("infect", "Infect a lab file with a known virus");
    inf->add_option("file", o.path)->required();
    inf->add_option("--virus", o.virus, "Definition name")->required();
    inf->add_option("--seed", o.seed, "Filler seed");
    inf->add_option("-o,--output", o.output, "Write here instead of in place");
    add_defs(inf, o);
    on(inf, cmd_infect);

    auto* mk = app.add_subcommand("make-program", "Write a generated clean executable");
    mk->add_option("file", o.path)->required();
    mk->add_option("--size", o.size, "Code bytes")->check(CLI::Range(1, 65535));
    mk->add_option("--seed", o.seed);
    mk->add_option("--cavity", o.cavity, "Leave a zero-filled gap of this many bytes");
    on(mk, cmd_make_program);

    auto* scan = app.add_subcommand("scan", "Scan a file or directory");
    scan->add_option("path", o.path)->required();
    scan->add_option("--report", o.report)->check(CLI::IsMember({"json", "text"}));
    scan->add_option("--jobs", o.jobs, "Files scanned concurrently")->check(CLI::Range(1u, 256u));
    add_defs(scan, o);
    on(scan, cmd_scan);

    auto* clean = app.add_subcommand("clean", "Scan and act on infected files");
    clean->add_option("path", o.path)->required();
    clean->add_option("--policy", o.policy, "Preference order of repair, quarantine, delete");
    clean->add_option("--dangerous-policy", o.dangerous_policy, "Order used for dangerous viruses");
    clean->add_flag("--heuristic", o.heuristic, "Try emulator-based cleaning for unknown viruses");
    clean->add_option("--budget", o.budget, "Emulator step budget")->check(CLI::PositiveNumber);
    clean->add_option("--vault", o.vault_dir, "Quarantine directory (quarantine is skipped without one)");
    clean->add_option("--snapshots", o.snapshots_dir, "Fingerprint record directory");
    clean->add_option("--now", o.now, "Unix time for quarantine entries");
    clean->add_option("--report", o.report)->check(CLI::IsMember({"json", "text"}));
    clean->add_option("--jobs", o.jobs)->check(CLI::Range(1u, 256u));
    add_defs(clean, o);
    on(clean, cmd_clean);

    auto* q = app.add_subcommand("quarantine", "Manage the virus bin");
    q->require_subcommand(1);
    auto* q_add = q->add_subcommand("add", "Scramble files into the vault and remove the originals");
    q_add->add_option("files", o.files)->required();
    q_add->add_option("--virus", o.virus, "Recorded virus name (default: scan result)");
    q_add->add_flag("--keep", o.keep, "Leave the original file in place");
    add_defs(q_add, o);
    auto* q_list = q->add_subcommand("list", "List vault entries");
    auto* q_restore = q->add_subcommand("restore", "Unscramble an entry (the file is still infected)");
    q_restore->add_option("id", o.id)->required();
    q_restore->add_option("-o,--output", o.output);
    auto* q_purge = q->add_subcommand("purge", "Drop entries older than the retention period");
    for (auto* c : {q_add, q_list, q_restore, q_purge}) {
        c->add_option("--vault", o.vault_dir)->required();
        c->add_option("--retention-days", o.retention_days)->check(CLI::NonNegativeNumber);
        c->add_option("--now", o.now, "Unix time");
    }
    on(q_add, cmd_quarantine_add);
    on(q_list, cmd_quarantine_list);
    on(q_restore, cmd_quarantine_restore);
    on(q_purge, cmd_quarantine_purge);

    auto* snap = app.add_subcommand("snapshot", "Fingerprint records");
    snap->require_subcommand(1);
    auto* s_rec = snap->add_subcommand("record", "Record clean files");
    s_rec->add_option("path", o.path)->required();
    add_defs(s_rec, o);
    auto* s_rep = snap->add_subcommand("repair", "Rebuild a file from its record");
    s_rep->add_option("file", o.path)->required();
    s_rep->add_option("-o,--output", o.output);
    for (auto* c : {s_rec, s_rep}) c->add_option("--dir", o.dir, "Record directory")->required();
    on(s_rec, cmd_snapshot_record);
    on(s_rep, cmd_snapshot_repair);

    auto* mir = app.add_subcommand("mirror", "Clean-only backup store");
    mir->require_subcommand(1);
    auto* m_sync = mir->add_subcommand("sync", "Push files; infected copies are rejected");
    m_sync->add_option("path", o.path)->required();
    add_defs(m_sync, o);
    auto* m_rest = mir->add_subcommand("restore", "Fetch the last clean copy");
    m_rest->add_option("id", o.id)->required();
    m_rest->add_option("-o,--output", o.output);
    for (auto* c : {m_sync, m_rest}) c->add_option("--store", o.store, "Mirror directory")->required();
    on(m_sync, cmd_mirror_sync);
    on(m_rest, cmd_mirror_restore);

    auto* sim = app.add_subcommand("sim", "Run a system simulation script");
    sim->require_subcommand(1);
    auto* memres = sim->add_subcommand("memres", "Memory-resident infection and extermination");
    memres->add_option("script", o.script)->required();
    add_defs(memres, o);
    auto* recovery = sim->add_subcommand("recovery", "Remote recovery protocol");
    recovery->add_option("script", o.script)->required();
    on(memres, cmd_sim_memres);
    on(recovery, cmd_sim_recovery);

    auto* boot = app.add_subcommand("bootfix", "Replace a disk image's boot sector");
    boot->add_option("disk", o.disk)->required();
    boot->add_option("sector", o.sector, "64-byte clean sector")->required();
    boot->add_option("-o,--output", o.output);
    on(boot, cmd_bootfix);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitClean : kExitError;
    }

    try {
        return run(o);
    } catch (const ParseError& e) {
        std::cerr << "viroclave: line " << e.line() << ": " << e.what() << '\n';
    } catch (const UsageError& e) {
        std::cerr << "viroclave: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "viroclave: " << e.what() << '\n';
    }
    return kExitError;
}
