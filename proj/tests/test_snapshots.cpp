#include "doctest.h"
#include "support.hpp"

#include "viroclave/error.hpp"
#include "viroclave/repair.hpp"
#include "viroclave/snapshots.hpp"

#include <functional>

using namespace viroclave;

namespace {

Errc error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::IoError;
}

Bytes program_file(std::size_t n, std::uint64_t seed)
{
    return serialize_executable(generate_program(n, seed));
}

Bytes infected_file(std::size_t n, std::uint64_t seed, const VirusDefinition& d)
{
    return serialize_executable(infect(generate_program(n, seed), d, seed).image);
}

}  // namespace

TEST_CASE("FNV-1a test vectors")
{
    // from an independent implementation
    CHECK(fingerprint(Bytes{}) == 0xcbf29ce484222325ULL);
    CHECK(fingerprint(Bytes{0x61}) == 0xaf63dc4c8601ec8cULL);
    CHECK(fingerprint(as_bytes("foobar")) == 0x85944171f73967e8ULL);
}

TEST_CASE("no fingerprint collisions on random 4KB pairs")
{
    std::mt19937_64 rng(61);
    int collisions = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto x = lab::random_bytes(4096, rng);
        auto y = x;
        y[rng() % y.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        const auto z = lab::random_bytes(4096, rng);
        collisions += fingerprint(x) == fingerprint(y) ? 1 : 0;
        collisions += (x != z && fingerprint(x) == fingerprint(z)) ? 1 : 0;
    }
    CHECK(collisions == 0);
}

TEST_CASE("snapshot records")
{
    const auto defs = lab::lab_defs();
    const auto file = program_file(1000, 1);
    const auto r = record_snapshot("app", file, defs);
    CHECK(r.length == file.size());
    CHECK(r.head.size() == 64);
    CHECK(r.fingerprint == fingerprint(file));
    CHECK(record_snapshot("tiny", Bytes(10, 1), defs).head.size() == 10);
    CHECK(error_of([&] { record_snapshot("bad", infected_file(500, 1, lab::jerusalem()), defs); }) ==
          Errc::RefusedInfected);
}

TEST_CASE("reconstruction")
{
    const auto defs = lab::lab_defs();
    const auto file = program_file(1000, 2);
    const auto r = record_snapshot("app", file, defs);
    const auto inf = serialize_executable(infect(parse_executable(file), lab::jerusalem(), 3).image);
    CHECK(reconstruct_and_verify(inf, r) == file);
    CHECK(reconstruct_and_verify(file, r) == file);

    const auto over = serialize_executable(infect(parse_executable(file), lab::overwriter(), 3).image);
    CHECK(error_of([&] { reconstruct_and_verify(over, r); }) == Errc::ReconstructionFailed);
    CHECK(error_of([&] { reconstruct_and_verify(Bytes(20, 0), r); }) == Errc::LengthUnderflow);
}

TEST_CASE("reconstruction never returns unverified bytes")
{
    const auto defs = lab::lab_defs();
    std::mt19937_64 rng(62);
    const VirusDefinition kinds[] = {lab::jerusalem(), lab::prepender(), lab::overwriter(), lab::scrambler()};
    int appender_ok = 0;
    for (int i = 0; i < 200; ++i) {
        const auto file = program_file(300 + rng() % 1000, rng());
        const auto r = record_snapshot("f", file, defs);
        const auto& d = kinds[i % 4];
        const auto inf = serialize_executable(infect(parse_executable(file), d, rng()).image);
        try {
            const auto out = reconstruct_and_verify(inf, r);
            CHECK(fingerprint(out) == r.fingerprint);
            CHECK(out == file);
            appender_ok += d.kind == VirusKind::Appender ? 1 : 0;
        } catch (const Error& e) {
            CHECK(d.kind != VirusKind::Appender);
            CHECK((e.code() == Errc::ReconstructionFailed || e.code() == Errc::LengthUnderflow));
        }
    }
    CHECK(appender_ok == 50);
}

TEST_CASE("record persistence")
{
    lab::TempDir dir;
    const auto defs = lab::lab_defs();
    std::vector<FingerprintRecord> recs{record_snapshot("a.txe", program_file(100, 1), defs),
                                        record_snapshot("b.txe", program_file(5, 2), defs)};
    save_records(dir.path(), recs);
    const auto loaded = load_records(dir.path());
    REQUIRE(loaded.size() == 2);
    CHECK(loaded.at("a.txe") == recs[0]);
    CHECK(loaded.at("b.txe") == recs[1]);
}

TEST_CASE("mirror sync examples")
{
    const auto defs = lab::lab_defs();
    MirrorStore m;
    const auto v1 = program_file(300, 1), v2 = program_file(300, 2);
    CHECK(m.sync("a", v1, defs).version == 1);
    CHECK(m.sync("a", v2, defs).version == 2);
    const auto bad = infected_file(300, 3, lab::jerusalem());
    const auto rej = mirror_sync(m, "a", bad, defs);
    CHECK(rej.status == SyncResult::Status::RejectedInfected);
    CHECK(rej.reason == "infected:Jerusalem-toy");
    CHECK(m.restore("a") == v2);
    CHECK(m.version("a") == 2u);

    CHECK_FALSE(m.sync("new", bad, defs).updated());
    CHECK_FALSE(m.version("new"));
    CHECK(error_of([&] { mirror_restore(m, "new"); }) == Errc::NoBackup);
    CHECK(scan_file(m.restore("a"), defs).is_clean());
}

TEST_CASE("mirror stays clean under random interleavings")
{
    const auto defs = lab::lab_defs();
    const VirusDefinition kinds[] = {lab::jerusalem(), lab::prepender(), lab::overwriter(), lab::scrambler()};
    std::mt19937_64 rng(63);
    for (int trial = 0; trial < 30; ++trial) {
        MirrorStore m;
        std::map<std::string, Bytes> last_clean;
        for (int ev = 0; ev < 40; ++ev) {
            const std::string id = "f" + std::to_string(rng() % 4);
            switch (rng() % 3) {
            case 0: {
                const auto b = program_file(260 + rng() % 300, rng());
                CHECK(m.sync(id, b, defs).updated());
                last_clean[id] = b;
                break;
            }
            case 1:
                CHECK_FALSE(m.sync(id, infected_file(260 + rng() % 300, rng(), kinds[rng() % 4]), defs).updated());
                break;
            default:
                if (last_clean.count(id)) {
                    CHECK(m.restore(id) == last_clean[id]);
                } else {
                    CHECK_THROWS_AS(m.restore(id), Error);
                }
            }
            for (const auto& i : m.ids()) CHECK(scan_file(m.restore(i), defs).is_clean());
        }
    }
}

TEST_CASE("mirror persistence")
{
    lab::TempDir dir;
    const auto defs = lab::lab_defs();
    MirrorStore m;
    const auto a = program_file(50, 1), b = program_file(60, 2);
    m.sync("x/a.txe", a, defs);
    m.sync("b", b, defs);
    m.sync("b", a, defs);
    m.save(dir.path());
    const auto loaded = MirrorStore::load(dir.path());
    CHECK(loaded->restore("x/a.txe") == a);
    CHECK(loaded->restore("b") == a);
    CHECK(loaded->version("b") == 2u);
}

TEST_CASE("locked partition restore")
{
    const auto defs = lab::lab_defs();
    const std::map<std::string, Bytes> backup{{"unchanged", program_file(400, 1)},
                                              {"edited", program_file(400, 2)},
                                              {"repairable", program_file(400, 3)},
                                              {"irreparable", program_file(400, 4)},
                                              {"vanished", program_file(400, 5)}};
    const auto manifest = BackupManifest::capture(100, backup);
    const auto edited = program_file(420, 6);
    const auto grown = program_file(450, 7);
    std::map<std::string, Bytes> current{
        {"unchanged", backup.at("unchanged")},
        {"edited", edited},
        {"repairable", serialize_executable(infect(parse_executable(grown), lab::jerusalem(), 1).image)},
        {"irreparable", infected_file(400, 8, lab::overwriter())},
        {"new-infected", infected_file(400, 9, lab::overwriter())},
    };
    const auto out = locked_partition_restore(manifest, current, defs);
    CHECK(out.files.at("unchanged") == backup.at("unchanged"));
    CHECK(out.files.at("edited") == edited);
    CHECK(out.files.at("repairable") == serialize_executable(parse_executable(grown)));
    CHECK(out.files.at("irreparable") == backup.at("irreparable"));
    CHECK(out.files.count("new-infected") == 0);
    CHECK(out.files.at("vanished") == backup.at("vanished"));

    std::map<std::string, LockedOutcome> outcome;
    for (const auto& r : out.report) outcome[r.id] = r.outcome;
    CHECK(outcome.at("unchanged") == LockedOutcome::Unchanged);
    CHECK(outcome.at("edited") == LockedOutcome::KeptCurrent);
    CHECK(outcome.at("repairable") == LockedOutcome::Repaired);
    CHECK(outcome.at("irreparable") == LockedOutcome::RestoredBackup);
    CHECK(outcome.at("new-infected") == LockedOutcome::Omitted);
    CHECK(outcome.at("vanished") == LockedOutcome::Recovered);

    for (const auto& [id, bytes] : out.files) {
        const bool is_backup = backup.count(id) && backup.at(id) == bytes;
        CHECK((is_backup || scan_file(bytes, defs).is_clean()));
    }
}

TEST_CASE("manifest persistence")
{
    lab::TempDir dir;
    const std::map<std::string, Bytes> files{{"a", program_file(100, 1)}, {"b", program_file(10, 2)}};
    const auto m = BackupManifest::capture(1234, files);
    m.save(dir.path());
    const auto loaded = BackupManifest::load(dir.path());
    CHECK(loaded.time() == 1234);
    CHECK(loaded.size() == 2);
    CHECK(loaded.fingerprint_of("a") == fingerprint(files.at("a")));
    const auto out = locked_partition_restore(loaded, {}, lab::lab_defs());
    CHECK(out.files == files);
}
