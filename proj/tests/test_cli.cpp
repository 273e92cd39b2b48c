#include "doctest.h"
#include "support.hpp"

#include "viroclave/quarantine.hpp"

#include "json.hpp"

#include <sys/wait.h>

#include <cstdio>

using namespace viroclave;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

/// Runs the CLI with `args` (already shell-quoted), capturing stdout.
Run cli(const std::string& args, const std::filesystem::path& cwd)
{
    const std::string cmd = "cd '" + cwd.string() + "' && VIROCLAVE_DEFS='" VIROCLAVE_TEST_DATA "/lab.defs' '" +
                            VIROCLAVE_CLI_PATH + "' " + args + " 2>/dev/null";
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> lines(const std::string& s)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto nl = s.find('\n', pos);
        out.push_back(s.substr(pos, nl - pos));
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return out;
}

}  // namespace

TEST_CASE("scan of three clean files")
{
    lab::TempDir dir;
    for (int i = 0; i < 3; ++i) {
        write_file(dir / ("p" + std::to_string(i) + ".txe"), serialize_executable(generate_program(200 + i, i)));
    }
    const auto r = cli("scan .", dir.path());
    CHECK(r.code == 0);
    CHECK(r.out.find("clean=3") != std::string::npos);
}

TEST_CASE("clean repairs a Jerusalem-toy file in place")
{
    lab::TempDir dir;
    const auto host = serialize_executable(generate_program(1000, 5));
    write_file(dir / "app.txe", host);
    CHECK(cli("infect app.txe --virus Jerusalem-toy --seed 3", dir.path()).code == 0);
    CHECK(read_file(dir / "app.txe") != host);
    const auto r = cli("clean app.txe --report json", dir.path());
    CHECK(r.code == 1);
    CHECK(read_file(dir / "app.txe") == host);
    CHECK(cli("scan app.txe", dir.path()).code == 0);
}

TEST_CASE("clean --policy quarantine puts an overwritten file in the vault")
{
    lab::TempDir dir;
    write_file(dir / "app.txe", serialize_executable(generate_program(500, 6)));
    CHECK(cli("infect app.txe --virus Vienna-over", dir.path()).code == 0);
    const auto r = cli("clean app.txe --policy quarantine --vault vault --now 1000", dir.path());
    CHECK(r.code == 1);
    CHECK(std::filesystem::exists(dir / "vault/app.vbin"));
    CHECK_FALSE(std::filesystem::exists(dir / "app.txe"));

    const auto listed = cli("quarantine list --vault vault", dir.path());
    CHECK(listed.code == 0);
    const auto id = listed.out.substr(0, listed.out.find('\t'));
    CHECK(cli("quarantine restore " + id + " --vault vault -o back.txe", dir.path()).code == 0);
    CHECK(cli("scan back.txe", dir.path()).code == 1);
    CHECK(cli("quarantine purge --vault vault --now 1000", dir.path()).out == "purged 0, kept 1\n");
    CHECK(cli("quarantine purge --vault vault --now 99999999", dir.path()).out == "purged 1, kept 0\n");
}

TEST_CASE("json and text reports agree")
{
    lab::TempDir dir;
    std::filesystem::create_directories(dir / "d");
    const auto host = generate_program(900, 7);
    write_file(dir / "d/a.txe", serialize_executable(host));
    write_file(dir / "d/b.txe", serialize_executable(infect(host, lab::jerusalem(), 1).image));
    write_file(dir / "d/c.txe", serialize_executable(infect(host, lab::overwriter(), 1).image));
    write_file(dir / "d/d.doc", serialize_document(infect_document({"x", {}}, lab::concept_macro())));
    write_file(dir / "d/e.txe",
               serialize_executable(infect(host, synthesize_virus(VirusKind::Appender, 200, 3, 40, 1), 1).image));

    const auto json = cli("scan d --report json --jobs 3", dir.path());
    const auto text = cli("scan d --report text", dir.path());
    CHECK(json.code == 1);
    CHECK(text.code == 1);
    const auto jl = lines(json.out);
    REQUIRE(jl.size() == 6);
    std::map<std::string, int> counted;
    for (std::size_t i = 0; i + 1 < jl.size(); ++i) {
        const auto j = nlohmann::json::parse(jl[i]);
        CHECK(j.size() == 5);
        for (const auto* k : {"path", "format", "verdict", "action", "method"}) CHECK(j.contains(k));
        const std::string v = j["verdict"];
        ++counted[v.substr(0, v.find(':'))];
    }
    const auto s = nlohmann::json::parse(jl.back())["summary"];
    CHECK(s["files"] == 5);
    CHECK(s["clean"] == counted["clean"]);
    CHECK(s["infected"] == counted["infected"]);
    CHECK(s["suspicious"] == counted["suspicious"]);
    CHECK(counted["infected"] == 3);
    CHECK(counted["suspicious"] == 1);
    const auto tl = lines(text.out);
    CHECK(tl.back() == "files=5 clean=1 infected=3 suspicious=1 repaired=0 quarantined=0 deleted=0 errors=0");

    // clean with the heuristic: nothing deleted once an earlier action worked
    const auto c = cli("clean d --heuristic --report json", dir.path());
    CHECK(c.code == 1);
    const auto cl = lines(c.out);
    const auto cs = nlohmann::json::parse(cl.back())["summary"];
    CHECK(cs["repaired"] == 3);
    CHECK(cs["deleted"] == 1);
    CHECK(read_file(dir / "d/e.txe") == serialize_executable(host));
    CHECK_FALSE(std::filesystem::exists(dir / "d/c.txe"));
}

TEST_CASE("snapshots, mirror and boot sector")
{
    lab::TempDir dir;
    const auto host = serialize_executable(generate_program(700, 8));
    write_file(dir / "app.txe", host);
    CHECK(cli("snapshot record app.txe --dir snaps", dir.path()).code == 0);
    CHECK(cli("mirror sync app.txe --store mirror", dir.path()).code == 0);

    write_file(dir / "app.txe",
               serialize_executable(infect(parse_executable(host), synthesize_virus(VirusKind::Appender, 200, 3, 40, 2), 1).image));
    CHECK(cli("mirror sync app.txe --store mirror", dir.path()).code == 1);
    CHECK(cli("snapshot record app.txe --dir snaps", dir.path()).code == 1);
    CHECK(cli("clean app.txe --snapshots snaps --report json", dir.path()).out.find("\"Fingerprint\"") !=
          std::string::npos);
    CHECK(read_file(dir / "app.txe") == host);

    CHECK(cli("mirror restore app.txe --store mirror -o m.txe", dir.path()).code == 0);
    CHECK(read_file(dir / "m.txe") == host);
    CHECK(cli("mirror restore ghost --store mirror", dir.path()).code == 2);

    Bytes disk(68, 0xee);
    for (std::size_t i = 0; i < 4; ++i) disk[64 + i] = static_cast<std::uint8_t>(i + 1);
    write_file(dir / "disk.img", disk);
    write_file(dir / "sector.bin", Bytes(64, 0));
    CHECK(cli("bootfix disk.img sector.bin", dir.path()).code == 0);
    const auto fixed = read_file(dir / "disk.img");
    CHECK(Bytes(fixed.begin(), fixed.begin() + 64) == Bytes(64, 0));
    CHECK(Bytes(fixed.begin() + 64, fixed.end()) == Bytes{1, 2, 3, 4});
    write_file(dir / "short.bin", Bytes(63, 0));
    CHECK(cli("bootfix disk.img short.bin", dir.path()).code == 2);
}

TEST_CASE("simulation scripts and exit codes")
{
    lab::TempDir dir;
    CHECK(cli("sim memres '" VIROCLAVE_TEST_DATA "/exterminate.memres'", dir.path()).code == 0);
    CHECK(cli("sim memres '" VIROCLAVE_TEST_DATA "/reinfection.memres'", dir.path()).code == 0);
    CHECK(cli("sim recovery '" VIROCLAVE_TEST_DATA "/recovery.rec'", dir.path()).code == 0);

    write_file(dir / "bad.memres", to_bytes("program a 100\nexpect infected == 1\n"));
    const auto failing = cli("sim memres bad.memres", dir.path());
    CHECK(failing.code == 1);
    CHECK(failing.out.find("FAIL line 2") != std::string::npos);
    write_file(dir / "broken.memres", to_bytes("teleport\n"));
    CHECK(cli("sim memres broken.memres", dir.path()).code == 2);

    CHECK(cli("", dir.path()).code == 2);
    CHECK(cli("scan", dir.path()).code == 2);
    CHECK(cli("scan missing-dir", dir.path()).code == 2);
    CHECK(cli("defs check", dir.path()).code == 0);
    write_file(dir / "bad.defs", to_bytes("X|Appender|1\n"));
    CHECK(cli("defs check bad.defs", dir.path()).code == 2);
    CHECK(cli("infect x.txe --virus Nope", dir.path()).code == 2);
}
