#include "doctest.h"
#include "support.hpp"

#include "viroclave/pipeline.hpp"

#include "json.hpp"

#include <set>

using namespace viroclave;

namespace {

void put(const std::filesystem::path& p, const Bytes& b)
{
    std::filesystem::create_directories(p.parent_path());
    write_file(p, b);
}

}  // namespace

TEST_CASE("json report schema is fixed")
{
    FileReport r;
    r.path = "a/b.txe";
    r.format = FileFormat::Executable;
    r.verdict = ScanVerdict::infected(lab::jerusalem());
    r.action = Action::Repair;
    r.method = RepairMethod::DbRecipe;
    const auto j = nlohmann::json::parse(report_json(r));
    std::set<std::string> keys;
    for (const auto& [k, _] : j.items()) keys.insert(k);
    CHECK(keys == std::set<std::string>{"path", "format", "verdict", "action", "method"});
    CHECK(j["verdict"] == "infected:Jerusalem-toy");
    CHECK(j["action"] == "repair");
    CHECK(j["method"] == "DbRecipe");
    CHECK(j["format"] == "executable");

    r.method.reset();
    CHECK(nlohmann::json::parse(report_json(r))["method"] == "-");

    ReportSummary s;
    s.add(r);
    const auto sj = nlohmann::json::parse(summary_json(s));
    CHECK(sj["summary"]["files"] == 1);
    CHECK(sj["summary"]["repaired"] == 1);
    CHECK(summary_text(s) == "files=1 clean=0 infected=1 suspicious=0 repaired=1 quarantined=0 deleted=0 errors=0");
}

TEST_CASE("decide_clean tries recipe, fingerprint, heuristic in order")
{
    const auto defs = lab::lab_defs();
    const auto host = generate_program(900, 1);
    const auto host_bytes = serialize_executable(host);
    CleanOptions opt;

    const auto jeru = serialize_executable(infect(host, lab::jerusalem(), 1).image);
    auto d = decide_clean("a.txe", jeru, defs, opt);
    CHECK(d.action == Action::Repair);
    CHECK(d.method == RepairMethod::DbRecipe);
    CHECK(d.repaired == host_bytes);

    // overwriter: no recipe, no vault, so delete
    const auto over = serialize_executable(infect(host, lab::overwriter(), 1).image);
    d = decide_clean("b.txe", over, defs, opt);
    CHECK(d.action == Action::Delete);
    CHECK_FALSE(d.method);

    Vault vault(kDefaultRetention, 1);
    opt.vault = &vault;
    CHECK(decide_clean("b.txe", over, defs, opt).action == Action::Quarantine);

    // prepender: the recipe applies
    const auto front = serialize_executable(infect(host, lab::prepender(), 1).image);
    CHECK(decide_clean("c.txe", front, defs, opt).method == RepairMethod::DbRecipe);

    // unknown appender: only a record or the heuristic can help
    const auto unknown = synthesize_virus(VirusKind::Appender, 300, 3, 40, 9);
    const auto unk = serialize_executable(infect(host, unknown, 2).image);
    d = decide_clean("d.txe", unk, defs, opt);
    CHECK(d.verdict.is_suspicious());
    CHECK(d.action == Action::Quarantine);

    opt.records["d.txe"] = record_snapshot("d.txe", host_bytes, defs);
    d = decide_clean("d.txe", unk, defs, opt);
    CHECK(d.method == RepairMethod::Fingerprint);
    CHECK(d.repaired == host_bytes);

    opt.records.clear();
    opt.heuristic = true;
    d = decide_clean("d.txe", unk, defs, opt);
    CHECK(d.method == RepairMethod::Heuristic);
    CHECK(d.repaired == host_bytes);

    CHECK(decide_clean("e.txe", host_bytes, defs, opt).action == Action::None);
    CHECK(decide_clean("f.txe", serialize_executable(infect(host, lab::scrambler(), 1).image), defs, opt).action ==
          Action::Delete);
}

TEST_CASE("scan and clean a directory")
{
    lab::TempDir dir;
    const auto defs = lab::lab_defs();
    const auto host = generate_program(1000, 3);
    put(dir / "clean.txe", serialize_executable(generate_program(300, 4)));
    put(dir / "sub/jeru.txe", serialize_executable(infect(host, lab::jerusalem(), 1).image));
    put(dir / "over.txe", serialize_executable(infect(host, lab::overwriter(), 1).image));
    put(dir / "memo.doc", serialize_document(infect_document({"memo", {}}, lab::concept_macro())));
    put(dir / "old.vbin", Bytes{1, 2, 3});

    const auto files = collect_files(dir.path());
    CHECK(files.size() == 4);
    CHECK(std::is_sorted(files.begin(), files.end()));

    ReportSummary scanned;
    std::vector<std::string> order;
    for_each_file(files, 4, [&](const auto& p) { return scan_path(p, defs); },
                  [&](const FileReport& r) {
                      scanned.add(r);
                      order.push_back(r.path);
                  });
    CHECK(scanned.files == 4);
    CHECK(scanned.clean == 1);
    CHECK(scanned.infected == 3);
    for (std::size_t i = 0; i < files.size(); ++i) CHECK(order[i] == files[i].string());

    Vault vault(kDefaultRetention, 2);
    CleanOptions opt;
    opt.vault = &vault;
    ReportSummary cleaned;
    for (const auto& f : files) cleaned.add(clean_path(f, defs, opt));
    CHECK(cleaned.repaired == 2);
    CHECK(cleaned.quarantined == 1);
    CHECK(read_file(dir / "sub/jeru.txe") == serialize_executable(host));
    CHECK_FALSE(std::filesystem::exists(dir / "over.txe"));
    CHECK(vault.size() == 1);
    CHECK(scan_file(read_file(dir / "memo.doc"), defs).is_clean());

    const auto missing = scan_path(dir / "nope", defs);
    CHECK_FALSE(missing.error.empty());
    ReportSummary s;
    s.add(missing);
    CHECK(s.errors == 1);
}

TEST_CASE("for_each_file keeps input order under concurrency")
{
    std::vector<std::filesystem::path> files;
    for (int i = 0; i < 50; ++i) files.emplace_back("f" + std::to_string(i));
    for (unsigned jobs : {1u, 3u, 8u}) {
        std::vector<std::string> seen;
        for_each_file(files, jobs,
                      [](const auto& p) {
                          FileReport r;
                          r.path = p.string();
                          return r;
                      },
                      [&](const FileReport& r) { seen.push_back(r.path); });
        REQUIRE(seen.size() == files.size());
        for (std::size_t i = 0; i < files.size(); ++i) CHECK(seen[i] == files[i].string());
    }
}
