#include "doctest.h"
#include "support.hpp"

#include "viroclave/error.hpp"
#include "viroclave/repair.hpp"

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

}  // namespace

TEST_CASE("Jerusalem-toy repair restores the original")
{
    const auto host = generate_program(1000, 1);
    const auto inf = infect(host, lab::jerusalem(), 2);
    CHECK(repair_executable(inf.image, lab::jerusalem()) == host);
}

TEST_CASE("repair errors")
{
    const auto host = generate_program(600, 3);
    const auto over = infect(host, lab::overwriter(), 1).image;
    CHECK(error_of([&] { repair_executable(over, lab::overwriter()); }) == Errc::IrreparableKind);
    CHECK(error_of([&] { repair_executable(host, lab::jerusalem()); }) == Errc::NotInfected);
    CHECK(error_of([&] { repair_executable(host, lab::concept_macro()); }) == Errc::InvalidParameters);

    auto unknown = lab::jerusalem();
    unknown.body_len.reset();
    const auto inf = infect(host, lab::jerusalem(), 1).image;
    CHECK(error_of([&] { repair_executable(inf, unknown); }) == Errc::UnknownLength);

    // body cut short: the recipe would read past the end
    ToyImage cut = inf;
    cut.code.resize(cut.code.size() - 1500);
    CHECK(error_of([&] { repair_executable(cut, lab::jerusalem()); }) == Errc::InconsistentInfection);
}

TEST_CASE("repair roundtrip for every repairable kind")
{
    std::mt19937_64 rng(31);
    for (int i = 0; i < 300; ++i) {
        const auto kind = std::array{VirusKind::Appender, VirusKind::Prepender, VirusKind::Cavity}[i % 3];
        const std::size_t body = 60 + rng() % 400;
        const auto defn = synthesize_virus(kind, body, 3 + rng() % 5, 30 + rng() % 8, rng());
        const auto host = kind == VirusKind::Cavity ? generate_cavity_host(body + 100 + rng() % 300, body, rng())
                                                    : generate_program(5 + rng() % 900, rng());
        const auto inf = infect(host, defn, rng());
        CHECK(repair_executable(inf.image, defn) == host);
    }
    const auto cav = generate_cavity_host(2100, 2000, 4);
    CHECK(repair_executable(infect(cav, lab::cavity_virus(), 1).image, lab::cavity_virus()) == cav);
    const auto p = generate_program(700, 4);
    CHECK(repair_executable(infect(p, lab::prepender(), 1).image, lab::prepender()) == p);
}

TEST_CASE("wrong same-kind definition builds garbage")
{
    auto wrong = lab::jerusalem();
    wrong.saved_offset = 843;
    std::mt19937_64 rng(32);
    for (int i = 0; i < 50; ++i) {
        const auto host = generate_program(100 + rng() % 1500, rng());
        const auto inf = infect(host, lab::jerusalem(), rng());
        const auto garbage = repair_executable(inf.image, wrong);
        CHECK(garbage.code.size() == host.code.size());
        CHECK(garbage.code != host.code);
    }
}

TEST_CASE("body located at the first signature occurrence")
{
    // a decoy copy of the signature ahead of the real body wins the tie
    const auto host = generate_program(400, 9);
    const auto inf = infect(host, lab::jerusalem(), 5);
    ToyImage doubled = inf.image;
    const auto sig = lab::jerusalem_signature();
    std::copy(sig.begin(), sig.end(), doubled.code.begin() + 100);
    const auto out = repair_executable(doubled, lab::jerusalem());
    CHECK(out != host);
    CHECK(std::equal(out.code.begin(), out.code.begin() + 3, doubled.code.begin() + 100 + 483));
}

TEST_CASE("macro treatment")
{
    const auto defs = lab::lab_defs();
    const NamedMacro five{"M", "MSG one\nFORMAT C:\nSAVE\ndelete all\nPRINT\n"};
    const auto t = treat_macro(five, defs);
    CHECK(t.name == "M");
    CHECK(t.body == "MSG one\nSAVE\nPRINT\n");

    const NamedMacro clean{"C", "MSG hi\r\nSAVE"};
    CHECK(treat_macro(clean, defs) == clean);

    const NamedMacro evil{"E", "FORMAT C:\nCOPYSELF NORMAL\n"};
    CHECK(treat_macro(evil, defs).body.empty());
}

TEST_CASE("document correction")
{
    const auto defs = lab::lab_defs();
    const ToyDocument doc{"text", {{"A", "MSG a"}, {"B", "SAVE"}}};
    const auto inf = infect_document(doc, lab::concept_macro());
    const auto fixed = correct_document(inf, defs);
    CHECK(scan_document(fixed, defs).is_clean());
    REQUIRE(fixed.macros.size() == 3);
    CHECK(fixed.macros[0] == doc.macros[0]);
    CHECK(fixed.macros[1] == doc.macros[1]);
    CHECK(fixed.macros[2].body.empty());
    CHECK(correct_document(fixed, defs) == fixed);
    CHECK(serialize_document(correct_document(doc, defs)) == serialize_document(doc));

    const auto out = repair_file(serialize_document(inf), defs);
    CHECK(out.method == RepairMethod::MacroTreatment);
    CHECK(parse_document(out.repaired) == fixed);
    CHECK(error_of([&] { repair_file(serialize_document(doc), defs); }) == Errc::NotInfected);
}

TEST_CASE("email disinfection")
{
    const auto defs = lab::lab_defs();
    const auto host = generate_program(1000, 12);
    const auto good = serialize_executable(generate_program(300, 13));
    const ToyEmail mail{"From: a", "hi",
                        {{"clean.txe", good}, {"jeru.txe", serialize_executable(infect(host, lab::jerusalem(), 1).image)}}};
    const auto out = disinfect_email(mail, defs);
    REQUIRE(out.email.attachments.size() == 2);
    CHECK(out.email.attachments[0].data == good);
    CHECK(out.email.attachments[1].data == serialize_executable(host));
    CHECK(out.reports[0].action == AttachmentAction::Kept);
    CHECK(out.reports[1].action == AttachmentAction::Repaired);
    CHECK(out.email.headers == mail.headers);
    CHECK(out.email.body == mail.body);

    const ToyEmail bad{"From: b", "x",
                       {{"keep.txe", good}, {"over.txe", serialize_executable(infect(host, lab::overwriter(), 1).image)}}};
    const auto out2 = disinfect_email(bad, defs);
    REQUIRE(out2.email.attachments.size() == 1);
    CHECK(out2.email.attachments[0].name == "keep.txe");
    CHECK(out2.reports[1].action == AttachmentAction::Deleted);

    const ToyEmail none{"From: c", "plain", {}};
    CHECK(disinfect_email(none, defs).email == none);

    const auto whole = repair_file(serialize_email(mail), defs);
    CHECK(whole.method == RepairMethod::EmailPipeline);
    CHECK(scan_file(whole.repaired, defs).is_clean());
}

TEST_CASE("repair_file on executables")
{
    const auto defs = lab::lab_defs();
    const auto host = generate_program(800, 14);
    const auto out = repair_file(serialize_executable(infect(host, lab::jerusalem(), 1).image), defs);
    CHECK(out.method == RepairMethod::DbRecipe);
    CHECK(out.removed_virus == "Jerusalem-toy");
    CHECK(out.repaired == serialize_executable(host));
    CHECK(error_of([&] { repair_file(serialize_executable(host), defs); }) == Errc::NotInfected);
}
