#include "doctest.h"

#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "pptkit/analysis.hpp"
#include "pptkit/corpusio.hpp"
#include "pptkit/probe.hpp"
#include "support.hpp"

using namespace pptkit;
using nlohmann::json;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "pptkit");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

} // namespace

TEST_CASE("generators write corpora and echo a re-runnable config") {
    testing::TempDir dir("cli-gen");
    const std::string a = (dir / "a.bin").string();
    const auto r = run({"gen-rnn", "--generators", "3", "--hidden", "4", "--vocab", "32", "--seqs", "5", "--len",
                        "16", "--allow-short", "--seed", "7", "--out", a});
    REQUIRE(r.code == cli::kOk);
    CHECK(json::parse(r.out)["summary"]["records"] == 5);
    REQUIRE(std::filesystem::exists(a + ".config"));

    const std::string b = (dir / "b.bin").string();
    const auto again = run({"--config", a + ".config", "--out", b});
    REQUIRE(again.code == cli::kOk);
    CHECK(testing::file_bytes(a) == testing::file_bytes(b));
    CHECK(testing::file_bytes(a + ".config").size() > 0);

    const auto dyck = run({"gen-dyck", "--k", "4", "--vocab", "8", "--seqs", "3", "--len", "32", "--out",
                           (dir / "d.bin").string()});
    CHECK(dyck.code == cli::kOk);
    const auto random = run({"gen-random", "--vocab", "8", "--seqs", "3", "--len", "32", "--out",
                             (dir / "r.bin").string()});
    CHECK(random.code == cli::kOk);
    CHECK(load_corpus(dir / "r.bin").size() == 3);
}

TEST_CASE("every config echo reproduces identical bytes") {
    testing::TempDir dir("cli-echo");
    const std::string src = (dir / "src.bin").string();
    REQUIRE(run({"gen-random", "--vocab", "64", "--seqs", "8", "--len", "64", "--seed", "3", "--out", src}).code == 0);
    const std::vector<std::pair<std::vector<std::string>, std::string>> cases{
        {{"corrupt", "--in", src, "--protocol", "span", "--rate", "0.3", "--span-min", "5", "--span-max", "20",
          "--seed", "9", "--out"},
         "span.bin"},
        {{"metamer-fit", "--in", src, "--order", "2", "--out"}, "m.ngm"},
    };
    for (const auto& [args, leaf] : cases) {
        auto first = args;
        first.push_back((dir / leaf).string());
        REQUIRE(run(first).code == 0);
        const std::string copy = (dir / ("copy-" + leaf)).string();
        REQUIRE(run({"--config", (dir / leaf).string() + ".config", "--out", copy}).code == 0);
        CHECK(testing::file_bytes(dir / leaf) == testing::file_bytes(copy));
    }
    CHECK(testing::file_bytes(dir / "span.bin.mask") == testing::file_bytes(dir / "copy-span.bin.mask"));
}

TEST_CASE("corrupt, metamer and probe wiring") {
    testing::TempDir dir("cli-pipeline");
    const std::string src = (dir / "src.bin").string();
    REQUIRE(run({"gen-random", "--vocab", "64", "--seqs", "8", "--len", "64", "--out", src}).code == 0);

    const auto c = run({"corrupt", "--in", src, "--out", (dir / "p.bin").string(), "--protocol", "permutation",
                        "--rate", "0.3", "--window-size", "8"});
    REQUIRE(c.code == 0);
    CHECK(json::parse(c.out)["masked_positions"] == 8 * 24);
    CHECK_NOTHROW(load_masked_corpus(dir / "p.bin", dir / "p.bin.mask"));

    REQUIRE(run({"metamer-fit", "--in", src, "--subset", "4", "--out", (dir / "m.ngm").string()}).code == 0);
    const auto s = run({"metamer-sample", "--model", (dir / "m.ngm").string(), "--tokens", "640", "--len", "64",
                        "--out", (dir / "meta.bin").string()});
    REQUIRE(s.code == 0);
    CHECK(load_corpus(dir / "meta.bin").token_count() == 640);
    const auto uneven = run({"metamer-sample", "--model", (dir / "m.ngm").string(), "--tokens", "650", "--len",
                             "64", "--out", (dir / "x.bin").string()});
    CHECK(uneven.code == cli::kValidation);

    std::mt19937_64 rng(1);
    AttentionDump a = testing::dyadic_dump(rng, 2, 3, 6, 2);
    a.mask().set_record(0, true);
    AttentionDump b = testing::dyadic_dump(rng, 2, 3, 6, 2);
    b.mask() = a.mask();
    save_dump(a, dir / "a.dump");
    save_dump(b, dir / "b.dump");
    const auto p = run({"probe", "--dump", (dir / "a.dump").string()});
    REQUIRE(p.code == 0);
    CHECK(json::parse(p.out)["r_noise"].size() == 2);
    const auto both = run({"probe", "--dump", (dir / "a.dump").string(), "--manifest", "x"});
    CHECK(both.code == cli::kUsage);

    const auto d = run({"probe-delta", "--a", (dir / "a.dump").string(), "--b", (dir / "b.dump").string(),
                        "--top-k", "4", "--out", (dir / "delta.json").string()});
    REQUIRE(d.code == 0);
    const json report = json::parse(testing::file_bytes(dir / "delta.json"));
    CHECK(report["ranking"].size() == 4);
    CHECK(report["clipped"] == false);

    testing::write_text(dir / "series.txt", "0 a.dump\n100 b.dump\n");
    const auto t = run({"probe", "--manifest", (dir / "series.txt").string()});
    REQUIRE(t.code == 0);
    CHECK(json::parse(t.out)["trajectory"].size() == 2);
}

TEST_CASE("partition, savings and final-gap wiring") {
    testing::TempDir dir("cli-analysis");
    testing::write_text(dir / "scores.tsv", "a\t100\t1.0\nb\t100\t2.0\nc\t100\t3.0\n");
    const auto p = run({"partition", "--scores", (dir / "scores.tsv").string(), "--clean-out",
                        (dir / "clean.txt").string(), "--noisy-out", (dir / "noisy.txt").string()});
    REQUIRE(p.code == 0);
    CHECK(testing::file_bytes(dir / "clean.txt") == "a\n");
    CHECK(testing::file_bytes(dir / "noisy.txt") == "c\n");
    CHECK(json::parse(p.out)["middle_count"] == 1);
    const auto short_budget = run({"partition", "--scores", (dir / "scores.tsv").string(), "--budget", "500",
                                   "--clean-out", (dir / "c2.txt").string(), "--noisy-out",
                                   (dir / "n2.txt").string()});
    CHECK(short_budget.code == cli::kValidation);

    testing::write_text(dir / "base.csv", "step,loss\n5000,3.9\n10000,3.719\n");
    testing::write_text(dir / "rnn.csv", "step,loss\n5000,3.8\n6000,3.73\n7000,3.70\n10000,3.65\n");
    const auto s = run({"savings", "--candidate", (dir / "rnn.csv").string(), "--baseline",
                        (dir / "base.csv").string()});
    REQUIRE(s.code == 0);
    CHECK(json::parse(s.out)["savings"].get<double>() == doctest::Approx(0.363333).epsilon(1e-5));

    testing::write_text(dir / "flat.csv", "0,5\n10000,4\n");
    const auto miss = run({"savings", "--candidate", (dir / "flat.csv").string(), "--baseline",
                           (dir / "base.csv").string()});
    REQUIRE(miss.code == 0);
    CHECK(json::parse(miss.out)["savings"] == "not matched");

    const auto g = run({"final-gap", "--curve", "base=" + (dir / "base.csv").string(), "--curve",
                        "rnn=" + (dir / "rnn.csv").string(), "--baseline", "base", "--export",
                        (dir / "table.csv").string()});
    REQUIRE(g.code == 0);
    CHECK(json::parse(g.out)["methods"]["rnn"]["gap"].get<double>() == doctest::Approx(0.069));
    CHECK(testing::file_bytes(dir / "table.csv").rfind("label,seed,step,loss\n", 0) == 0);
}

TEST_CASE("exit codes follow the error class") {
    testing::TempDir dir("cli-codes");
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"--help"}).code == cli::kOk);
    CHECK(run({"gen-random", "--bogus"}).code == cli::kUsage);
    CHECK(run({"gen-random", "--seqs", "1", "--len", "4"}).code == cli::kUsage); // --out missing

    const auto short_len = run({"gen-rnn", "--seqs", "1", "--len", "16", "--out", (dir / "x.bin").string()});
    CHECK(short_len.code == cli::kValidation);
    CHECK(json::parse(short_len.err)["error"] == "validation");

    const auto missing = run({"corrupt", "--in", (dir / "none.bin").string(), "--out", (dir / "y.bin").string()});
    CHECK(missing.code == cli::kIo);
    CHECK(json::parse(missing.err)["error"] == "io");

    testing::write_text(dir / "junk.bin", "not a corpus at all, clearly");
    const auto junk = run({"corrupt", "--in", (dir / "junk.bin").string(), "--out", (dir / "z.bin").string()});
    CHECK(junk.code == cli::kDataFormat);
    CHECK(json::parse(junk.err)["error"] == "data-format");

    testing::write_text(dir / "one.csv", "0,5\n");
    const auto one = run({"savings", "--candidate", (dir / "one.csv").string(), "--baseline",
                          (dir / "one.csv").string()});
    CHECK(one.code == cli::kValidation);
}
