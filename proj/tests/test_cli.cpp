#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "bibs/io.hpp"

#ifndef BIBS_CLI_PATH
#define BIBS_CLI_PATH "bibs"
#endif

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("bibs_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(BIBS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_capture(const std::string& args, const std::string& out_path) {
    const std::string cmd =
        std::string(BIBS_CLI_PATH) + " " + args + " >" + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    out << contents;
}

}  // namespace

TEST_CASE("usage errors exit 2, including missing required flags") {
    CHECK(run("") == 2);
    CHECK(run("not-a-command") == 2);
    CHECK(run("train --out x") == 2);  // missing --corpus
    CHECK(run("decode --models m --dataset d --out o") == 2);  // missing --algo
    CHECK(run("--help") == 0);
}

TEST_CASE("train writes models whose context tables match a hand count") {
    TempDir dir;
    write(dir.file("corpus.txt"), "a b\na c\nb a\n");
    CHECK(run("train --corpus " + dir.file("corpus.txt") + " --order 2 --smoothing 1 --out " +
              dir.file("m")) == 0);

    nlohmann::json fwd = nlohmann::json::parse(bibs::read_file(dir.file("m.fwd.json")));
    CHECK(fwd.at("n") == 2);
    CHECK(fwd.at("k") == 1.0);
    // vocab: a(freq 3) -> id 3, b(freq 2) -> id 4, c(freq 1) -> id 5
    // context "3" (a): a->b once, a->c once, a->EOS once
    const auto& ctx_a = fwd.at("counts").at("3");
    CHECK(ctx_a.at("4") == 1);
    CHECK(ctx_a.at("5") == 1);
    CHECK(ctx_a.at("1") == 1);
    // context BOS (0): starts a,a,b
    const auto& ctx_bos = fwd.at("counts").at("0");
    CHECK(ctx_bos.at("3") == 2);
    CHECK(ctx_bos.at("4") == 1);

    nlohmann::json bwd = nlohmann::json::parse(bibs::read_file(dir.file("m.bwd.json")));
    CHECK(bwd.at("direction") == "backward");
}

TEST_CASE("order-1 training leaves only the empty context") {
    TempDir dir;
    write(dir.file("corpus.txt"), "a b a\nb b\n");
    CHECK(run("train --corpus " + dir.file("corpus.txt") + " --order 1 --out " + dir.file("m")) == 0);
    nlohmann::json fwd = nlohmann::json::parse(bibs::read_file(dir.file("m.fwd.json")));
    CHECK(fwd.at("counts").size() == 1);
    CHECK(fwd.at("counts").contains(""));
}

TEST_CASE("unreadable corpus exits 1 with a message") {
    TempDir dir;
    CHECK(run("train --corpus " + dir.file("nope.txt") + " --out " + dir.file("m")) == 1);
}

TEST_CASE("decode is byte-identical across reruns with the same seed") {
    TempDir dir;
    write(dir.file("corpus.txt"),
          "the red bird sings in the garden\n"
          "a small cat sleeps near the red lamp\n"
          "the red bird watches a small cat\n"
          "the quiet dog waits under a tall tree\n"
          "a green boat drifts on the wide river\n");
    REQUIRE(run("train --corpus " + dir.file("corpus.txt") + " --order 2 --out " + dir.file("m")) == 0);
    REQUIRE(run("blank --corpus " + dir.file("corpus.txt") + " --ratio 0.5 --seed 3 --out " +
                dir.file("ds")) == 0);
    const std::string base = "decode --models " + dir.file("m") + " --dataset " +
                             dir.file("ds.r50.jsonl") + " --algo gsn --beam 3 --iters 2 --seed 42";
    REQUIRE(run(base + " --out " + dir.file("r1.jsonl")) == 0);
    REQUIRE(run(base + " --out " + dir.file("r2.jsonl")) == 0);
    CHECK(bibs::read_file(dir.file("r1.jsonl")) == bibs::read_file(dir.file("r2.jsonl")));

    // blank is byte-identical under the seed too
    REQUIRE(run("blank --corpus " + dir.file("corpus.txt") + " --ratio 0.5 --seed 3 --out " +
                dir.file("ds2")) == 0);
    CHECK(bibs::read_file(dir.file("ds.r50.jsonl")) == bibs::read_file(dir.file("ds2.r50.jsonl")));
}

TEST_CASE("oracle decode emits the exact ranking and eval scores gold at 1.0") {
    TempDir dir;
    write(dir.file("corpus.txt"), "a b a b\nb a b a\na a b b\nb b a a\n");
    REQUIRE(run("train --corpus " + dir.file("corpus.txt") + " --order 2 --out " + dir.file("m")) == 0);
    REQUIRE(run("blank --corpus " + dir.file("corpus.txt") + " --ratio 0.5 --out " + dir.file("ds")) ==
            0);
    REQUIRE(run("decode --models " + dir.file("m") + " --dataset " + dir.file("ds.r50.jsonl") +
                " --algo oracle --out " + dir.file("res.jsonl")) == 0);

    // hand-built results holding the gold completions score BLEU-4 = 1.0
    std::string gold_results;
    for (const auto& line : bibs::read_lines(dir.file("ds.r50.jsonl"))) {
        if (line.empty()) continue;
        nlohmann::json inst = nlohmann::json::parse(line);
        nlohmann::json r{{"id", inst.at("id")},
                         {"algorithm", "gold"},
                         {"completion", inst.at("gold")},
                         {"objective", 0.0},
                         {"joint_logp", 0.0},
                         {"meta_iterations", 0},
                         {"advance_steps", 0},
                         {"trace", nlohmann::json::array()}};
        gold_results += r.dump() + "\n";
    }
    write(dir.file("gold.jsonl"), gold_results);
    REQUIRE(run_capture("eval --results " + dir.file("gold.jsonl") + " --dataset " +
                            dir.file("ds.r50.jsonl") + " --out " + dir.file("eval.json"),
                        dir.file("eval.txt")) == 0);
    nlohmann::json eval = nlohmann::json::parse(bibs::read_file(dir.file("eval.json")));
    REQUIRE(eval.at("cells").size() == 1);
    CHECK(eval.at("cells")[0].at("bleu4").get<double>() == doctest::Approx(1.0));
    // identity cosine is 1 at n = 2..4; every unigram appears in all four
    // corpus documents, so the n = 1 level has zero IDF weight everywhere
    CHECK(eval.at("cells")[0].at("cider").get<double>() == doctest::Approx(7.5));
}

TEST_CASE("eval rejects empty results and misaligned ids") {
    TempDir dir;
    write(dir.file("corpus.txt"), "a b a b\nb a b a\n");
    REQUIRE(run("blank --corpus " + dir.file("corpus.txt") + " --ratio 0.5 --out " + dir.file("ds")) ==
            0);
    write(dir.file("empty.jsonl"), "");
    CHECK(run_capture("eval --results " + dir.file("empty.jsonl") + " --dataset " +
                          dir.file("ds.r50.jsonl"),
                      dir.file("e1.txt")) == 1);
    CHECK(bibs::read_file(dir.file("e1.txt")).find("no results") != std::string::npos);

    write(dir.file("bad.jsonl"),
          nlohmann::json{{"id", "ghost-1"},
                         {"algorithm", "x"},
                         {"completion", nlohmann::json::array()},
                         {"joint_logp", 0.0},
                         {"advance_steps", 0}}
                  .dump() +
              "\n");
    CHECK(run_capture("eval --results " + dir.file("bad.jsonl") + " --dataset " +
                          dir.file("ds.r50.jsonl"),
                      dir.file("e2.txt")) == 1);
    CHECK(bibs::read_file(dir.file("e2.txt")).find("ghost-1") != std::string::npos);
}

TEST_CASE("bench verifies the 2*B*M*w table and exits clean") {
    TempDir dir;
    CHECK(run_capture("bench --seed 1 --out " + dir.file("bench.json"), dir.file("bench.txt")) == 0);
    nlohmann::json bench = nlohmann::json::parse(bibs::read_file(dir.file("bench.json")));
    CHECK(bench.at("all_ok") == true);
    CHECK(bench.at("rows").size() == 27);
    for (const auto& row : bench.at("rows")) {
        CHECK(row.at("measured") == row.at("expected"));
    }
}
