#include "doctest.h"
#include "fixtures.hpp"

#include "json.hpp"
#include "midicls/cli.hpp"
#include "midicls/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace midicls;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("midicls_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

void write_bytes(const std::string& path, const fixtures::Bytes& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::size_t line_count(const std::string& path) {
    const std::string text = read_text_file(path);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(read_text_file(path)); }

} // namespace

TEST_CASE("encode") {
    TempDir dir("encode");
    fs::create_directories(dir.path / "midi");
    const std::string midi = dir / "midi";

    SUBCASE("empty directory gives an empty corpus") {
        const Run r = run({"encode", "--in", midi, "--out", dir / "c.txt"});
        CHECK(r.code == 0);
        CHECK(line_count(dir / "c.txt") == 0);
    }
    SUBCASE("valid and polyphonic files") {
        write_bytes(dir / "midi/a.mid", fixtures::minimal_smf());
        write_bytes(dir / "midi/b.mid", fixtures::smf_from_notes({{0, 480, 60, 90}, {240, 480, 64, 90}}));
        const Run r = run({"encode", "--in", midi, "--out", dir / "c.txt"});
        CHECK(r.code == 0);
        CHECK(line_count(dir / "c.txt") == 1);
        const std::string skipped = read_text_file(dir / "c.txt.skipped.csv");
        CHECK(skipped.find("b.mid") != std::string::npos);
        CHECK(skipped.find("PolyphonyError") != std::string::npos);
        const auto corpus = read_corpus(dir / "c.txt");
        REQUIRE(corpus.size() == 1);
        CHECK(corpus[0].id == "a.mid");
        CHECK(read_json(manifest_path(dir / "c.txt"))["skipped"] == 1);
    }
    SUBCASE("missing directory is an io error") {
        CHECK(run({"encode", "--in", dir / "nope", "--out", dir / "c.txt"}).code == exit_io);
    }
}

TEST_CASE("augment") {
    TempDir dir("augment");
    const std::string corpus = dir / "c.txt";
    write_corpus(corpus, {{"x", encode(fixtures::figure_piece())}, {"y", encode(fixtures::overfit_piece())}});

    const Run r = run({"augment", "--in", corpus, "--out", dir / "aug.txt"});
    REQUIRE(r.code == 0);
    const auto aug = read_corpus(dir / "aug.txt");
    REQUIRE(aug.size() == 10);
    CHECK(aug[0].id == "x");
    CHECK(aug[2].id == "x#transpose(+4)");
    CHECK(read_json(manifest_path(dir / "aug.txt"))["skipped_count"] == 0);

    CHECK(run({"augment", "--in", corpus, "--out", dir / "same.txt", "--transpose", "", "--tempo", ""}).code == 0);
    CHECK(read_text_file(dir / "same.txt") == read_text_file(corpus));

    write_corpus(corpus, {{"hi", tokenize_text("t_80 v_100 d_quarter_0 n_125 . \n")}});
    CHECK(run({"augment", "--in", corpus, "--out", dir / "hi.txt"}).code == 0);
    CHECK(read_corpus(dir / "hi.txt").size() == 4);
    const auto m = read_json(manifest_path(dir / "hi.txt"));
    CHECK(m["skipped_count"] == 1);
    CHECK(m["skipped"][0]["origin"] == "transpose(+4)");

    CHECK(run({"augment", "--in", corpus, "--out", dir / "bad.txt", "--transpose", "4,x"}).code == exit_data);
}

TEST_CASE("train-lm memorizes a repeated melody") {
    TempDir dir("train");
    std::vector<IdentifiedPiece> copies;
    for (int i = 0; i < 20; ++i) copies.push_back({"m" + std::to_string(i), encode(fixtures::overfit_piece())});
    write_corpus(dir / "c.txt", copies);
    const Run r = run({"train-lm", "--in", dir / "c.txt", "--out", dir / "m.bin", "--hidden", "64", "--epochs", "50",
                       "--lr", "3e-3", "--bptt", "16"});
    REQUIRE(r.code == 0);
    const auto report = read_json(dir / "m.bin.report.json");
    CHECK(report["final_heldout_loss"].get<double>() < 0.1);
    CHECK(report["epoch_train_loss"].size() == 50);
    CHECK(report["config"]["hidden_dim"] == 64);
}

TEST_CASE("end to end scoring and replay") {
    TempDir dir("e2e");
    REQUIRE(run({"synth-corpus", "--out", dir / "syn", "--n", "12", "--seed", "3"}).code == 0);
    const std::string ai = dir / "syn/ai.txt", comp = dir / "syn/composer.txt";
    REQUIRE(run({"train-lm", "--in", ai, "--in", comp, "--out", dir / "m.bin", "--embed", "8", "--hidden", "12",
                 "--epochs", "1"})
                .code == 0);
    REQUIRE(run({"extract", "--model", dir / "m.bin", "--in", ai, "--out", dir / "ai.csv"}).code == 0);
    REQUIRE(run({"extract", "--model", dir / "m.bin", "--in", comp, "--out", dir / "comp.csv"}).code == 0);
    REQUIRE(run({"train-clf", "--ai", dir / "ai.csv", "--composer", dir / "comp.csv", "--out", dir / "clf.json"}).code == 0);
    REQUIRE(run({"cross-validate", "--ai", dir / "ai.csv", "--composer", dir / "comp.csv", "--out", dir / "cv.txt",
                 "--folds", "4"})
                .code == 0);
    CHECK(line_count(dir / "cv.txt.folds.csv") == 5);

    const Run sc = run({"score", "--model", dir / "m.bin", "--clf", dir / "clf.json", "--in", ai, "--out", dir / "s.csv"});
    REQUIRE(sc.code == 0);
    CHECK(line_count(dir / "s.csv") == 13);
    CHECK(line_count(dir / "s.csv.errors.csv") == 1);

    const std::string before = read_text_file(dir / "s.csv");
    for (const std::string primary : {dir / "syn/synth-corpus", dir / "m.bin", dir / "ai.csv", dir / "clf.json",
                                      dir / "cv.txt", dir / "s.csv"}) {
        CAPTURE(primary);
        const Run rep = run({"replay", "--manifest", manifest_path(primary)});
        CHECK(rep.code == 0);
        CHECK(rep.out.find("CHANGED") == std::string::npos);
    }
    CHECK(read_text_file(dir / "s.csv") == before);

    // A hand-edited output is reported.
    write_text_file(dir / "s.csv", "tampered\n");
    auto m = read_json(manifest_path(dir / "s.csv"));
    m["outputs"][0]["fnv1a"] = "0000000000000000";
    write_text_file(dir / "edited.json", m.dump());
    CHECK(run({"replay", "--manifest", dir / "edited.json"}).code == exit_replay_mismatch);
}

TEST_CASE("usage and io exit codes") {
    CHECK(run({}).code == exit_usage);
    CHECK(run({"frobnicate"}).code == exit_usage);
    CHECK(run({"encode", "--in", "x"}).code == exit_usage);
    CHECK(run({"train-lm", "--in", "/nonexistent/c.txt", "--out", "/tmp/x.bin"}).code == exit_io);
    CHECK(run({"replay", "--manifest", "/nonexistent/m.json"}).code == exit_io);
    CHECK(run({"--help"}).code == exit_ok);
}
