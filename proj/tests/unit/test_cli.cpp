#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../cli_run.hpp"
#include "support.hpp"
#include "urbanmap/raster.hpp"

#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string cli() {
    const char* p = std::getenv("URBANMAP_CLI");
    REQUIRE_MESSAGE(p != nullptr, "URBANMAP_CLI is not set");
    return p;
}

int lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    testing::TempDir dir("cli");
    CHECK(cli_run::run(cli(), {"synth", "--n", "0", "--out", (dir / "c").string()}).exit_code == 2);
    CHECK(cli_run::run(cli(), {"synth"}).exit_code == 2);
    CHECK(cli_run::run(cli(), {"nonsense"}).exit_code == 2);
    CHECK(cli_run::run(cli(), {"--help"}).exit_code == 0);
}

TEST_CASE("runtime errors exit with 1") {
    testing::TempDir dir("cli");
    CHECK(cli_run::run(cli(), {"resample", "--mask", (dir / "missing.pgm").string(), "--out", (dir / "o.pgm").string()})
              .exit_code == 1);
}

TEST_CASE("synth, evaluate and resample") {
    testing::TempDir dir("cli");
    const fs::path corpus = dir / "c";
    REQUIRE(cli_run::run(cli(), {"synth", "--n", "3", "--size", "32", "--tiles", "2", "--seed", "4", "--out",
                                 corpus.string()})
                .exit_code == 0);
    CHECK(fs::exists(corpus / "run_manifest.txt"));
    CHECK(testing::read_text(corpus / "run_manifest.txt").find("dataset_hash=") != std::string::npos);

    // Ground truth against itself.
    const fs::path csv = dir / "eval.csv";
    REQUIRE(cli_run::run(cli(), {"evaluate", "--pred", (corpus / "masks").string(), "--truth",
                                 (corpus / "masks").string(), "--csv", csv.string()})
                .exit_code == 0);
    std::istringstream in(testing::read_text(csv));
    std::string line;
    std::getline(in, line);
    CHECK(line == "scene,tp,fp,fn,tn,precision,recall,f1,iou,oa");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        REQUIRE(line.size() > 10);
        CHECK(line.substr(line.size() - 10) == ",1,1,1,1,1");
    }
    CHECK(rows == 3 + 2);

    const fs::path tile_truth = corpus / "tiles_truth";
    REQUIRE(fs::exists(tile_truth));
    fs::path first;
    for (const auto& e : fs::directory_iterator(tile_truth))
        if (e.path().extension() == ".pgm") first = e.path();
    REQUIRE(!first.empty());
    const fs::path small = dir / "small.pgm";
    REQUIRE(cli_run::run(cli(), {"resample", "--mask", first.string(), "--factor", "10", "--out", small.string()})
                .exit_code == 0);
    const auto in_r = urbanmap::read_image(first), out_r = urbanmap::read_image(small);
    CHECK(out_r.width == (in_r.width + 9) / 10);
    CHECK(out_r.height == (in_r.height + 9) / 10);
    REQUIRE(out_r.geo.has_value());
    CHECK(out_r.geo->pixel_w == in_r.geo->pixel_w * 10);
}

TEST_CASE("train writes one curve row per epoch and is reproducible") {
    testing::TempDir dir("cli");
    const fs::path corpus = dir / "c";
    REQUIRE(cli_run::run(cli(), {"synth", "--n", "4", "--size", "32", "--tiles", "0", "--out", corpus.string()})
                .exit_code == 0);
    const std::vector<std::string> common = {"--data", corpus.string(), "--epochs1", "1", "--epochs2", "1", "--target",
                                             "16", "--base", "2", "--depth", "2", "--batch", "2", "--seed", "9"};
    auto with_out = [&](const fs::path& out) {
        auto a = common;
        a.insert(a.begin(), "train");
        a.push_back("--out");
        a.push_back(out.string());
        return a;
    };
    REQUIRE(cli_run::run(cli(), with_out(dir / "m1")).exit_code == 0);
    REQUIRE(cli_run::run(cli(), with_out(dir / "m2")).exit_code == 0);
    CHECK(lines(testing::read_text(dir / "m1" / "pass1" / "curve.csv")) == 2);
    CHECK(cli_run::snapshot(dir / "m1") == cli_run::snapshot(dir / "m2"));

    const auto curves = cli_run::run(cli(), {"curves", "--model", (dir / "m1").string()});
    CHECK(curves.exit_code == 0);
    CHECK(curves.out.rfind("pass,epoch,train_loss,val_loss,val_f1,val_oa,best\n", 0) == 0);
    CHECK(lines(curves.out) == 3);
}

TEST_CASE("command-line flags override the config file") {
    testing::TempDir dir("cli");
    testing::write_text(dir / "run.cfg", "n=2\nsize=32\ntiles=0\n");
    REQUIRE(cli_run::run(cli(), {"synth", "--config", (dir / "run.cfg").string(), "--n", "3", "--out",
                                 (dir / "c").string()})
                .exit_code == 0);
    int images = 0;
    for (const auto& e : fs::directory_iterator(dir / "c" / "images")) images += e.path().extension() == ".ppm";
    CHECK(images == 3);
    CHECK(urbanmap::read_image(dir / "c" / "images" / fs::directory_iterator(dir / "c" / "images")->path().filename())
              .width == 32);

    testing::write_text(dir / "bad.cfg", "bogus=1\n");
    CHECK(cli_run::run(cli(), {"synth", "--config", (dir / "bad.cfg").string(), "--out", (dir / "d").string()})
              .exit_code == 2);
}
