#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "shiftgan/dataset.hpp"
#include "shiftgan/flow.hpp"
#include "shiftgan/image.hpp"

using namespace shiftgan;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "shiftgan_cli_tests";

struct Workspace {
    Workspace() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};
Workspace workspace_once;

std::string ws(const std::string& rel) { return (kWork / rel).string(); }

int run(const std::string& args, const std::string& tag = "run") {
    std::string cmd = std::string(SHIFTGAN_BIN) + " " + args + " >" + ws(tag + ".out") +
                      " 2>" + ws(tag + ".err");
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

bool same_bytes(const std::string& a, const std::string& b) { return slurp(a) == slurp(b); }

// tiny-model overrides shared by the training invocations
const char* kTinyNets =
    " --set gen_stem=4 --set gen_down=8,12 --set gen_res_blocks=1"
    " --set disc_widths=8,12 --set disc_last=16";

} // namespace

TEST_CASE("gen-data: static pair, constant flow files, seeded reproducibility") {
    REQUIRE(run("gen-data --pattern checker --frames 2 --velocity 0,0 --size 24 --seed 3 "
                "--out " + ws("static"), "gen_static") == 0);
    Image f0 = load_image(ws("static/trainA/frame_0000.png"));
    Image f1 = load_image(ws("static/trainA/frame_0001.png"));
    CHECK(f0.data == f1.data);
    FlowField zero = read_flo(ws("static/flow/frame_0000.flo"));
    for (float v : zero.vectors) CHECK(v == 0.0f);
    CHECK(fs::exists(ws("static/manifest.json")));

    REQUIRE(run("gen-data --pattern checker --frames 8 --velocity 1,0 --size 24 --seed 3 "
                "--out " + ws("moving"), "gen_moving") == 0);
    int flo_count = 0;
    for (auto& entry : fs::directory_iterator(ws("moving/flow"))) {
        FlowField f = read_flo(entry.path().string());
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) {
                CHECK(f.dx(y, x) == -1.0f);
                CHECK(f.dy(y, x) == 0.0f);
            }
        ++flo_count;
    }
    CHECK(flo_count == 7);

    // same seed, same bytes
    REQUIRE(run("gen-data --pattern checker --frames 8 --velocity 1,0 --size 24 --seed 3 "
                "--out " + ws("moving2"), "gen_moving2") == 0);
    CHECK(same_bytes(ws("moving/trainA/frame_0003.png"), ws("moving2/trainA/frame_0003.png")));
    CHECK(same_bytes(ws("moving/flow/frame_0002.flo"), ws("moving2/flow/frame_0002.flo")));

    // refuses to clobber without --force
    CHECK(run("gen-data --pattern checker --frames 2 --velocity 0,0 --size 24 --out " +
              ws("moving"), "gen_clobber") != 0);
    CHECK(slurp(ws("gen_clobber.err")).find("error: config") != std::string::npos);
    CHECK(run("gen-data --pattern checker --frames 2 --velocity 0,0 --size 24 --force --out " +
              ws("moving"), "gen_force") == 0);
}

TEST_CASE("train --dry-run prints the resolved config and writes nothing") {
    REQUIRE(run(std::string("train adapt --dry-run --seed 11 --set crop=40") + kTinyNets +
                " --out " + ws("dry_out"), "dry") == 0);
    std::string out = slurp(ws("dry.out"));
    CHECK(out.find("\"crop\": 40") != std::string::npos);
    CHECK(out.find("\"seed\": 11") != std::string::npos);
    CHECK(!fs::exists(ws("dry_out")));
}

TEST_CASE("train adapt: toy run produces checkpoint, log, manifest") {
    REQUIRE(run("gen-data --pattern shapes2 --count 8 --size 56 --seed 9 --out " + ws("corpus"),
                "gen_corpus") == 0);
    std::string train_args = std::string("train adapt --seed 7") + kTinyNets +
                             " --set crop=40 --set iterations=3 --set lambda_sem=0"
                             " --set lambda_shift=1000 --set data=" + ws("corpus");
    REQUIRE(run(train_args + " --out " + ws("adapt_run"), "train_adapt") == 0);
    CHECK(fs::exists(ws("adapt_run/final.ckpt")));
    CHECK(fs::exists(ws("adapt_run/train_log.csv")));
    CHECK(fs::exists(ws("adapt_run/manifest.json")));
    std::string log = slurp(ws("adapt_run/train_log.csv"));
    CHECK(log.find("shift_s2r") != std::string::npos);

    // identical seed: bitwise identical logs and checkpoints
    REQUIRE(run(train_args + " --out " + ws("adapt_run2"), "train_adapt2") == 0);
    CHECK(same_bytes(ws("adapt_run/train_log.csv"), ws("adapt_run2/train_log.csv")));
    CHECK(same_bytes(ws("adapt_run/final.ckpt"), ws("adapt_run2/final.ckpt")));
}

TEST_CASE("translate: empty dir warns, full dir preserves names and sizes, deterministic") {
    fs::create_directories(ws("empty_in"));
    REQUIRE(run("translate --checkpoint " + ws("adapt_run/final.ckpt") + " --in " +
                ws("empty_in") + " --out " + ws("empty_out"), "tr_empty") == 0);
    CHECK(slurp(ws("tr_empty.err")).find("warning") != std::string::npos);
    CHECK(list_images(ws("empty_out")).empty());

    REQUIRE(run("translate --checkpoint " + ws("adapt_run/final.ckpt") + " --in " +
                ws("corpus/trainB") + " --out " + ws("translated"), "tr_full") == 0);
    DomainDataset in = DomainDataset::open_dir(ws("corpus/trainB"));
    DomainDataset out = DomainDataset::open_dir(ws("translated"));
    REQUIRE(in.size() == out.size());
    for (size_t i = 0; i < in.size(); ++i) {
        CHECK(in.name(i) == out.name(i));
        Image a = in.image(i), b = out.image(i);
        CHECK(a.height == b.height);
        CHECK(a.width == b.width);
    }

    REQUIRE(run("translate --checkpoint " + ws("adapt_run/final.ckpt") + " --in " +
                ws("corpus/trainB") + " --out " + ws("translated2"), "tr_again") == 0);
    CHECK(same_bytes(ws("translated/frame_0000.png"), ws("translated2/frame_0000.png")));
    CHECK(same_bytes(ws("translated/frame_0005.png"), ws("translated2/frame_0005.png")));
}

TEST_CASE("probe-shift: table plus panels") {
    REQUIRE(run("probe-shift --checkpoint " + ws("adapt_run/final.ckpt") + " --image " +
                ws("corpus/trainB/frame_0000.png") +
                " --max-shift 3 --axis X --policy overlap-crop --out " + ws("probe"),
                "probe") == 0);
    std::string csv = slurp(ws("probe/probe.csv"));
    CHECK(csv.find("shift,axis,policy,mse") == 0);
    // d = 0 control plus 1..3
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 5);
    CHECK(fs::exists(ws("probe/d0_output_of_shifted.png")));
    CHECK(fs::exists(ws("probe/d3_shifted_output.png")));
}

TEST_CASE("train style: flow-less data rejects FF+flow; FF trains; eval-temporal ranks") {
    REQUIRE(run("gen-data --pattern checker --frames 4 --velocity 1,0 --size 32 --sequences 2 "
                "--seed 13 --strict-mask --out " + ws("seqs"), "gen_seqs") == 0);
    REQUIRE(run("gen-data --pattern stripes --frames 2 --velocity 0,0 --size 32 --seed 14 "
                "--out " + ws("style_src"), "gen_style") == 0);

    std::string style_common = std::string(" --set crop=32 --set iterations=3") + kTinyNets +
                               " --set policy=circular --set style_image=" +
                               ws("style_src/trainA/frame_0000.png");

    // FF+flow on flowless data: strip the flow dirs from a copy
    fs::create_directories(ws("seqs_noflow"));
    fs::copy(ws("seqs"), ws("seqs_noflow"), fs::copy_options::recursive);
    fs::remove_all(ws("seqs_noflow/seq_000/flow"));
    fs::remove_all(ws("seqs_noflow/seq_001/flow"));
    int rc = run("train style --seed 15 --set style_variant=FF+flow" + style_common +
                 " --set data=" + ws("seqs_noflow") + " --out " + ws("style_noflow"),
                 "style_noflow");
    CHECK(rc != 0);
    CHECK(slurp(ws("style_noflow.err")).find("error:") != std::string::npos);

    REQUIRE(run("train style --seed 15 --set style_variant=FF" + style_common +
                " --set data=" + ws("seqs") + " --out " + ws("style_ff"), "style_ff") == 0);
    CHECK(fs::exists(ws("style_ff/final.ckpt")));

    REQUIRE(run("eval-temporal --checkpoint " + ws("style_ff/final.ckpt") + " --checkpoint " +
                ws("style_ff/final.ckpt") + " --data " + ws("seqs") + " --out " + ws("eval"),
                "eval") == 0);
    std::string ranking = slurp(ws("eval/ranking.csv"));
    CHECK(ranking.find("rank,name,mean_e_temporal") == 0);
    CHECK(fs::exists(ws("eval/report.json")));
    // the duplicated checkpoint must tie with itself
    std::vector<std::string> lines;
    for (size_t pos = 0; pos < ranking.size();) {
        size_t nl = ranking.find('\n', pos);
        if (nl == std::string::npos) break;
        lines.push_back(ranking.substr(pos, nl - pos));
        pos = nl + 1;
    }
    REQUIRE(lines.size() == 3);
    std::string score1 = lines[1].substr(lines[1].rfind(',') + 1);
    std::string score2 = lines[2].substr(lines[2].rfind(',') + 1);
    CHECK(score1 == score2);
}

TEST_CASE("unknown config keys and malformed flags fail loudly") {
    CHECK(run("train adapt --dry-run --set no_such_key=1", "badkey") != 0);
    CHECK(slurp(ws("badkey.err")).find("error: config") != std::string::npos);
    CHECK(run("gen-data --pattern checker --velocity nonsense --out " + ws("badvel"),
              "badvel") != 0);
}
