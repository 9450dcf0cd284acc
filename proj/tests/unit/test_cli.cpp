#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "segforge/app/commands.hpp"
#include "segforge/app/config.hpp"
#include "segforge/app/synthdata.hpp"
#include "segforge/errors.hpp"
#include "segforge/interp.hpp"

using namespace segforge;
using namespace segforge::app;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("segforge_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::string& command, const std::string& ini, const std::vector<std::string>& overrides = {}) {
    auto cfg = Config::parse(ini);
    for (const auto& o : overrides) cfg.apply_override(o);
    std::ostringstream out, err;
    Run r;
    r.code = run_command(command, cfg, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Runs the installed binary through the shell and returns its exit status.
int run_binary(const std::string& args) {
    const std::string cmd = std::string(SEGFORGE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string synth_ini(const fs::path& dir, const std::string& extra = "") {
    return "[synthdata]\nclasses = 3\njoints = 6\ntrain_sequences = 2\ntest_sequences = 2\n"
           "train_class_order = 0,1,2\nseed = 4\noutput_dir = " +
           dir.string() + "\n" + extra;
}

std::vector<std::vector<double>> read_log(const fs::path& csv) {
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,cls,tmse,ctc,total");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing, overrides and resolved echo") {
    auto cfg = Config::parse("[a]\nx = 1\ny = hello\n[b]\nlist = 1, 2 ,3\nflag = yes\n");
    cfg.apply_override("a.x=7");
    CHECK(cfg.get_int("a.x", 0) == 7);
    CHECK(cfg.get_string("a.y", "") == "hello");
    CHECK(cfg.get_double_list("b.list", {}) == std::vector<double>{1, 2, 3});
    CHECK(cfg.get_bool("b.flag", false));
    CHECK(cfg.get_double("c.missing", 0.25) == 0.25);
    const auto echo = cfg.format_resolved();
    CHECK(echo.find("[a]") < echo.find("[b]"));
    CHECK(echo.find("missing = 0.25") != std::string::npos);
    CHECK_NOTHROW(cfg.check_all_used());
    cfg.set("z.unused", "1");
    CHECK_THROWS_AS(cfg.check_all_used(), ValidationError);
    CHECK_THROWS_AS(cfg.apply_override("noequals"), ValidationError);
    auto bad = Config::parse("[a]\nx = one\n");
    CHECK_THROWS_AS(bad.get_int("a.x", 0), ValidationError);
    CHECK(split_list(" a, ,b ") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("toy data is deterministic, loadable and separated") {
    const auto a = fresh_dir("synth_a"), b = fresh_dir("synth_b");
    REQUIRE(run("synthdata", synth_ini(a)).code == kExitOk);
    REQUIRE(run("synthdata", synth_ini(b)).code == kExitOk);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file() || e.path().extension() != ".json") continue;
        CHECK(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)));
        ++files;
    }
    CHECK(files == 4u);
    CHECK(fs::exists(a / "synthdata.resolved.ini"));
    const auto train = load_sequences({(a / "train.list").string()});
    REQUIRE(train.size() == 2u);
    for (const auto& s : train) {
        CHECK(s.joint_count == 6);
        CHECK(s.labels.front() == 0);
        CHECK(s.labels.back() == 2);
        CHECK(extract_primitives(s).size() == 3u);
    }

    // separation recomputed from the motion family
    ToySpec spec;
    const auto fam = motion_family(spec);
    double closest = 1e9;
    for (int c1 = 0; c1 < spec.classes; ++c1) {
        for (int c2 = c1 + 1; c2 < spec.classes; ++c2) {
            double s = 0.0;
            int n = 0;
            for (int j = 0; j < spec.joints; ++j) {
                for (int i = 0; i < 60; ++i) {
                    const double t = i / 30.0;
                    s += rotation_angle_between(joint_rotation(fam[c1][j], t), joint_rotation(fam[c2][j], t));
                    ++n;
                }
            }
            closest = std::min(closest, s / n);
        }
    }
    CHECK(closest > spec.noise);
    CHECK(class_separation(spec) == doctest::Approx(closest).epsilon(0.05));
}

TEST_CASE("degenerate toy specs are rejected") {
    ToySpec s;
    s.classes = 1;
    CHECK_THROWS_AS(generate_toy_dataset(s), ValidationError);
    s = {};
    s.min_length = 40;
    CHECK_THROWS_AS(generate_toy_dataset(s), ValidationError);
    s = {};
    s.noise = 10.0;
    CHECK_THROWS_AS(generate_toy_dataset(s), ValidationError);
    s = {};
    s.train_class_order = {0, 5};
    CHECK_THROWS_AS(generate_toy_dataset(s), ValidationError);
}

TEST_CASE("augment, train, eval and inspect") {
    const auto root = fresh_dir("pipeline");
    REQUIRE(run("synthdata", synth_ini(root / "data")).code == kExitOk);
    const std::string aug = "[augment]\nsources = " + (root / "data/train.list").string() +
                            "\nselection = sample\ncount = 5\nseed = 3\ntransition_frames = 4\n";
    const auto a1 = run("augment", aug, {"augment.output_dir=" + (root / "aug1").string()});
    REQUIRE(a1.code == kExitOk);
    CHECK(a1.out.find("M^n=8") != std::string::npos);
    REQUIRE(run("augment", aug, {"augment.output_dir=" + (root / "aug2").string()}).code == kExitOk);
    CHECK(slurp(root / "aug1/manifest.jsonl") == slurp(root / "aug2/manifest.jsonl"));
    CHECK(load_sequences({(root / "aug1/sequences.list").string()}).size() == 5u);
    CHECK(fs::exists(root / "aug1/augment.resolved.ini"));

    const std::string train = "[data]\ntrain = " + (root / "aug1/sequences.list").string() +
                              "\n[model]\nfilters = 6\nlayers_per_stage = 2\n[train]\nepochs = 6\nbatch_size = 2\n"
                              "seed = 2\n[optim]\nlr = 0.01\n";
    REQUIRE(run("train", train, {"train.output_dir=" + (root / "t1").string()}).code == kExitOk);
    REQUIRE(run("train", train, {"train.output_dir=" + (root / "t2").string()}).code == kExitOk);
    CHECK(slurp(root / "t1/checkpoint.ckpt") == slurp(root / "t2/checkpoint.ckpt"));
    const auto log = read_log(root / "t1/train_log.csv");
    REQUIRE(log.size() == 6u);
    CHECK(log.back()[4] < log.front()[4]);
    for (const auto& row : log) CHECK(std::abs(row[4] - (row[1] + 0.15 * row[2] + 0.0005 * row[3])) < 1e-9);

    REQUIRE(run("train", train,
                {"train.output_dir=" + (root / "t3").string(), "loss.lambda=0", "loss.mu=0", "train.epochs=2"})
                .code == kExitOk);
    for (const auto& row : read_log(root / "t3/train_log.csv")) CHECK(row[4] == row[1]);

    const std::string eval = "[data]\ntest = " + (root / "data/test.list").string() +
                             "\n[eval]\ncheckpoint = " + (root / "t1/checkpoint.ckpt").string() + "\n";
    const auto e = run("eval", eval, {"eval.output_dir=" + (root / "e1").string()});
    REQUIRE(e.code == kExitOk);
    CHECK(e.out.find("F1@50") != std::string::npos);
    const auto csv = slurp(root / "e1/metrics.csv");
    CHECK(csv.rfind("name,sequences,frames,acc,", 0) == 0);
    CHECK(csv.find("\npooled,") != std::string::npos);
    CHECK(fs::exists(root / "e1/eval.resolved.ini"));

    const auto o = run("eval", eval, {"eval.output_dir=" + (root / "e2").string(), "eval.oracle=true"});
    REQUIRE(o.code == kExitOk);
    const auto kv = slurp(root / "e2/metrics.txt");
    for (const char* key : {"acc=1\n", "f1@10=1\n", "f1@25=1\n", "f1@50=1\n"}) {
        CHECK(kv.find(key) != std::string::npos);
    }

    const auto ins = run("inspect", "[inspect]\npath = " + (root / "t1/checkpoint.ckpt").string() + "\n");
    CHECK(ins.code == kExitOk);
    CHECK(ins.out.find("model.classes = 3") != std::string::npos);
    CHECK(ins.out.find("# resolved config") != std::string::npos);
    CHECK(run("inspect", "[inspect]\npath = " + (root / "aug1/manifest.jsonl").string() + "\n")
              .out.find("records = 5") != std::string::npos);

    // missing checkpoint
    CHECK(run("eval", eval,
              {"eval.output_dir=" + (root / "e3").string(), "eval.checkpoint=" + (root / "nope.ckpt").string()})
              .code == kExitValidation);
}

TEST_CASE("validation failures map to exit code 2") {
    const auto root = fresh_dir("exits");
    // recordings whose class order differs cannot be slotted
    auto ini = synth_ini(root / "data");
    ini.replace(ini.find("train_class_order = 0,1,2"), 25, "train_class_order =");
    REQUIRE(run("synthdata", ini, {"synthdata.seed=11", "synthdata.train_sequences=4"}).code == kExitOk);
    const auto train = load_sequences({(root / "data/train.list").string()});
    bool differ = false;
    for (const auto& s : train) {
        std::vector<int> order;
        for (const auto& p : extract_primitives(s)) order.push_back(p.class_id);
        std::vector<int> first;
        for (const auto& p : extract_primitives(train[0])) first.push_back(p.class_id);
        differ |= order != first;
    }
    REQUIRE(differ);
    const auto r = run("augment", "[augment]\nsources = " + (root / "data/train.list").string() +
                                      "\noutput_dir = " + (root / "aug").string() + "\n");
    CHECK(r.code == kExitValidation);
    CHECK_FALSE(r.err.empty());

    CHECK(run("synthdata", synth_ini(root / "d2"), {"synthdata.colour=red"}).code == kExitValidation);
    CHECK(run("frobnicate", "").code == kExitValidation);
    CHECK(run("synthdata", synth_ini(root / "d3"), {"synthdata.classes=1"}).code == kExitValidation);
}

TEST_CASE("binary entry point") {
    const auto root = fresh_dir("binary");
    const auto ini = root / "s.ini";
    std::ofstream(ini) << synth_ini(root / "data");
    CHECK(run_binary("synthdata --config " + ini.string()) == 0);
    CHECK(fs::exists(root / "data/test.list"));
    CHECK(run_binary("synthdata --config " + ini.string() + " --set synthdata.bogus=1") == 2);
    CHECK(run_binary("synthdata --config " + (root / "missing.ini").string()) == 2);
    CHECK(run_binary("explode --config " + ini.string()) == 2);
    CHECK(run_binary("--help") == 0);
    std::ofstream(root / "e.ini") << "[data]\ntest = " << (root / "data/test.list").string()
                                  << "\n[eval]\ncheckpoint = " << (root / "none.ckpt").string()
                                  << "\noutput_dir = " << (root / "ev").string() << "\n";
    CHECK(run_binary("eval --config " + (root / "e.ini").string()) == 2);
}

}  // TEST_SUITE
