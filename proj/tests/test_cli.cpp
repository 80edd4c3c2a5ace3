// End-to-end checks of the command-line tool: exit codes, reproducibility,
// and artifact layout. Each test shells out to the built binary.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <glearn/dataio.hpp>

using namespace glearn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("glearn_cli_" + std::to_string(std::rand()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(GLEARN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string run_capture(const std::string& args, const std::string& outfile) {
    const std::string cmd =
        std::string(GLEARN_CLI_PATH) + " " + args + " >" + outfile + " 2>/dev/null";
    std::system(cmd.c_str());
    return detail::read_file(outfile);
}

std::string slurp(const std::string& path) { return detail::read_file(path); }

}  // namespace

TEST_CASE("cli exit codes") {
    TempDir tmp;
    CHECK(run("") == 2);                       // missing subcommand
    CHECK(run("frobnicate") == 2);             // unknown subcommand
    CHECK(run("--help") == 0);
    CHECK(run("solve") == 2);                  // --data required
    CHECK(run("generate --graphs nosuch --train 1 -o " + tmp.file("x.gsld")) == 2);
    CHECK(run("generate --train 0 --val 0 --test 0 -o " + tmp.file("x.gsld")) == 2);
    CHECK(run("solve --data " + tmp.file("missing.gsld")) == 1);
    CHECK(run("solve --data " + tmp.file("ds.gsld") + " --method nosuch") == 2);
}

TEST_CASE("generate is deterministic and inspectable") {
    TempDir tmp;
    const std::string base =
        "generate --graphs er --n 12 --p 0.4 --signals diffuse --sigma 0.01 "
        "--num-signals 50 --train 3 --val 1 --test 1 --seed 7 -o ";
    REQUIRE(run(base + tmp.file("a.gsld")) == 0);
    REQUIRE(run(base + tmp.file("b.gsld")) == 0);
    CHECK((slurp(tmp.file("a.gsld")) == slurp(tmp.file("b.gsld"))));

    const std::string text =
        run_capture("inspect --data " + tmp.file("a.gsld"), tmp.file("inspect.txt"));
    nlohmann::json j = nlohmann::json::parse(text);
    CHECK(j["samples"] == 5);
    CHECK(j["n"] == 12);
    CHECK(j["p_signals"] == 50);
    CHECK(j["master_seed"] == 7);
    CHECK(j["splits"]["train"] == 3);
}

TEST_CASE("solve writes per-sample csv and aggregate report") {
    TempDir tmp;
    REQUIRE(run("generate --graphs er --n 8 --p 0.4 --signals diffuse --sigma 0 "
                "--diffuse-alpha 0 1 --num-signals 64 --train 2 --val 1 --test 1 "
                "--seed 3 -o " + tmp.file("ds.gsld")) == 0);
    const std::string out = tmp.file("solve_out");
    REQUIRE(run("solve --data " + tmp.file("ds.gsld") +
                " --method diffusion --beta 0.001 --record-trace --jobs 2 -o " + out) == 0);
    CHECK(fs::exists(out + "/solve.csv"));
    CHECK(fs::exists(out + "/report.json"));
    CHECK(fs::exists(out + "/run_config.json"));
    CHECK(fs::exists(out + "/objective_trace_000.csv"));

    std::ifstream csv(out + "/solve.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header.find("sample,iterations") == 0);
    int lines = 0;
    for (std::string line; std::getline(csv, line);) ++lines;
    CHECK(lines == 4);

    // reruns are byte-identical
    const std::string out2 = tmp.file("solve_out2");
    REQUIRE(run("solve --data " + tmp.file("ds.gsld") +
                " --method diffusion --beta 0.001 --record-trace -o " + out2) == 0);
    CHECK((slurp(out + "/solve.csv") == slurp(out2 + "/solve.csv")));
}

TEST_CASE("config file mirrors flags, flags win, unknown keys rejected") {
    TempDir tmp;
    {
        std::ofstream cfg(tmp.file("gen.json"));
        cfg << R"({"graphs":"er","n":10,"p":0.4,"signals":"diffuse","sigma":0.01,)"
            << R"("num_signals":30,"train":2,"val":1,"test":1,"seed":5,)"
            << R"("out":")" << tmp.file("c.gsld") << R"("})";
    }
    REQUIRE(run("generate --config " + tmp.file("gen.json")) == 0);

    // grab the echoed run_config before a later run overwrites it
    const std::string echoed = (fs::path(tmp.file("c.gsld")).parent_path() /
                                "run_config.json").string();
    REQUIRE(fs::exists(echoed));
    nlohmann::json echoed_cfg = nlohmann::json::parse(slurp(echoed));

    // flag overrides the file value
    REQUIRE(run("generate --config " + tmp.file("gen.json") + " --seed 6 -o " +
                tmp.file("d.gsld")) == 0);
    CHECK((slurp(tmp.file("c.gsld")) != slurp(tmp.file("d.gsld"))));

    // rerun from the echoed run_config reproduces the output byte for byte
    {
        echoed_cfg.erase("command");
        echoed_cfg["out"] = tmp.file("e.gsld");
        std::ofstream cfg(tmp.file("rerun.json"));
        cfg << echoed_cfg.dump();
    }
    REQUIRE(run("generate --config " + tmp.file("rerun.json")) == 0);
    CHECK((slurp(tmp.file("c.gsld")) == slurp(tmp.file("e.gsld"))));

    {
        std::ofstream cfg(tmp.file("bad.json"));
        cfg << R"({"train":1,"nonsense_key":3})";
    }
    CHECK(run("generate --config " + tmp.file("bad.json")) == 2);
}

TEST_CASE("train then eval round trip") {
    TempDir tmp;
    REQUIRE(run("generate --graphs er --n 8 --p 0.4 --signals diffuse --sigma 0.01 "
                "--num-signals 50 --train 4 --val 2 --test 2 --seed 11 -o " +
                tmp.file("ds.gsld")) == 0);
    const std::string out = tmp.file("train_out");
    REQUIRE(run("train --data " + tmp.file("ds.gsld") +
                " --method diffusion --depth 3 --epochs 4 --lr 1e-3 --batch 2 "
                "--seed 1 -o " + out) == 0);
    CHECK(fs::exists(out + "/model.json"));
    CHECK(fs::exists(out + "/epochs.csv"));
    CHECK(fs::exists(out + "/report.json"));

    std::ifstream csv(out + "/epochs.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "epoch,train_loss,val_loss,seconds");
    int lines = 0;
    for (std::string line; std::getline(csv, line);) ++lines;
    CHECK(lines == 4);

    const std::string evout = tmp.file("eval_out");
    REQUIRE(run("eval --data " + tmp.file("ds.gsld") + " --checkpoint " + out +
                "/model.json --split test --dump-intermediates 0 -o " + evout) == 0);
    CHECK(fs::exists(evout + "/eval.json"));
    CHECK(fs::exists(evout + "/eval.csv"));
    CHECK(fs::exists(evout + "/intermediates/layer_000.csv"));
    CHECK(fs::exists(evout + "/intermediates/layer_003.pgm"));

    // evaluating twice gives identical reports
    const std::string evout2 = tmp.file("eval_out2");
    REQUIRE(run("eval --data " + tmp.file("ds.gsld") + " --checkpoint " + out +
                "/model.json --split test -o " + evout2) == 0);
    CHECK((slurp(evout + "/eval.csv") == slurp(evout2 + "/eval.csv")));

    // method mismatch between checkpoint and --method is a schema error at load,
    // but eval reads the method from the checkpoint, so a glad dataset works too
    CHECK(run("eval --data " + tmp.file("ds.gsld") + " --checkpoint " +
              tmp.file("nope.json") + " -o " + tmp.file("x")) == 1);
}

TEST_CASE("gridsearch leaderboard") {
    TempDir tmp;
    // hand-build a dataset whose similarity is exactly the planted adjacency:
    // the K=1 no-shrinkage regime, where beta near 0 must win
    {
        GraphEnsembleSpec gs;
        gs.ensemble = GraphEnsemble::er;
        gs.n = 8;
        gs.er_p = 0.4;
        gs.seed = 21;
        SignalModelSpec ss;
        ss.model = SignalModel::diffuse;
        ss.p_signals = 4;
        Dataset ds = build_dataset(gs, ss, SimilarityKind::covariance, 1, 2, 1);
        for (Sample& smp : ds.samples)
            smp.s = SimilarityMatrix{smp.a.n, smp.a.w, SimilarityKind::covariance};
        write_dataset(ds, tmp.file("ds.gsld"));
    }
    const std::string out = tmp.file("grid_out");
    REQUIRE(run("gridsearch --data " + tmp.file("ds.gsld") +
                " --method diffusion --poly-alpha 0 1 --beta 1e-6 0.05 0.5 "
                "--metric relative_frobenius_error --jobs 2 -o " + out) == 0);
    REQUIRE(fs::exists(out + "/leaderboard.csv"));
    REQUIRE(fs::exists(out + "/best.json"));

    nlohmann::json best = nlohmann::json::parse(slurp(out + "/best.json"));
    CHECK(best["hyperparams"]["beta"].get<double>() == 1e-6);

    // in the same regime a plain solve recovers the graph almost exactly
    const std::string sout = tmp.file("solve_exact");
    REQUIRE(run("solve --data " + tmp.file("ds.gsld") +
                " --method diffusion --poly-alpha 0 1 --beta 1e-9 -o " + sout) == 0);
    nlohmann::json rep = nlohmann::json::parse(slurp(sout + "/report.json"));
    CHECK(rep["mean"]["relative_frobenius_error"].get<double>() <= 1e-4);

    std::ifstream csv(out + "/leaderboard.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "rank,alpha,beta,gamma,lambda,rho,relative_frobenius_error");
    int lines = 0;
    for (std::string line; std::getline(csv, line);) ++lines;
    CHECK(lines == 3);
}
