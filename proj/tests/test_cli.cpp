#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "treelab/cli.hpp"
#include "treelab/io.hpp"

using namespace treelab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

int run(std::initializer_list<std::string> args) {
    return cli_main(std::vector<std::string>(args));
}

}  // namespace

TEST_CASE("certify writes the expected artifact") {
    TempDir tmp("treelab_cli_certify");
    CHECK(run({"certify", "--C", "1", "--p", "2", "--out", tmp.sub("cert")}) == 0);
    Json cert = read_json_file(tmp.path / "cert" / "certificate.json");
    CHECK(cert.at("a").get<long long>() == 5);
    CHECK(cert.at("m").get<long long>() == 5);
    CHECK(cert.at("N").get<std::string>() == "15625");
    CHECK(cert.at("contradiction").get<bool>());
    Json manifest = read_json_file(tmp.path / "cert" / "manifest.json");
    CHECK(manifest.at("command").get<std::string>() == "certify");
    CHECK(manifest.at("artifacts").size() == 1);
}

TEST_CASE("embed then distortion reports the canonical isometry") {
    TempDir tmp("treelab_cli_embed");
    CHECK(run({"embed", "--construction", "l1", "--depth", "3", "--branching", "2", "--out",
               tmp.sub("emb")}) == 0);
    CHECK(run({"distortion", "--embedding", tmp.sub("emb"), "--out", tmp.sub("dist")}) == 0);
    Json report = read_json_file(tmp.path / "dist" / "distortion.json");
    CHECK(report.at("distortion").get<double>() == 1.0);
    CHECK(report.at("mode").get<std::string>() == "exhaustive");
    CHECK(report.contains("seed"));
    CHECK(report.contains("tolerance"));
}

TEST_CASE("gen-tree depth 0 gives a single-node artifact") {
    TempDir tmp("treelab_cli_gentree");
    CHECK(run({"gen-tree", "--depth", "0", "--branching", "5", "--out", tmp.sub("t")}) == 0);
    Json tree = read_json_file(tmp.path / "t" / "tree.json");
    CHECK(tree.at("node_count").get<int>() == 1);
    CHECK(tree.at("depth").get<int>() == 0);
}

TEST_CASE("manifests rerun byte-identically") {
    TempDir tmp("treelab_cli_rerun");
    CHECK(run({"embed", "--construction", "glued", "--depth", "4", "--branching", "2", "--out",
               tmp.sub("emb")}) == 0);
    CHECK(run({"rerun", "--manifest", tmp.sub("emb") + "/manifest.json", "--out",
               tmp.sub("emb2")}) == 0);
    Json report = read_json_file(tmp.path / "emb2" / "rerun_report.json");
    CHECK(report.at("reproduced").get<bool>());
    // Bytes, not just checksums.
    CHECK(read_text_file(tmp.path / "emb" / "embedding.csv") ==
          read_text_file(tmp.path / "emb2" / "embedding.csv"));
}

TEST_CASE("config errors exit 2 with a machine-readable marker") {
    TempDir tmp("treelab_cli_err");
    CHECK(run({"certify", "--C", "1", "--p", "0.5", "--out", tmp.sub("bad")}) == 2);
    CHECK(fs::exists(tmp.path / "bad" / "error.json"));
    Json err = read_json_file(tmp.path / "bad" / "error.json");
    CHECK(err.at("error").get<std::string>() == "config");
    // Unknown flags are config errors too.
    CHECK(run({"certify", "--nope", "1"}) == 2);
    // Missing subcommand.
    CHECK(run({}) == 2);
}

TEST_CASE("invariant violations exit 3") {
    TempDir tmp("treelab_cli_inv");
    // Hand-built embedding with two equal images: the distortion scan must
    // reject it as non-injective.
    fs::create_directories(tmp.path / "emb");
    write_text_file(tmp.path / "emb" / "embedding.csv", "\n1,1,1\n2,1,1\n");
    Json side;
    side["construction"] = "l1";
    side["params"] = Json::object();
    side["target"] = Json{{"norm", "lp"}, {"p", 1.0}};
    side["nodes"] = Json::array({Json::array(), Json::array({1}), Json::array({2})});
    write_json_file(tmp.path / "emb" / "provenance.json", side);
    CHECK(run({"distortion", "--embedding", tmp.sub("emb"), "--out", tmp.sub("d")}) == 3);
    Json err = read_json_file(tmp.path / "d" / "error.json");
    CHECK(err.at("error").get<std::string>() == "invariant");
}

TEST_CASE("capacity errors exit 4") {
    TempDir tmp("treelab_cli_cap");
    CHECK(run({"gen-system", "--leveled-segmented", "--levels", "4", "--K", "2", "--schedule",
               "zero", "--out", tmp.sub("cap")}) == 4);
}

TEST_CASE("filtration command emits the w table and counting report") {
    TempDir tmp("treelab_cli_filt");
    CHECK(run({"embed", "--construction", "l1", "--depth", "3", "--branching", "2", "--out",
               tmp.sub("emb")}) == 0);
    CHECK(run({"filtration", "--embedding", tmp.sub("emb"), "--a", "2", "--mode", "truncate",
               "--C", "1", "--p", "2", "--out", tmp.sub("filt")}) == 0);
    Json filt = read_json_file(tmp.path / "filt" / "filtration.json");
    CHECK(filt.at("reconstruction_error").get<double>() == 0.0);
    std::string csv = read_text_file(tmp.path / "filt" / "wtable.csv");
    CHECK(csv.rfind("branch,j,k,norm\n", 0) == 0);
    Json counting = read_json_file(tmp.path / "filt" / "counting.json");
    CHECK(counting.at("upper_holds").get<bool>());
}

TEST_CASE("coarse-moduli command") {
    TempDir tmp("treelab_cli_moduli");
    CHECK(run({"embed", "--construction", "dual", "--depth", "3", "--branching", "2", "--out",
               tmp.sub("emb")}) == 0);
    CHECK(run({"coarse-moduli", "--embedding", tmp.sub("emb"), "--t-grid", "1:6:1",
               "--theta-grid", "1,2,3", "--out", tmp.sub("mod")}) == 0);
    Json moduli = read_json_file(tmp.path / "mod" / "moduli.json");
    CHECK(moduli.at("omega").size() == 6);
    CHECK(moduli.at("l_theta").size() == 3);
    CHECK(moduli.at("l_infinity_is_grid_min").get<bool>());
}

TEST_CASE("concentration command records both comparisons") {
    TempDir tmp("treelab_cli_conc");
    CHECK(run({"concentration", "--model", "l1", "--k", "3", "--n", "12", "--C", "1", "--p",
               "2", "--budget", "2000", "--seed", "7", "--out", tmp.sub("conc")}) == 0);
    Json conc = read_json_file(tmp.path / "conc" / "concentration.json");
    CHECK(conc.at("heuristic").get<bool>());
    CHECK(conc.at("met").get<bool>());
    CHECK_FALSE(conc.at("james_contradictory").get<bool>());
}

TEST_CASE("optimize command writes run, trace and positions") {
    TempDir tmp("treelab_cli_opt");
    CHECK(run({"optimize", "--tree-depth", "2", "--branching", "2", "--p", "2", "--dim", "4",
               "--iterations", "120", "--restarts", "2", "--out", tmp.sub("opt")}) == 0);
    Json runj = read_json_file(tmp.path / "opt" / "run.json");
    CHECK(runj.at("final_distortion").get<double>() >= 1.0);
    std::string trace = read_text_file(tmp.path / "opt" / "trace.csv");
    CHECK(trace.rfind("iteration,objective,lip,colip_inverse\n", 0) == 0);
    std::string positions = read_text_file(tmp.path / "opt" / "positions.csv");
    CHECK(positions.rfind("point,x1,x2,x3,x4\n", 0) == 0);
    // Rerun reproduces the numeric artifacts byte for byte.
    CHECK(run({"rerun", "--manifest", tmp.sub("opt") + "/manifest.json", "--out",
               tmp.sub("opt2")}) == 0);
}

TEST_CASE("growth command") {
    TempDir tmp("treelab_cli_growth");
    CHECK(run({"growth", "--depths", "2", "--branching", "2", "--p", "2", "--dim", "4",
               "--iterations", "100", "--restarts", "1", "--out", tmp.sub("g")}) == 0);
    Json growth = read_json_file(tmp.path / "g" / "growth.json");
    CHECK(growth.at("rows").size() == 1);
    CHECK(growth.at("rows")[0].at("depth").get<int>() == 2);
}

TEST_CASE("gen-system dumps leveled families") {
    TempDir tmp("treelab_cli_system");
    CHECK(run({"gen-system", "--leveled-gluing", "--levels", "2", "--schedule", "default",
               "--branching", "2", "--seed", "4", "--out", tmp.sub("sys")}) == 0);
    Json systems = read_json_file(tmp.path / "sys" / "systems.json");
    CHECK(systems.at("levels").size() == 3);
    CHECK(systems.at("kind").get<std::string>() == "gluing");
}
