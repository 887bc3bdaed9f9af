#include "treelab/cli.hpp"

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "treelab/analysis.hpp"
#include "treelab/embeddings.hpp"
#include "treelab/errors.hpp"
#include "treelab/optimizer.hpp"
#include "treelab/spaces.hpp"
#include "treelab/systems.hpp"
#include "treelab/tree.hpp"

namespace treelab {

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_schedule(const std::string& spec, int levels) {
    if (spec == "default") return default_delta_schedule(levels);
    if (spec == "zero") return zero_delta_schedule(levels);
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t next = spec.find(',', pos);
        if (next == std::string::npos) next = spec.size();
        out.push_back(std::stod(spec.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

std::vector<double> parse_grid(const std::string& spec) {
    // "start:stop:step" or a comma list.
    auto colon = spec.find(':');
    std::vector<double> out;
    if (colon != std::string::npos) {
        auto colon2 = spec.find(':', colon + 1);
        if (colon2 == std::string::npos) throw ConfigError("grid needs start:stop:step");
        double start = std::stod(spec.substr(0, colon));
        double stop = std::stod(spec.substr(colon + 1, colon2 - colon - 1));
        double step = std::stod(spec.substr(colon2 + 1));
        if (step <= 0.0) throw ConfigError("grid step must be positive");
        for (double t = start; t <= stop + 1e-12; t += step) out.push_back(t);
        return out;
    }
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t next = spec.find(',', pos);
        if (next == std::string::npos) next = spec.size();
        out.push_back(std::stod(spec.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& spec) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t next = spec.find(',', pos);
        if (next == std::string::npos) next = spec.size();
        out.push_back(std::stoi(spec.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

double parse_p_arg(const std::string& s) {
    if (s == "inf" || s == "infinity") return kInfinityP;
    return std::stod(s);
}

HyperbolicTree tree_from_config(const Json& config) {
    HyperbolicTree tree;
    tree.kind = config.value("kind", "integer") == "dyadic" ? TreeKind::Dyadic
                                                            : TreeKind::Integer;
    tree.depth = config.at("depth").get<int>();
    tree.branching =
        tree.kind == TreeKind::Dyadic ? 2 : config.value("branching", 2);
    tree.validate();
    return tree;
}

int glued_levels_needed(int depth) {
    int needed = 1;
    for (int len = 1; len <= depth; ++len) {
        int k = gluing_window(len);
        needed = std::max(needed, k + 1);
        if (gluing_lambda(len) < 1.0) needed = std::max(needed, k + 2);
    }
    return needed;
}

EmbeddingMap embedding_from_config(const Json& config) {
    std::string construction = config.at("construction").get<std::string>();
    int depth = config.at("depth").get<int>();
    int branching = config.value("branching", 2);
    std::uint64_t seed = config.value("seed", std::uint64_t{1});
    if (construction == "l1" || construction == "dual") {
        HyperbolicTree tree = make_integer_tree(depth, branching);
        double delta = config.value("delta", 0.0);
        BiorthSystem sys =
            delta > 0.0 ? perturbed_system(tree, delta, seed) : canonical_system(tree);
        return construction == "l1" ? embed_l1(sys) : embed_dual(sys);
    }
    if (construction == "glued" || construction == "glued-dual") {
        int levels = glued_levels_needed(depth);
        std::vector<double> schedule =
            parse_schedule(config.value("schedule", std::string("default")), levels);
        LeveledSystems ls = leveled_systems(levels, LevelKind::Gluing, 0, schedule, seed,
                                            branching, depth);
        return construction == "glued" ? embed_glued(ls, depth) : embed_glued_dual(ls, depth);
    }
    if (construction == "segmented") {
        int K = config.value("K", 2);
        int levels = segment_index(depth, K);
        std::vector<double> schedule =
            parse_schedule(config.value("schedule", std::string("zero")), levels);
        LeveledSystems ls =
            leveled_systems(levels, LevelKind::Segmented, K, schedule, seed, branching);
        std::vector<double> eta;
        if (config.contains("eta"))
            eta = parse_schedule(config.at("eta").get<std::string>(), levels);
        return embed_segmented(ls, depth, eta);
    }
    throw ConfigError("unknown construction: " + construction);
}

EmbeddingMap load_embedding_dir(const std::string& dir) {
    return load_embedding(fs::path(dir) / "embedding.csv", fs::path(dir) / "provenance.json");
}

void write_manifest(const fs::path& outdir, const std::string& command, const Json& config,
                    const std::vector<std::string>& artifacts) {
    Json manifest;
    manifest["tool"] = kToolName;
    manifest["version"] = kToolVersion;
    manifest["command"] = command;
    manifest["config"] = config;
    Json arts = Json::array();
    for (const std::string& name : artifacts) {
        Json a;
        a["name"] = name;
        a["fnv1a64"] = fnv1a64_hex(read_text_file(outdir / name));
        arts.push_back(a);
    }
    manifest["artifacts"] = arts;
    write_json_file(outdir / "manifest.json", manifest);
}

}  // namespace

std::vector<std::string> run_command(const std::string& command, const Json& config,
                                     const fs::path& outdir) {
    fs::create_directories(outdir);
    std::vector<std::string> artifacts;

    if (command == "gen-tree") {
        HyperbolicTree tree = tree_from_config(config);
        Json out = tree_to_json(tree);
        out["node_count"] = tree.node_count();
        write_json_file(outdir / "tree.json", out);
        artifacts.push_back("tree.json");
    } else if (command == "gen-system") {
        if (config.value("leveled", std::string()).empty()) {
            HyperbolicTree tree = tree_from_config(config);
            double delta = config.value("delta", 0.0);
            std::uint64_t seed = config.value("seed", std::uint64_t{1});
            BiorthSystem sys =
                delta > 0.0 ? perturbed_system(tree, delta, seed) : canonical_system(tree);
            check_system(sys);
            write_json_file(outdir / "system.json", system_to_json(sys));
            artifacts.push_back("system.json");
        } else {
            std::string kind = config.at("leveled").get<std::string>();
            int levels = config.at("levels").get<int>();
            std::vector<double> schedule =
                parse_schedule(config.value("schedule", std::string("default")), levels);
            LeveledSystems ls = leveled_systems(
                levels, kind == "segmented" ? LevelKind::Segmented : LevelKind::Gluing,
                config.value("K", 2), schedule, config.value("seed", std::uint64_t{1}),
                config.value("branching", 2), config.value("depth_cap", 0));
            check_leveled(ls);
            write_json_file(outdir / "systems.json", leveled_to_json(ls));
            artifacts.push_back("systems.json");
        }
    } else if (command == "embed") {
        EmbeddingMap map = embedding_from_config(config);
        dump_embedding(map, outdir / "embedding.csv", outdir / "provenance.json");
        artifacts.push_back("embedding.csv");
        artifacts.push_back("provenance.json");
    } else if (command == "distortion") {
        EmbeddingMap map = load_embedding_dir(config.at("embedding").get<std::string>());
        MetricMap mm = metric_map_from_embedding(map);
        ScanConfig scan;
        scan.pair_budget = config.value("budget", std::uint64_t{10'000'000});
        scan.sample_size = config.value("sample", std::uint64_t{2'000'000});
        scan.seed = config.value("seed", std::uint64_t{1});
        scan.threads = config.value("threads", 1);
        DistortionReport report = distortion(mm, scan);
        write_json_file(outdir / "distortion.json", distortion_report_to_json(report, mm));
        artifacts.push_back("distortion.json");
        if (map.provenance.construction == "segmented") {
            SegCaseReport cases = segmented_case_scan(map, map.provenance.params.value("K", 2));
            write_json_file(outdir / "cases.json", segmented_case_report_to_json(cases));
            artifacts.push_back("cases.json");
        }
    } else if (command == "coarse-moduli") {
        EmbeddingMap map = load_embedding_dir(config.at("embedding").get<std::string>());
        MetricMap mm = metric_map_from_embedding(map);
        CoarseModuliReport report =
            coarse_moduli(mm, parse_grid(config.at("t_grid").get<std::string>()),
                          parse_grid(config.at("theta_grid").get<std::string>()));
        write_json_file(outdir / "moduli.json", coarse_moduli_to_json(report));
        artifacts.push_back("moduli.json");
    } else if (command == "filtration") {
        EmbeddingMap map = load_embedding_dir(config.at("embedding").get<std::string>());
        ProjectionMode mode = config.value("mode", std::string("truncate")) == "average"
                                  ? ProjectionMode::Average
                                  : ProjectionMode::Truncate;
        WTable w = filtration_decompose(map, config.value("a", 2), mode);
        write_json_file(outdir / "filtration.json", wtable_to_json(w));
        write_text_file(outdir / "wtable.csv", wtable_to_csv(w));
        artifacts.push_back("filtration.json");
        artifacts.push_back("wtable.csv");
        if (config.contains("C")) {
            CountingReport counting =
                counting_bounds(w, config.at("C").get<double>(),
                                parse_p_arg(config.value("p", std::string("2"))));
            write_json_file(outdir / "counting.json", counting_report_to_json(counting));
            artifacts.push_back("counting.json");
        }
    } else if (command == "certify") {
        std::optional<long long> a_override, m_override;
        if (config.contains("a")) a_override = config.at("a").get<long long>();
        if (config.contains("m")) m_override = config.at("m").get<long long>();
        Certificate cert = certificate(config.at("C").get<double>(),
                                       parse_p_arg(config.at("p").get<std::string>()),
                                       a_override, m_override);
        write_json_file(outdir / "certificate.json", certificate_to_json(cert));
        artifacts.push_back("certificate.json");
    } else if (command == "concentration") {
        JamesModel model = config.value("model", std::string("l1")) == "summing"
                               ? JamesModel::SummingBasis
                               : JamesModel::L1Basis;
        int k = config.at("k").get<int>();
        int n = config.at("n").get<int>();
        double C = config.value("C", 1.0);
        double p = parse_p_arg(config.value("p", std::string("2")));
        ConcentrationResult result = concentration_search(
            [model](const std::vector<int>& subset) { return james_sum(model, subset); },
            james_space(model), n, k, C, p, config.value("budget", std::uint64_t{20'000}),
            config.value("seed", std::uint64_t{1}));
        Json out = concentration_to_json(result);
        KrComparison cmp = james_kr_comparison(model, C, p, k);
        out["theta"] = cmp.theta;
        out["james_lhs"] = cmp.lhs;
        out["james_contradictory"] = cmp.contradictory;
        write_json_file(outdir / "concentration.json", out);
        artifacts.push_back("concentration.json");
    } else if (command == "optimize") {
        OptimizerConfig ocfg;
        ocfg.iterations = config.value("iterations", 600);
        ocfg.restarts = config.value("restarts", 4);
        ocfg.seed = config.value("seed", std::uint64_t{1});
        double p = parse_p_arg(config.value("p", std::string("2")));
        int dim = config.at("dim").get<int>();
        MetricSpaceInput points;
        std::optional<std::vector<std::vector<double>>> init;
        if (config.contains("tree_depth")) {
            HyperbolicTree tree =
                make_integer_tree(config.at("tree_depth").get<int>(), config.value("branching", 2));
            points = metric_from_tree(tree);
            if (config.value("init_tree", true)) {
                EmbeddingMap l1 = embed_l1(canonical_system(tree));
                init = tree_init_positions(l1, dim);
            }
        } else {
            Json pts = read_json_file(config.at("points").get<std::string>());
            for (const auto& label : pts.at("labels"))
                points.labels.push_back(label.get<std::string>());
            points.dist = pts.at("dist").get<std::vector<std::vector<double>>>();
        }
        OptimizationRun run = optimize(points, p, dim, ocfg, init ? &*init : nullptr);
        write_json_file(outdir / "run.json", run_to_json(run));
        write_text_file(outdir / "trace.csv", trace_to_csv(run.trace));
        write_text_file(outdir / "positions.csv", positions_to_csv(run.labels, run.positions));
        artifacts.push_back("run.json");
        artifacts.push_back("trace.csv");
        artifacts.push_back("positions.csv");
    } else if (command == "growth") {
        OptimizerConfig ocfg;
        ocfg.iterations = config.value("iterations", 600);
        ocfg.restarts = config.value("restarts", 4);
        ocfg.seed = config.value("seed", std::uint64_t{1});
        GrowthTable table = growth_experiment(
            parse_int_list(config.at("depths").get<std::string>()), config.value("branching", 2),
            parse_p_arg(config.value("p", std::string("2"))), config.at("dim").get<int>(), ocfg);
        write_json_file(outdir / "growth.json", growth_to_json(table));
        artifacts.push_back("growth.json");
    } else {
        throw ConfigError("unknown command: " + command);
    }

    write_manifest(outdir, command, config, artifacts);
    return artifacts;
}

namespace {

int rerun_from_manifest(const fs::path& manifest_path, const fs::path& outdir) {
    Json manifest = read_json_file(manifest_path);
    std::string command = manifest.at("command").get<std::string>();
    Json config = manifest.at("config");
    std::vector<std::string> artifacts = run_command(command, config, outdir);

    Json report;
    report["command"] = command;
    bool all_match = true;
    Json checks = Json::array();
    for (const auto& a : manifest.at("artifacts")) {
        std::string name = a.at("name").get<std::string>();
        std::string expected = a.at("fnv1a64").get<std::string>();
        std::string actual = fnv1a64_hex(read_text_file(outdir / name));
        Json c;
        c["name"] = name;
        c["expected"] = expected;
        c["actual"] = actual;
        c["match"] = expected == actual;
        if (expected != actual) all_match = false;
        checks.push_back(c);
    }
    report["artifacts"] = checks;
    report["reproduced"] = all_match;
    write_json_file(outdir / "rerun_report.json", report);
    std::cout << (all_match ? "reproduced: all artifact checksums match\n"
                            : "MISMATCH: artifact checksums differ\n");
    return all_match ? 0 : 3;
}

void emit_error(const fs::path& outdir, const std::string& kind, const std::string& message) {
    Json err;
    err["error"] = kind;
    err["message"] = message;
    std::cerr << err.dump() << "\n";
    // Failure marker so partial artifacts are never mistaken for results.
    std::error_code ec;
    if (!outdir.empty() && fs::exists(outdir, ec)) write_json_file(outdir / "error.json", err);
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"metric embedding laboratory for hyperbolic trees"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    const char* env_out = std::getenv("TREELAB_OUT");
    std::string default_out = env_out ? env_out : ".";

    std::string out = default_out;
    std::string kind = "integer", construction = "l1", schedule, eta, mode = "truncate";
    std::string model = "l1", tstr = "1:10:1", theta_str = "1,2,4,8", depths = "2,4,6";
    std::string manifest_path, embedding_dir, points_path, p_str = "2";
    int depth = 3, branching = 2, levels = 2, K = 2, a_param = 2, dim = 2, k_param = 9,
        n_param = 0, iterations = 600, restarts = 4, threads = 1, depth_cap = 0;
    double delta = 0.0, C = 1.0;
    std::uint64_t seed = 1, budget = 10'000'000, sample = 2'000'000, search_budget = 20'000;
    long long a_override = -1, m_override = -1;
    bool leveled_gluing = false, leveled_segmented = false, no_init_tree = false;

    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", out, "output directory (default $TREELAB_OUT or .)");
    };

    auto* gen_tree = app.add_subcommand("gen-tree", "write a tree spec artifact");
    gen_tree->add_option("--kind", kind)->check(CLI::IsMember({"integer", "dyadic"}));
    gen_tree->add_option("--depth", depth)->required();
    gen_tree->add_option("--branching", branching);
    add_out(gen_tree);

    auto* gen_system = app.add_subcommand("gen-system", "generate a biorthogonal system");
    gen_system->add_option("--depth", depth);
    gen_system->add_option("--branching", branching);
    gen_system->add_option("--kind", kind)->check(CLI::IsMember({"integer", "dyadic"}));
    gen_system->add_option("--delta", delta);
    gen_system->add_option("--seed", seed);
    gen_system->add_flag("--leveled-gluing", leveled_gluing);
    gen_system->add_flag("--leveled-segmented", leveled_segmented);
    gen_system->add_option("--levels", levels);
    gen_system->add_option("--K", K);
    gen_system->add_option("--schedule", schedule, "default | zero | comma list");
    gen_system->add_option("--depth-cap", depth_cap);
    add_out(gen_system);

    auto* embed = app.add_subcommand("embed", "build an embedding map");
    embed->add_option("--construction", construction)
        ->check(CLI::IsMember({"l1", "dual", "glued", "glued-dual", "segmented"}))
        ->required();
    embed->add_option("--depth", depth)->required();
    embed->add_option("--branching", branching);
    embed->add_option("--delta", delta);
    embed->add_option("--seed", seed);
    embed->add_option("--K", K);
    embed->add_option("--schedule", schedule);
    embed->add_option("--eta", eta);
    add_out(embed);

    auto* dist = app.add_subcommand("distortion", "exhaustive or sampled distortion scan");
    dist->add_option("--embedding", embedding_dir)->required();
    dist->add_option("--budget", budget);
    dist->add_option("--sample", sample);
    dist->add_option("--seed", seed);
    dist->add_option("--threads", threads);
    add_out(dist);

    auto* moduli = app.add_subcommand("coarse-moduli", "omega_f and L_theta over grids");
    moduli->add_option("--embedding", embedding_dir)->required();
    moduli->add_option("--t-grid", tstr);
    moduli->add_option("--theta-grid", theta_str);
    add_out(moduli);

    auto* filtration = app.add_subcommand("filtration", "z_j / w_jk decomposition");
    filtration->add_option("--embedding", embedding_dir)->required();
    filtration->add_option("--a", a_param);
    filtration->add_option("--mode", mode)->check(CLI::IsMember({"truncate", "average"}));
    filtration->add_option("--C", C);
    filtration->add_option("--p", p_str);
    add_out(filtration);

    auto* certify = app.add_subcommand("certify", "non-embeddability certificate arithmetic");
    certify->add_option("--C", C)->required();
    certify->add_option("--p", p_str)->required();
    certify->add_option("--a", a_override);
    certify->add_option("--m", m_override);
    add_out(certify);

    auto* conc = app.add_subcommand("concentration", "sub-alphabet diameter search");
    conc->add_option("--model", model)->check(CLI::IsMember({"l1", "summing"}));
    conc->add_option("--k", k_param)->required();
    conc->add_option("--n", n_param);
    conc->add_option("--C", C);
    conc->add_option("--p", p_str);
    conc->add_option("--budget", search_budget);
    conc->add_option("--seed", seed);
    add_out(conc);

    auto* opt = app.add_subcommand("optimize", "numerical distortion minimization");
    opt->add_option("--tree-depth", depth);
    opt->add_option("--branching", branching);
    opt->add_option("--points", points_path, "JSON with labels + dist table");
    opt->add_option("--p", p_str);
    opt->add_option("--dim", dim)->required();
    opt->add_option("--iterations", iterations);
    opt->add_option("--restarts", restarts);
    opt->add_option("--seed", seed);
    opt->add_flag("--no-init-tree", no_init_tree);
    add_out(opt);

    auto* growth = app.add_subcommand("growth", "distortion growth over tree depths");
    growth->add_option("--depths", depths);
    growth->add_option("--branching", branching);
    growth->add_option("--p", p_str);
    growth->add_option("--dim", dim)->required();
    growth->add_option("--iterations", iterations);
    growth->add_option("--restarts", restarts);
    growth->add_option("--seed", seed);
    add_out(growth);

    auto* rerun = app.add_subcommand("rerun", "re-execute a manifest and compare checksums");
    rerun->add_option("--manifest", manifest_path)->required();
    add_out(rerun);

    std::vector<std::string> argv_copy = args;
    std::reverse(argv_copy.begin(), argv_copy.end());
    try {
        app.parse(argv_copy);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help / --version
            std::cout << app.help();
            return 0;
        }
        Json err;
        err["error"] = "config";
        err["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return 2;
    }

    fs::path outdir(out);
    try {
        if (rerun->parsed()) return rerun_from_manifest(manifest_path, outdir);

        std::string command;
        Json config = Json::object();
        if (gen_tree->parsed()) {
            command = "gen-tree";
            config["kind"] = kind;
            config["depth"] = depth;
            config["branching"] = branching;
        } else if (gen_system->parsed()) {
            command = "gen-system";
            if (leveled_gluing || leveled_segmented) {
                config["leveled"] = leveled_segmented ? "segmented" : "gluing";
                config["levels"] = levels;
                config["K"] = K;
                config["schedule"] = schedule.empty() ? "default" : schedule;
                config["branching"] = branching;
                config["depth_cap"] = depth_cap;
            } else {
                config["kind"] = kind;
                config["depth"] = depth;
                config["branching"] = branching;
                config["delta"] = delta;
            }
            config["seed"] = seed;
        } else if (embed->parsed()) {
            command = "embed";
            config["construction"] = construction;
            config["depth"] = depth;
            config["branching"] = branching;
            config["seed"] = seed;
            if (construction == "l1" || construction == "dual") config["delta"] = delta;
            if (construction == "glued" || construction == "glued-dual")
                config["schedule"] = schedule.empty() ? "default" : schedule;
            if (construction == "segmented") {
                config["K"] = K;
                config["schedule"] = schedule.empty() ? "zero" : schedule;
                if (!eta.empty()) config["eta"] = eta;
            }
        } else if (dist->parsed()) {
            command = "distortion";
            config["embedding"] = embedding_dir;
            config["budget"] = budget;
            config["sample"] = sample;
            config["seed"] = seed;
            config["threads"] = threads;
        } else if (moduli->parsed()) {
            command = "coarse-moduli";
            config["embedding"] = embedding_dir;
            config["t_grid"] = tstr;
            config["theta_grid"] = theta_str;
        } else if (filtration->parsed()) {
            command = "filtration";
            config["embedding"] = embedding_dir;
            config["a"] = a_param;
            config["mode"] = mode;
            if (filtration->count("--C")) {
                config["C"] = C;
                config["p"] = p_str;
            }
        } else if (certify->parsed()) {
            command = "certify";
            config["C"] = C;
            config["p"] = p_str;
            if (a_override >= 0) config["a"] = a_override;
            if (m_override >= 0) config["m"] = m_override;
        } else if (conc->parsed()) {
            command = "concentration";
            config["model"] = model;
            config["k"] = k_param;
            config["n"] = n_param > 0 ? n_param : 4 * k_param;
            config["C"] = C;
            config["p"] = p_str;
            config["budget"] = search_budget;
            config["seed"] = seed;
        } else if (opt->parsed()) {
            command = "optimize";
            if (!points_path.empty())
                config["points"] = points_path;
            else {
                config["tree_depth"] = depth;
                config["branching"] = branching;
                config["init_tree"] = !no_init_tree;
            }
            config["p"] = p_str;
            config["dim"] = dim;
            config["iterations"] = iterations;
            config["restarts"] = restarts;
            config["seed"] = seed;
        } else if (growth->parsed()) {
            command = "growth";
            config["depths"] = depths;
            config["branching"] = branching;
            config["p"] = p_str;
            config["dim"] = dim;
            config["iterations"] = iterations;
            config["restarts"] = restarts;
            config["seed"] = seed;
        }

        std::vector<std::string> artifacts = run_command(command, config, outdir);
        for (const std::string& name : artifacts) std::cout << (outdir / name).string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        emit_error(outdir, "config", e.what());
        return 2;
    } catch (const InvariantError& e) {
        emit_error(outdir, "invariant", e.what());
        return 3;
    } catch (const CapacityError& e) {
        emit_error(outdir, "capacity", e.what());
        return 4;
    } catch (const std::exception& e) {
        emit_error(outdir, "config", e.what());
        return 2;
    }
}

}  // namespace treelab
