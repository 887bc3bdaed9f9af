#include "treelab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "treelab/errors.hpp"

namespace treelab {

std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

std::string key_to_string(const Key& k) {
    std::string out = "[";
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(k[i]);
    }
    out += ']';
    return out;
}

Key key_from_string(const std::string& s) {
    Json j = Json::parse(s);
    if (!j.is_array()) throw ConfigError("key must be a JSON array of integers");
    Key k;
    for (const auto& e : j) k.push_back(e.get<int>());
    return k;
}

Json vector_to_json(const Vector& v) {
    Json j = Json::object();
    for (const auto& [k, x] : v.entries) j[key_to_string(k)] = x;
    return j;
}

Vector vector_from_json(const Json& j) {
    Vector v;
    for (auto it = j.begin(); it != j.end(); ++it)
        v.set(key_from_string(it.key()), it.value().get<double>());
    return v;
}

Json node_to_json(const TreeNode& s) {
    Json j = Json::array();
    for (int v : s.path) j.push_back(v);
    return j;
}

TreeNode node_from_json(const Json& j) {
    if (!j.is_array()) throw ConfigError("node must be a JSON array of integers");
    std::vector<int> p;
    for (const auto& e : j) p.push_back(e.get<int>());
    return TreeNode(std::move(p));
}

Json tree_to_json(const HyperbolicTree& t) {
    Json j;
    j["kind"] = t.kind == TreeKind::Dyadic ? "dyadic" : "integer";
    j["depth"] = t.depth;
    j["branching"] = t.branching;
    return j;
}

HyperbolicTree tree_from_json(const Json& j) {
    HyperbolicTree t;
    std::string kind = j.value("kind", "integer");
    if (kind == "dyadic")
        t.kind = TreeKind::Dyadic;
    else if (kind == "integer")
        t.kind = TreeKind::Integer;
    else
        throw ConfigError("unknown tree kind: " + kind);
    t.depth = j.at("depth").get<int>();
    t.branching = t.kind == TreeKind::Dyadic ? 2 : j.at("branching").get<int>();
    t.validate();
    return t;
}

namespace {

double parse_p(const Json& j) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf" || s == "infinity") return kInfinityP;
        throw ConfigError("unrecognized p value: " + s);
    }
    return j.get<double>();
}

Json p_to_json(double p) {
    if (std::isinf(p)) return Json("inf");
    return Json(p);
}

}  // namespace

Json space_to_json(const SpaceModel& space) {
    Json j;
    if (const auto* lp = std::get_if<LpSpace>(&space)) {
        j["norm"] = "lp";
        j["p"] = p_to_json(lp->p);
        return j;
    }
    if (const auto* nested = std::get_if<NestedSumSpace>(&space)) {
        j["norm"] = "nested";
        j["outer_p"] = p_to_json(nested->outer_p);
        Json blocks = Json::array();
        for (const auto& b : nested->blocks) {
            Json jb;
            jb["p"] = p_to_json(b.p);
            Json keys = Json::array();
            for (const auto& k : b.keys) {
                Json jk = Json::array();
                for (int v : k) jk.push_back(v);
                keys.push_back(jk);
            }
            jb["keys"] = keys;
            blocks.push_back(jb);
        }
        j["blocks"] = blocks;
        return j;
    }
    const auto& eval = std::get<EvalNormSpace>(space);
    j["norm"] = "eval";
    j["epsilon"] = eval.epsilon;
    Json fs = Json::array();
    for (const auto& f : eval.functionals) {
        Json jf;
        jf["entries"] = vector_to_json(f.coeffs);
        jf["bound"] = f.bound;
        fs.push_back(jf);
    }
    j["functionals"] = fs;
    return j;
}

SpaceModel space_from_json(const Json& j) {
    std::string kind = j.at("norm").get<std::string>();
    if (kind == "lp") return LpSpace{parse_p(j.at("p"))};
    if (kind == "nested") {
        NestedSumSpace s;
        s.outer_p = parse_p(j.at("outer_p"));
        for (const auto& jb : j.at("blocks")) {
            NestedBlock b;
            b.p = parse_p(jb.at("p"));
            for (const auto& jk : jb.at("keys")) {
                Key k;
                for (const auto& e : jk) k.push_back(e.get<int>());
                b.keys.insert(k);
            }
            s.blocks.push_back(std::move(b));
        }
        return s;
    }
    if (kind == "eval") {
        EvalNormSpace s;
        s.epsilon = j.value("epsilon", 1e-6);
        if (j.contains("functionals")) {
            for (const auto& jf : j.at("functionals")) {
                LinearFunctional f;
                f.coeffs = vector_from_json(jf.at("entries"));
                f.bound = jf.value("bound", 0.0);
                s.functionals.push_back(std::move(f));
            }
        }
        return s;
    }
    throw ConfigError("unknown norm spec: " + kind);
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << contents;
    if (!out) throw ConfigError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

Json read_json_file(const std::filesystem::path& path) {
    return Json::parse(read_text_file(path));
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace treelab
