#include "treelab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "treelab/errors.hpp"
#include "treelab/rng.hpp"
#include "treelab/systems.hpp"

namespace treelab {

void validate_metric(const MetricSpaceInput& points) {
    std::size_t n = points.size();
    if (points.dist.size() != n) throw ConfigError("distance table size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (points.dist[i].size() != n) throw ConfigError("distance table is not square");
        if (points.dist[i][i] != 0.0)
            throw ConfigError("nonzero self-distance at " + points.labels[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(points.dist[i][j] - points.dist[j][i]) > 1e-12)
                throw ConfigError("asymmetric distances at (" + points.labels[i] + ", " +
                                  points.labels[j] + ")");
            if (!(points.dist[i][j] > 0.0))
                throw ConfigError("non-positive distance at (" + points.labels[i] + ", " +
                                  points.labels[j] + ")");
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                if (points.dist[i][j] > points.dist[i][k] + points.dist[k][j] + 1e-12)
                    throw ConfigError("triangle inequality violated at witness (" +
                                      points.labels[i] + ", " + points.labels[j] + ", " +
                                      points.labels[k] + ")");
}

MetricSpaceInput metric_from_tree(const HyperbolicTree& tree) {
    MetricSpaceInput m;
    std::vector<TreeNode> nodes = enumerate_nodes(tree);
    std::size_t n = nodes.size();
    m.labels.reserve(n);
    for (const TreeNode& s : nodes) m.labels.push_back(node_to_string(s));
    m.dist.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            m.dist[i][j] = m.dist[j][i] = static_cast<double>(rho(nodes[i], nodes[j]));
    return m;
}

namespace {

using Positions = std::vector<std::vector<double>>;

double pair_norm(const Positions& x, std::size_t i, std::size_t j, double p) {
    const auto& a = x[i];
    const auto& b = x[j];
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
        return m;
    }
    if (p == 2.0) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            double d = a[k] - b[k];
            s += d * d;
        }
        return std::sqrt(s);
    }
    if (p == 1.0) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
        return s;
    }
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::pow(std::abs(a[k] - b[k]) / m, p);
    return m * std::pow(s, 1.0 / p);
}

// Subgradient of v -> ||v||_p at v = x_i - x_j; ties at p = inf break toward
// the lowest coordinate index.
void norm_subgradient(const Positions& x, std::size_t i, std::size_t j, double p, double nd,
                      std::vector<double>& out) {
    const auto& a = x[i];
    const auto& b = x[j];
    std::size_t dim = a.size();
    out.assign(dim, 0.0);
    if (nd <= 0.0) return;
    if (std::isinf(p)) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t k = 0; k < dim; ++k) {
            double v = std::abs(a[k] - b[k]);
            if (v > best) {
                best = v;
                arg = k;
            }
        }
        out[arg] = a[arg] - b[arg] >= 0.0 ? 1.0 : -1.0;
        return;
    }
    if (p == 1.0) {
        for (std::size_t k = 0; k < dim; ++k) {
            double v = a[k] - b[k];
            out[k] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        }
        return;
    }
    for (std::size_t k = 0; k < dim; ++k) {
        double v = a[k] - b[k];
        if (v == 0.0) continue;
        double sign = v > 0.0 ? 1.0 : -1.0;
        out[k] = sign * std::pow(std::abs(v) / nd, p - 1.0);
    }
}

struct PairList {
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    std::vector<double> dist;
};

struct Objective {
    double value = 0.0;  // softmax(log r) + softmax(-log r)
    double lip = 0.0;
    double colip_inverse = 0.0;
};

Objective evaluate(const Positions& x, const PairList& pairs, double p, double beta,
                   std::vector<double>& log_ratios) {
    std::size_t m = pairs.idx.size();
    log_ratios.resize(m);
    double lmax = -std::numeric_limits<double>::infinity();
    double lmin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < m; ++t) {
        double nd = std::max(pair_norm(x, pairs.idx[t].first, pairs.idx[t].second, p), 1e-12);
        double l = std::log(nd / pairs.dist[t]);
        log_ratios[t] = l;
        lmax = std::max(lmax, l);
        lmin = std::min(lmin, l);
    }
    double shi = 0.0, slo = 0.0;
    for (double l : log_ratios) {
        shi += std::exp(beta * (l - lmax));
        slo += std::exp(beta * (lmin - l));
    }
    Objective obj;
    obj.value = lmax + std::log(shi) / beta + (-lmin + std::log(slo) / beta);
    obj.lip = std::exp(lmax);
    obj.colip_inverse = std::exp(-lmin);
    return obj;
}

struct RestartOutcome {
    Positions positions;
    std::vector<TracePoint> trace;
    double distortion = std::numeric_limits<double>::infinity();
};

RestartOutcome run_restart(const PairList& pairs, std::size_t n, double p, int dim,
                           const OptimizerConfig& config, Positions start) {
    RestartOutcome best;
    Positions x = std::move(start);
    std::vector<double> log_ratios;
    std::vector<double> grad_buffer;
    Positions grad(n, std::vector<double>(static_cast<std::size_t>(dim), 0.0));

    for (int iter = 0; iter <= config.iterations; ++iter) {
        double beta = config.beta0 * (1.0 + static_cast<double>(iter) / config.beta_tau);
        Objective obj = evaluate(x, pairs, p, beta, log_ratios);
        double exact = obj.lip * obj.colip_inverse;
        best.trace.push_back({iter, obj.value, obj.lip, obj.colip_inverse});
        if (exact < best.distortion) {
            best.distortion = exact;
            best.positions = x;
        }
        if (iter == config.iterations) break;

        // Softmax weights on both sides of the log-ratio spread.
        std::size_t m = pairs.idx.size();
        double lmax = -std::numeric_limits<double>::infinity();
        double lmin = std::numeric_limits<double>::infinity();
        for (double l : log_ratios) {
            lmax = std::max(lmax, l);
            lmin = std::min(lmin, l);
        }
        double shi = 0.0, slo = 0.0;
        for (double l : log_ratios) {
            shi += std::exp(beta * (l - lmax));
            slo += std::exp(beta * (lmin - l));
        }
        for (auto& row : grad) std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t t = 0; t < m; ++t) {
            double w_hi = std::exp(beta * (log_ratios[t] - lmax)) / shi;
            double w_lo = std::exp(beta * (lmin - log_ratios[t])) / slo;
            double coeff = w_hi - w_lo;
            if (coeff == 0.0) continue;
            auto [i, j] = pairs.idx[t];
            double nd = std::max(pair_norm(x, i, j, p), 1e-12);
            norm_subgradient(x, i, j, p, nd, grad_buffer);
            double scale = coeff / nd;
            for (int k = 0; k < dim; ++k) {
                double g = scale * grad_buffer[static_cast<std::size_t>(k)];
                grad[i][static_cast<std::size_t>(k)] += g;
                grad[j][static_cast<std::size_t>(k)] -= g;
            }
        }
        double step = config.step0 / (1.0 + static_cast<double>(iter) / config.step_tau);
        // Normalize by the largest per-point gradient so steps stay bounded.
        double gmax = 0.0;
        for (const auto& row : grad)
            for (double g : row) gmax = std::max(gmax, std::abs(g));
        if (gmax == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (int k = 0; k < dim; ++k)
                x[i][static_cast<std::size_t>(k)] -= step * grad[i][static_cast<std::size_t>(k)] / gmax;

        // Closed-form scale step: recenter the mean log ratio at zero. The
        // objective is scale-invariant, this keeps coordinates well ranged.
        double mean = 0.0;
        for (double l : log_ratios) mean += l;
        mean /= static_cast<double>(m);
        double rescale = std::exp(-mean);
        if (rescale > 0.0 && std::isfinite(rescale))
            for (auto& row : x)
                for (double& v : row) v *= rescale;
    }
    return best;
}

double exact_distortion(const Positions& x, const PairList& pairs, double p) {
    double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < pairs.idx.size(); ++t) {
        double nd = pair_norm(x, pairs.idx[t].first, pairs.idx[t].second, p);
        if (nd == 0.0) return std::numeric_limits<double>::infinity();
        double r = nd / pairs.dist[t];
        rmax = std::max(rmax, r);
        rmin = std::min(rmin, r);
    }
    return rmax / rmin;
}

// Deterministic pattern search on the exact max/min ratio, run once on the
// winning restart. Axis moves first; when a sweep stalls, seeded unit
// directions break the corner cases of the max-ratio landscape before the
// step shrinks. Candidate moves re-evaluate the full pair set; instances
// here are small enough that this stays cheap.
double polish_positions(Positions& x, const PairList& pairs, double p, double scale,
                        int max_sweeps) {
    std::size_t n = x.size();
    std::size_t dim = x.empty() ? 0 : x[0].size();
    double best = exact_distortion(x, pairs, p);
    double h = 0.05 * scale;
    Pcg32 rng(0x90115ULL);

    auto try_move = [&](std::size_t i, const std::vector<double>& direction) {
        for (std::size_t k = 0; k < dim; ++k) x[i][k] += h * direction[k];
        double cand = exact_distortion(x, pairs, p);
        if (cand < best - 1e-14 * best) {
            best = cand;
            return true;
        }
        for (std::size_t k = 0; k < dim; ++k) x[i][k] -= h * direction[k];
        return false;
    };

    std::vector<double> direction(dim, 0.0);
    for (int sweep = 0; sweep < max_sweeps && h > 1e-10 * scale; ++sweep) {
        bool improved = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < dim; ++k) {
                std::fill(direction.begin(), direction.end(), 0.0);
                direction[k] = 1.0;
                if (try_move(i, direction)) improved = true;
                direction[k] = -1.0;
                if (try_move(i, direction)) improved = true;
            }
        }
        if (!improved) {
            for (std::size_t i = 0; i < n && !improved; ++i) {
                for (int attempt = 0; attempt < 4; ++attempt) {
                    double len = 0.0;
                    for (std::size_t k = 0; k < dim; ++k) {
                        direction[k] = rng.next_signed();
                        len += direction[k] * direction[k];
                    }
                    if (len == 0.0) continue;
                    len = std::sqrt(len);
                    for (std::size_t k = 0; k < dim; ++k) direction[k] /= len;
                    if (try_move(i, direction)) {
                        improved = true;
                        break;
                    }
                }
            }
        }
        if (!improved) h *= 0.7;
    }
    return best;
}

}  // namespace

OptimizationRun optimize(const MetricSpaceInput& points, double p, int dim,
                         const OptimizerConfig& config,
                         const std::vector<std::vector<double>>* init) {
    std::size_t n = points.size();
    if (n < 2) throw ConfigError("optimizer needs at least two points");
    if (dim < 1) throw ConfigError("target dimension must be >= 1");
    if (!(p >= 1.0)) throw ConfigError("target p must be >= 1 (or inf)");
    if (config.iterations < 1 || config.restarts < 1) throw ConfigError("invalid config");
    validate_metric(points);
    if (init && (init->size() != n || (*init)[0].size() != static_cast<std::size_t>(dim)))
        throw ConfigError("initial positions shape mismatch");

    PairList pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            pairs.idx.emplace_back(i, j);
            pairs.dist.push_back(points.dist[i][j]);
        }
    double mean_dist = 0.0;
    for (double d : pairs.dist) mean_dist += d;
    mean_dist /= static_cast<double>(pairs.dist.size());

    OptimizationRun run;
    run.p = p;
    run.dim = dim;
    run.config = config;
    run.labels = points.labels;

    RestartOutcome best;
    int best_restart = -1;
    for (int r = 0; r < config.restarts; ++r) {
        Positions start(n, std::vector<double>(static_cast<std::size_t>(dim), 0.0));
        Pcg32 rng(mix_seed(config.seed, 0x0917 + static_cast<std::uint64_t>(r)));
        if (r == 0 && init) {
            start = *init;
            // Break exact coincidences, which the log objective cannot see past.
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < i; ++j)
                    if (start[i] == start[j])
                        for (auto& v : start[i]) v += 1e-9 * rng.next_signed();
        } else {
            for (auto& row : start)
                for (double& v : row) v = mean_dist * rng.next_signed();
        }
        RestartOutcome outcome = run_restart(pairs, n, p, dim, config, std::move(start));
        if (outcome.distortion < best.distortion) {
            best = std::move(outcome);
            best_restart = r;
        }
    }

    // Local polish of the winning restart on the unsmoothed objective.
    best.distortion = polish_positions(best.positions, pairs, p, mean_dist, 80);

    run.positions = best.positions;
    run.trace = best.trace;
    run.best_restart = best_restart;

    // Exact recomputation through the analysis pair scan.
    MetricMap mm;
    mm.labels = points.labels;
    mm.space = LpSpace{p};
    for (std::size_t i = 0; i < n; ++i) {
        Vector v;
        for (int k = 0; k < dim; ++k)
            v.set(Key{k + 1}, run.positions[i][static_cast<std::size_t>(k)]);
        mm.images.push_back(std::move(v));
    }
    auto dist_table = std::make_shared<std::vector<std::vector<double>>>(points.dist);
    mm.dist = [dist_table](std::size_t i, std::size_t j) { return (*dist_table)[i][j]; };
    run.final_report = distortion(mm);
    run.final_distortion = run.final_report.distortion;
    if (std::abs(run.final_distortion - best.distortion) >
        1e-6 * std::max(1.0, best.distortion))
        throw InvariantError("optimizer internal distortion disagrees with the analysis scan");
    return run;
}

std::vector<std::vector<double>> tree_init_positions(const EmbeddingMap& l1_map, int dim) {
    std::size_t n = l1_map.nodes.size();
    // Coordinate variance over nodes, largest first.
    std::map<Key, std::pair<double, double>> stats;  // key -> (sum, sumsq)
    for (const TreeNode& s : l1_map.nodes)
        for (const auto& [k, v] : l1_map.at(s).entries) {
            auto& [sum, sumsq] = stats[k];
            sum += v;
            sumsq += v * v;
        }
    std::vector<std::pair<double, Key>> ranked;
    for (const auto& [k, st] : stats) {
        double mean = st.first / static_cast<double>(n);
        double var = st.second / static_cast<double>(n) - mean * mean;
        ranked.emplace_back(-var, k);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<Key> chosen;
    for (int k = 0; k < dim && k < static_cast<int>(ranked.size()); ++k)
        chosen.push_back(ranked[static_cast<std::size_t>(k)].second);

    std::vector<std::vector<double>> pos(n, std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < chosen.size(); ++k)
            pos[i][k] = l1_map.at(l1_map.nodes[i]).at(chosen[k]);
    return pos;
}

GrowthTable growth_experiment(const std::vector<int>& depths, int branching, double p, int dim,
                              const OptimizerConfig& config) {
    if (depths.empty()) throw ConfigError("growth experiment needs at least one depth");
    GrowthTable table;
    table.branching = branching;
    table.p = p;
    table.dim = dim;
    table.config = config;
    for (int N : depths) {
        HyperbolicTree tree = make_integer_tree(N, branching);
        MetricSpaceInput points = metric_from_tree(tree);
        EmbeddingMap l1 = embed_l1(canonical_system(tree));
        std::vector<std::vector<double>> init = tree_init_positions(l1, dim);
        OptimizerConfig per_run = config;
        per_run.seed = mix_seed(config.seed, static_cast<std::uint64_t>(N));
        OptimizationRun run = optimize(points, p, dim, per_run, &init);
        table.rows.push_back({N, run.final_distortion, run.best_restart});
    }
    return table;
}

Json run_to_json(const OptimizationRun& run) {
    Json j;
    j["p"] = std::isinf(run.p) ? Json("inf") : Json(run.p);
    j["dim"] = run.dim;
    Json cfg;
    cfg["iterations"] = run.config.iterations;
    cfg["restarts"] = run.config.restarts;
    cfg["step0"] = run.config.step0;
    cfg["step_tau"] = run.config.step_tau;
    cfg["beta0"] = run.config.beta0;
    cfg["beta_tau"] = run.config.beta_tau;
    cfg["seed"] = run.config.seed;
    cfg["tolerance"] = run.config.tolerance;
    j["config"] = cfg;
    j["best_restart"] = run.best_restart;
    j["final_distortion"] = run.final_distortion;
    j["final_lip"] = run.final_report.lip;
    j["final_colip_inverse"] = run.final_report.colip_inverse;
    j["mode"] = run.final_report.exhaustive ? "exhaustive" : "sampled";
    j["seed"] = run.config.seed;
    j["tolerance"] = run.config.tolerance;
    return j;
}

std::string trace_to_csv(const std::vector<TracePoint>& trace) {
    std::string out = "iteration,objective,lip,colip_inverse\n";
    for (const auto& t : trace)
        out += std::to_string(t.iteration) + "," + format_double(t.objective) + "," +
               format_double(t.lip) + "," + format_double(t.colip_inverse) + "\n";
    return out;
}

std::string positions_to_csv(const std::vector<std::string>& labels,
                             const std::vector<std::vector<double>>& positions) {
    std::string out = "point";
    if (!positions.empty())
        for (std::size_t k = 0; k < positions[0].size(); ++k)
            out += ",x" + std::to_string(k + 1);
    out += "\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += labels[i];
        for (double v : positions[i]) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

Json growth_to_json(const GrowthTable& table) {
    Json j;
    j["branching"] = table.branching;
    j["p"] = std::isinf(table.p) ? Json("inf") : Json(table.p);
    j["dim"] = table.dim;
    j["seed"] = table.config.seed;
    j["mode"] = "exhaustive";
    j["tolerance"] = table.config.tolerance;
    j["note"] = "best distortion found is an upper bound on the optimum";
    Json rows = Json::array();
    for (const auto& r : table.rows) {
        Json row;
        row["depth"] = r.depth;
        row["distortion"] = r.distortion;
        row["best_restart"] = r.best_restart;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

}  // namespace treelab
