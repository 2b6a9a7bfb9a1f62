#include "ds2dl/diffusion.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <sstream>

#include "binary.hpp"
#include "ds2dl/error.hpp"
#include "ds2dl/parallel.hpp"

namespace ds2dl {

namespace {

constexpr std::size_t kDefaultEigenpairCap = 100;

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// Component id per node, numbered by decreasing size then smallest member.
std::vector<std::size_t> connected_components(const SparseSym& w, std::size_t& count) {
    const std::size_t n = w.dim();
    DisjointSets sets(n);
    for (const auto& e : w.entries()) sets.unite(e.row, e.col);
    std::vector<std::size_t> root(n), size(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++size[root[i] = sets.find(i)];
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < n; ++i)
        if (root[i] == i) roots.push_back(i);
    std::stable_sort(roots.begin(), roots.end(), [&](std::size_t a, std::size_t b) { return size[a] > size[b]; });
    std::vector<std::size_t> id_of_root(n);
    for (std::size_t c = 0; c < roots.size(); ++c) id_of_root[roots[c]] = c;
    std::vector<std::size_t> comp(n);
    for (std::size_t i = 0; i < n; ++i) comp[i] = id_of_root[root[i]];
    count = roots.size();
    return comp;
}

void check_node(const DiffusionModel& model, std::size_t i) {
    if (!model.contains(i)) {
        throw ParameterError("graph node " + std::to_string(i) + " is outside the diffusion model");
    }
}

}  // namespace

Eigen::VectorXd local_density(const Eigen::MatrixXd& features, std::size_t k_n, double sigma0) {
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
        throw ParameterError("sigma0 must be positive and finite, got " + std::to_string(sigma0));
    }
    if (k_n == 0) throw ParameterError("k_n must be at least 1");
    const auto n = static_cast<std::size_t>(features.rows());
    Eigen::VectorXd zeta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    const std::size_t k = std::min(k_n, n == 0 ? 0 : n - 1);
    if (k == 0) return zeta;
    const KnnResult nn = knn_self(features, k);
    const double inv = 1.0 / (sigma0 * sigma0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
            const double d = nn.distance(i, r);
            s += std::exp(-d * d * inv);
        }
        zeta(static_cast<Eigen::Index>(i)) = s;
    }
    return zeta;
}

double median_knn_distance(const Eigen::MatrixXd& features, std::size_t k_n) {
    const auto n = static_cast<std::size_t>(features.rows());
    const std::size_t k = std::min(k_n, n == 0 ? 0 : n - 1);
    if (k == 0) return 1.0;
    const double m = median(knn_self(features, k).distances);
    return m > 0.0 ? m : 1.0;
}

RepresentativeSet select_representatives(const SuperpixelSegmentation& seg, const Eigen::VectorXd& density,
                                         std::size_t k, const Eigen::MatrixXd& features) {
    if (k == 0) throw ParameterError("representatives per superpixel must be at least 1");
    if (static_cast<std::size_t>(density.size()) != seg.pixels() ||
        static_cast<std::size_t>(features.rows()) != seg.pixels()) {
        throw ContractError("density/features do not match the segmentation size");
    }
    RepresentativeSet reps;
    const auto& members = seg.all_members();
    for (std::size_t s = 0; s < members.size(); ++s) {
        std::vector<std::size_t> order = members[s];
        if (order.size() < k) reps.short_segments.push_back(s + 1);
        const std::size_t take = std::min(k, order.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double za = density(static_cast<Eigen::Index>(a));
                              const double zb = density(static_cast<Eigen::Index>(b));
                              return za != zb ? za > zb : a < b;
                          });
        for (std::size_t i = 0; i < take; ++i) {
            reps.pixels.push_back(order[i]);
            reps.segment.push_back(s + 1);
        }
    }
    const auto n = static_cast<Eigen::Index>(reps.pixels.size());
    reps.features.resize(n, features.cols());
    reps.coords.resize(n, 2);
    reps.density.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t px = reps.pixels[static_cast<std::size_t>(i)];
        reps.features.row(i) = features.row(static_cast<Eigen::Index>(px));
        reps.coords(i, 0) = static_cast<double>(px / seg.width());
        reps.coords(i, 1) = static_cast<double>(px % seg.width());
        reps.density(i) = density(static_cast<Eigen::Index>(px));
    }
    return reps;
}

SparseSym build_graph(const Eigen::MatrixXd& features, const Eigen::MatrixXd& coords, double sigma0, double radius,
                      std::size_t k_n, GraphStats* stats) {
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw ParameterError("graph sigma0 must be positive and finite");
    if (!(radius > 0.0)) throw ParameterError("spatial radius must be positive");
    if (k_n == 0) throw ParameterError("k_n must be at least 1");
    if (features.rows() != coords.rows() || coords.cols() != 2) {
        throw ContractError("build_graph: features and coords disagree");
    }
    const auto n = static_cast<std::size_t>(features.rows());

    // Sweep in row order so each query only scans rows within the radius.
    std::vector<std::size_t> by_row(n);
    std::iota(by_row.begin(), by_row.end(), 0);
    std::stable_sort(by_row.begin(), by_row.end(), [&](std::size_t a, std::size_t b) {
        return coords(static_cast<Eigen::Index>(a), 0) < coords(static_cast<Eigen::Index>(b), 0);
    });
    std::vector<double> sorted_rows(n);
    for (std::size_t i = 0; i < n; ++i) sorted_rows[i] = coords(static_cast<Eigen::Index>(by_row[i]), 0);

    const double r2 = radius * radius;
    std::vector<std::vector<std::pair<double, std::size_t>>> nbrs(n);
    parallel_for(0, n, [&](std::size_t i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double row = coords(ii, 0);
        auto lo = std::lower_bound(sorted_rows.begin(), sorted_rows.end(), row - radius);
        auto hi = std::upper_bound(sorted_rows.begin(), sorted_rows.end(), row + radius);
        std::vector<std::pair<double, std::size_t>> cand;
        for (auto it = lo; it != hi; ++it) {
            const std::size_t j = by_row[static_cast<std::size_t>(it - sorted_rows.begin())];
            if (j == i) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            if ((coords.row(ii) - coords.row(jj)).squaredNorm() > r2) continue;
            cand.emplace_back((features.row(ii) - features.row(jj)).squaredNorm(), j);
        }
        const std::size_t take = std::min(k_n, cand.size());
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
        cand.resize(take);
        nbrs[i] = std::move(cand);
    });

    SparseSym w(n);
    const double inv = 1.0 / (sigma0 * sigma0);
    std::size_t isolated = 0;
    for (std::size_t i = 0; i < n; ++i) {
        w.set(i, i, 1.0);
        if (nbrs[i].empty()) ++isolated;
        for (const auto& [d2, j] : nbrs[i]) w.set_max(i, j, std::max(std::exp(-d2 * inv), DBL_MIN));
    }
    if (stats) stats->isolated = isolated;
    return w;
}

std::string to_string(ComponentPolicy policy) { return policy == ComponentPolicy::all ? "all" : "largest"; }

ComponentPolicy parse_component_policy(const std::string& text) {
    if (text == "all") return ComponentPolicy::all;
    if (text == "largest") return ComponentPolicy::largest;
    throw ParameterError("component policy must be 'all' or 'largest', got '" + text + "'");
}

Eigen::MatrixXd DiffusionModel::embedding() const {
    Eigen::MatrixXd phi = psi;
    for (Eigen::Index m = 0; m < lambda.size(); ++m) phi.col(m) *= std::pow(std::abs(lambda(m)), t);
    return phi;
}

Eigen::MatrixXd DiffusionModel::transition() const {
    Eigen::MatrixXd p = adjacency.to_dense();
    for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= degrees(i);
    return p;
}

DiffusionModel diffusion_model(const SparseSym& w, std::size_t n_eigs, double t, ComponentPolicy policy) {
    if (w.dim() == 0) throw ContractError("diffusion_model: empty graph");
    if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("diffusion time t must be non-negative");
    DiffusionModel model;
    model.n_nodes = w.dim();
    model.t = t;
    model.component = connected_components(w, model.n_components);
    model.local.assign(model.n_nodes, -1);
    for (std::size_t i = 0; i < model.n_nodes; ++i) {
        if (policy == ComponentPolicy::all || model.component[i] == 0) {
            model.local[i] = static_cast<std::ptrdiff_t>(model.nodes.size());
            model.nodes.push_back(i);
        }
    }
    const std::size_t n = model.nodes.size();
    model.adjacency = SparseSym(n);
    for (const auto& e : w.entries()) {
        if (model.contains(e.row)) {
            model.adjacency.set(static_cast<std::size_t>(model.local[e.row]),
                                static_cast<std::size_t>(model.local[e.col]), e.weight);
        }
    }
    model.degrees = model.adjacency.degrees();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(model.degrees(static_cast<Eigen::Index>(i)) > 0.0)) {
            throw ContractError("diffusion_model: node " + std::to_string(model.nodes[i]) + " has zero degree");
        }
    }
    const double total = model.degrees.sum();
    model.pi = model.degrees / total;

    // Components are block-diagonal in A, so each is solved on its own.
    const std::size_t used = policy == ComponentPolicy::all ? model.n_components : 1;
    std::vector<std::vector<std::size_t>> members(used);
    for (std::size_t i = 0; i < n; ++i) members[model.component[model.nodes[i]]].push_back(i);
    std::vector<std::ptrdiff_t> pos(n, -1);
    struct Pair {
        double value;
        std::size_t comp;
        std::size_t index;
    };
    std::vector<Pair> pairs;
    std::vector<EigenPairs> solved(used);
    const Eigen::VectorXd inv_sqrt_d = model.degrees.cwiseSqrt().cwiseInverse();
    for (std::size_t c = 0; c < used; ++c) {
        const auto& mem = members[c];
        for (std::size_t k = 0; k < mem.size(); ++k) pos[mem[k]] = static_cast<std::ptrdiff_t>(k);
        SparseSym a(mem.size());
        for (const auto& e : model.adjacency.entries()) {
            if (model.component[model.nodes[e.row]] != c) continue;
            a.set(static_cast<std::size_t>(pos[e.row]), static_cast<std::size_t>(pos[e.col]),
                  e.weight * inv_sqrt_d(static_cast<Eigen::Index>(e.row)) * inv_sqrt_d(static_cast<Eigen::Index>(e.col)));
        }
        const std::size_t m = n_eigs == 0 ? mem.size() : std::min(n_eigs, mem.size());
        solved[c] = eig_sym(a, m);
        canonicalize_signs(solved[c].vectors);
        for (Eigen::Index k = 0; k < solved[c].values.size(); ++k) {
            pairs.push_back({solved[c].values(k), c, static_cast<std::size_t>(k)});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        const double ma = std::abs(a.value), mb = std::abs(b.value);
        if (ma != mb) return ma > mb;
        return a.value > b.value;
    });
    if (n_eigs != 0 && pairs.size() > n_eigs) pairs.resize(n_eigs);

    model.lambda.resize(static_cast<Eigen::Index>(pairs.size()));
    model.psi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pairs.size()));
    const double scale = std::sqrt(total);
    for (std::size_t m = 0; m < pairs.size(); ++m) {
        const auto mi = static_cast<Eigen::Index>(m);
        model.lambda(mi) = pairs[m].value;
        const auto& mem = members[pairs[m].comp];
        const auto& vecs = solved[pairs[m].comp].vectors;
        for (std::size_t k = 0; k < mem.size(); ++k) {
            const auto node = static_cast<Eigen::Index>(mem[k]);
            model.psi(node, mi) = scale * inv_sqrt_d(node) * vecs(static_cast<Eigen::Index>(k),
                                                                   static_cast<Eigen::Index>(pairs[m].index));
        }
    }
    return model;
}

double diffusion_distance(const DiffusionModel& model, std::size_t i, std::size_t j) {
    check_node(model, i);
    check_node(model, j);
    if (i == j) return 0.0;
    const Eigen::Index a = model.local[i], b = model.local[j];
    double s = 0.0;
    for (Eigen::Index m = 0; m < model.lambda.size(); ++m) {
        const double diff = model.psi(a, m) - model.psi(b, m);
        s += std::pow(std::abs(model.lambda(m)), 2.0 * model.t) * diff * diff;
    }
    return std::sqrt(s);
}

ModeScores mode_scores(const DiffusionModel& model, const Eigen::VectorXd& density) {
    if (static_cast<std::size_t>(density.size()) != model.n_nodes) {
        throw ContractError("mode_scores: density length does not match the graph");
    }
    ModeScores out;
    out.d_t = Eigen::VectorXd::Zero(density.size());
    const std::size_t n = model.nodes.size();
    if (n == 0) {
        out.delta = out.d_t;
        return out;
    }
    const Eigen::MatrixXd phi = model.embedding();
    std::size_t top = 0;
    for (std::size_t a = 1; a < n; ++a) {
        if (density(static_cast<Eigen::Index>(model.nodes[a])) > density(static_cast<Eigen::Index>(model.nodes[top])))
            top = a;
    }
    parallel_for(0, n, [&](std::size_t a) {
        const double za = density(static_cast<Eigen::Index>(model.nodes[a]));
        const auto ai = static_cast<Eigen::Index>(a);
        double best = a == top ? 0.0 : std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a) continue;
            const double d = std::sqrt((phi.row(ai) - phi.row(static_cast<Eigen::Index>(b))).squaredNorm());
            if (a == top) {
                best = std::max(best, d);
            } else if (density(static_cast<Eigen::Index>(model.nodes[b])) >= za) {
                best = std::min(best, d);
            }
        }
        out.d_t(static_cast<Eigen::Index>(model.nodes[a])) = best;
    });
    out.delta = density.cwiseProduct(out.d_t);
    return out;
}

std::string to_string(LabelStage stage) {
    switch (stage) {
        case LabelStage::mode: return "mode";
        case LabelStage::backbone: return "backbone";
        case LabelStage::density: return "density";
        case LabelStage::fallback: return "fallback";
        case LabelStage::feature: return "feature";
        case LabelStage::majority: return "majority";
    }
    return "unknown";
}

RepresentativeLabels assign_labels(const DiffusionModel& model, const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& density, const Eigen::VectorXd& delta,
                                   std::size_t n_clusters, std::size_t k_n) {
    const std::size_t n = model.n_nodes;
    if (static_cast<std::size_t>(features.rows()) != n || static_cast<std::size_t>(density.size()) != n ||
        static_cast<std::size_t>(delta.size()) != n) {
        throw ContractError("assign_labels: inputs do not match the graph size");
    }
    if (n_clusters == 0) throw ParameterError("cluster count must be at least 1");
    if (n_clusters > model.nodes.size()) {
        throw ParameterError("cluster count " + std::to_string(n_clusters) + " exceeds the " +
                             std::to_string(model.nodes.size()) + " modelled representatives");
    }
    if (n_clusters > 65535) throw ParameterError("cluster count exceeds 16-bit label range");
    auto zeta = [&](std::size_t i) { return density(static_cast<Eigen::Index>(i)); };

    RepresentativeLabels out;
    out.labels.assign(n, 0);
    out.stage.assign(n, LabelStage::density);

    std::vector<std::size_t> by_delta = model.nodes;
    std::stable_sort(by_delta.begin(), by_delta.end(), [&](std::size_t a, std::size_t b) {
        return delta(static_cast<Eigen::Index>(a)) > delta(static_cast<Eigen::Index>(b));
    });
    for (std::size_t c = 0; c < n_clusters; ++c) {
        out.modes.push_back(by_delta[c]);
        out.labels[by_delta[c]] = static_cast<std::uint16_t>(c + 1);
        out.stage[by_delta[c]] = LabelStage::mode;
    }

    const std::size_t kb = std::min(k_n, n - 1);
    if (kb > 0) {
        Eigen::MatrixXd mode_rows(static_cast<Eigen::Index>(n_clusters), features.cols());
        for (std::size_t c = 0; c < n_clusters; ++c)
            mode_rows.row(static_cast<Eigen::Index>(c)) = features.row(static_cast<Eigen::Index>(out.modes[c]));
        // k + 1 neighbours so the mode itself can be dropped from its own list.
        const KnnResult nn = knn(features, mode_rows, std::min(kb + 1, n), false);
        for (std::size_t c = 0; c < n_clusters; ++c) {
            std::size_t taken = 0;
            for (std::size_t r = 0; r < nn.k && taken < kb; ++r) {
                const std::size_t j = nn.index(c, r);
                if (j == out.modes[c]) continue;
                ++taken;
                if (out.labels[j] == 0) {
                    out.labels[j] = out.labels[out.modes[c]];
                    out.stage[j] = LabelStage::backbone;
                }
            }
        }
    }

    const Eigen::MatrixXd phi = model.embedding();
    std::vector<std::size_t> by_density = model.nodes;
    std::stable_sort(by_density.begin(), by_density.end(),
                     [&](std::size_t a, std::size_t b) { return zeta(a) > zeta(b); });
    for (std::size_t i : by_density) {
        if (out.labels[i] != 0) continue;
        const auto li = static_cast<Eigen::Index>(model.local[i]);
        double best = std::numeric_limits<double>::infinity(), any_best = best;
        std::size_t arg = n, any_arg = n;
        for (std::size_t j : model.nodes) {
            if (out.labels[j] == 0 || j == i) continue;
            const double d = (phi.row(li) - phi.row(static_cast<Eigen::Index>(model.local[j]))).squaredNorm();
            if (zeta(j) > zeta(i) && d < best) best = d, arg = j;
            if (d < any_best) any_best = d, any_arg = j;
        }
        if (arg == n) {
            arg = any_arg;
            out.stage[i] = LabelStage::fallback;
            ++out.fallbacks;
        }
        out.labels[i] = out.labels[arg];
    }

    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < n; ++i)
        if (!model.contains(i) && out.labels[i] == 0) outside.push_back(i);
    std::stable_sort(outside.begin(), outside.end(), [&](std::size_t a, std::size_t b) { return zeta(a) > zeta(b); });
    for (std::size_t i : outside) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (out.labels[j] == 0 || j == i) continue;
            const double d = (features.row(static_cast<Eigen::Index>(i)) - features.row(static_cast<Eigen::Index>(j)))
                                 .squaredNorm();
            if (d < best) best = d, arg = j;
        }
        out.labels[i] = out.labels[arg];
        out.stage[i] = LabelStage::feature;
    }
    return out;
}

LabelMask majority_vote(const SuperpixelSegmentation& seg, const RepresentativeSet& reps,
                        const std::vector<std::uint16_t>& labels) {
    if (labels.size() != reps.size()) throw ContractError("majority_vote: one label per representative required");
    std::vector<std::vector<std::uint16_t>> votes(seg.count());
    for (std::size_t r = 0; r < reps.size(); ++r) votes[reps.segment[r] - 1].push_back(labels[r]);
    LabelMask out(seg.height(), seg.width());
    const auto& members = seg.all_members();
    for (std::size_t s = 0; s < seg.count(); ++s) {
        auto& v = votes[s];
        if (v.empty()) throw ContractError("superpixel " + std::to_string(s + 1) + " has no labelled representative");
        std::sort(v.begin(), v.end());
        std::uint16_t winner = v[0];
        std::size_t best = 0;
        for (std::size_t a = 0; a < v.size();) {
            std::size_t b = a;
            while (b < v.size() && v[b] == v[a]) ++b;
            if (b - a > best) best = b - a, winner = v[a];
            a = b;
        }
        for (std::size_t px : members[s]) out[px] = winner;
    }
    return out;
}

void ClusterParams::validate(std::size_t pixels) const {
    if (n_superpixels == 0 || n_superpixels > pixels) {
        throw ParameterError("superpixel count must be in [1, " + std::to_string(pixels) + "], got " +
                             std::to_string(n_superpixels));
    }
    if (reps_per_superpixel == 0) throw ParameterError("representatives per superpixel must be at least 1");
    if (k_n == 0) throw ParameterError("k_n must be at least 1");
    if (sigma0 && !(*sigma0 > 0.0 && std::isfinite(*sigma0))) throw ParameterError("sigma0 must be positive");
    if (!(radius > 0.0)) throw ParameterError("radius must be positive");
    if (n_clusters == 0) throw ParameterError("cluster count must be at least 1");
    if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("diffusion time must be non-negative");
    if (balance && !(*balance >= 0.0)) throw ParameterError("balance weight must be non-negative");
    if (edge_sigma && !(*edge_sigma > 0.0)) throw ParameterError("edge sigma must be positive");
}

PreparedClustering prepare_clustering(const HsiCube& features, const HsiCube& pc_image, const ClusterParams& params) {
    params.validate(features.pixels());
    if (features.height() != pc_image.height() || features.width() != pc_image.width()) {
        throw ContractError("feature cube and false-colour image differ in size");
    }
    PreparedClustering prep;
    const PixelGraph graph =
        build_pixel_graph(pc_image, params.edge_sigma ? *params.edge_sigma : default_edge_sigma(pc_image));
    prep.segmentation = ers_segment(graph, params.n_superpixels, params.balance, &prep.ers_stats);

    const Eigen::MatrixXd flat = flatten(features);
    prep.sigma_density = params.sigma0 ? *params.sigma0 : median_knn_distance(flat, params.k_n);
    const Eigen::VectorXd zeta = local_density(flat, params.k_n, prep.sigma_density);
    prep.reps = select_representatives(prep.segmentation, zeta, params.reps_per_superpixel, flat);

    prep.sigma_graph = params.sigma0 ? *params.sigma0 : median_knn_distance(prep.reps.features, params.k_n);
    const SparseSym w = build_graph(prep.reps.features, prep.reps.coords, prep.sigma_graph, params.radius,
                                    params.k_n, &prep.graph_stats);
    prep.n_eigs = params.n_eigs ? params.n_eigs : std::min(prep.reps.size(), kDefaultEigenpairCap);
    prep.model = diffusion_model(w, prep.n_eigs, params.t, params.policy);
    prep.scores = mode_scores(prep.model, prep.reps.density);
    return prep;
}

ClusterMap label_clustering(const PreparedClustering& prep, std::size_t n_clusters, std::size_t k_n) {
    const RepresentativeLabels rl =
        assign_labels(prep.model, prep.reps.features, prep.reps.density, prep.scores.delta, n_clusters, k_n);
    ClusterMap map;
    map.labels = majority_vote(prep.segmentation, prep.reps, rl.labels);
    map.stage.assign(map.labels.pixels(), LabelStage::majority);
    for (std::size_t r = 0; r < prep.reps.size(); ++r) map.stage[prep.reps.pixels[r]] = rl.stage[r];
    for (std::size_t m : rl.modes) map.mode_pixels.push_back(prep.reps.pixels[m]);
    return map;
}

ClusterMap cluster(const HsiCube& features, const HsiCube& pc_image, const ClusterParams& params) {
    return label_clustering(prepare_clustering(features, pc_image, params), params.n_clusters, params.k_n);
}

void save_provenance(const ClusterMap& map, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "pixel_index,label,stage\n";
    for (std::size_t i = 0; i < map.labels.pixels(); ++i) {
        out << i << ',' << map.labels[i] << ',' << to_string(map.stage[i]) << '\n';
    }
    binary::write_file(path, out.str());
}

}  // namespace ds2dl
