#include "ds2dl/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

#include "ds2dl/error.hpp"
#include "ds2dl/numerics.hpp"

namespace ds2dl {

namespace {

template <typename Fn>
void for_each_neighbor_pair(std::size_t h, std::size_t w, Fn&& fn) {
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t i = r * w + c;
            if (c + 1 < w) fn(i, i + 1);
            if (r + 1 < h) {
                if (c > 0) fn(i, i + w - 1);
                fn(i, i + w);
                if (c + 1 < w) fn(i, i + w + 1);
            }
        }
    }
}

double squared_diff(const HsiCube& img, std::size_t a, std::size_t b) {
    const auto pa = img.pixel(a);
    const auto pb = img.pixel(b);
    double s = 0.0;
    for (std::size_t k = 0; k < pa.size(); ++k) s += (pa[k] - pb[k]) * (pa[k] - pb[k]);
    return s;
}

double neg_xlogx(double x) { return x > 0.0 ? -x * std::log(x) : 0.0; }

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    std::size_t size(std::size_t root) const { return size_[root]; }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a)) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

// Random-walk entropy-rate bookkeeping. Every node keeps its total incident
// weight; weight of unselected edges sits on the node's self-loop.
class EntropyRate {
public:
    explicit EntropyRate(const PixelGraph& g) : node_weight_(g.height * g.width, 0.0) {
        for (const auto& e : g.edges) {
            node_weight_[e.a] += e.weight;
            node_weight_[e.b] += e.weight;
        }
        loop_weight_ = node_weight_;
        total_ = std::accumulate(node_weight_.begin(), node_weight_.end(), 0.0);
    }

    double gain(const PixelEdge& e) const {
        if (total_ <= 0.0) return 0.0;
        return node_gain(e.a, e.weight) + node_gain(e.b, e.weight);
    }

    void select(const PixelEdge& e) {
        loop_weight_[e.a] = std::max(0.0, loop_weight_[e.a] - e.weight);
        loop_weight_[e.b] = std::max(0.0, loop_weight_[e.b] - e.weight);
    }

private:
    // mu_i * [f(w/w_i) + f((s_i - w)/w_i) - f(s_i/w_i)], f(x) = -x log x.
    double node_gain(std::size_t i, double w) const {
        const double wi = node_weight_[i];
        if (wi <= 0.0) return 0.0;
        const double s = loop_weight_[i];
        const double rest = std::max(0.0, s - w);
        return (wi / total_) * (neg_xlogx(w / wi) + neg_xlogx(rest / wi) - neg_xlogx(s / wi));
    }

    std::vector<double> node_weight_;
    std::vector<double> loop_weight_;
    double total_ = 0.0;
};

// Gain of the balancing term H(Z_A) - N_A when components of sizes a and b merge.
double balance_gain(std::size_t a, std::size_t b, double n) {
    const double pa = static_cast<double>(a) / n;
    const double pb = static_cast<double>(b) / n;
    return 1.0 - neg_xlogx(pa) - neg_xlogx(pb) + neg_xlogx(pa + pb);
}

}  // namespace

double default_edge_sigma(const HsiCube& img) {
    double sum = 0.0;
    std::size_t count = 0;
    for_each_neighbor_pair(img.height(), img.width(), [&](std::size_t a, std::size_t b) {
        sum += squared_diff(img, a, b);
        count += img.bands();
    });
    if (count == 0 || sum <= 0.0) return 1.0;
    return std::sqrt(sum / static_cast<double>(count));
}

PixelGraph build_pixel_graph(const HsiCube& img, double sigma_e) {
    if (img.bands() != 3) {
        throw ParameterError("build_pixel_graph expects a 3-band image, got " + std::to_string(img.bands()));
    }
    if (!(sigma_e > 0.0) || !std::isfinite(sigma_e)) throw ParameterError("sigma_e must be positive");
    PixelGraph g;
    g.height = img.height();
    g.width = img.width();
    const double denom = 2.0 * sigma_e * sigma_e;
    for_each_neighbor_pair(g.height, g.width, [&](std::size_t a, std::size_t b) {
        const double w = std::exp(-squared_diff(img, a, b) / denom);
        g.edges.push_back({a, b, std::max(w, std::numeric_limits<double>::min())});
    });
    return g;
}

SuperpixelSegmentation::SuperpixelSegmentation(std::size_t height, std::size_t width, std::vector<std::uint32_t> ids)
    : height_(height), width_(width), ids_(std::move(ids)) {
    if (ids_.size() != height * width) throw ContractError("segmentation size does not match H*W");
    for (auto id : ids_) {
        if (id == 0) throw ContractError("segment ids start at 1");
        count_ = std::max<std::size_t>(count_, id);
    }
    members_.assign(count_, {});
    for (std::size_t i = 0; i < ids_.size(); ++i) members_[ids_[i] - 1].push_back(i);
    for (std::size_t s = 0; s < count_; ++s) {
        if (members_[s].empty()) throw ContractError("segment " + std::to_string(s + 1) + " is empty");
    }
}

LabelMask SuperpixelSegmentation::to_label_mask() const {
    if (count_ > 65535) throw ParameterError("more than 65535 segments do not fit a DSL1 file");
    std::vector<std::uint16_t> labels(ids_.begin(), ids_.end());
    return LabelMask(height_, width_, std::move(labels));
}

SuperpixelSegmentation SuperpixelSegmentation::from_label_mask(const LabelMask& mask) {
    std::vector<std::uint32_t> ids(mask.labels().begin(), mask.labels().end());
    return SuperpixelSegmentation(mask.height(), mask.width(), std::move(ids));
}

std::vector<std::size_t> segment_members(const SuperpixelSegmentation& seg, std::size_t id) {
    if (id == 0 || id > seg.count()) {
        throw ParameterError("segment id " + std::to_string(id) + " outside 1.." + std::to_string(seg.count()));
    }
    return seg.all_members()[id - 1];
}

double default_balance_weight(const PixelGraph& graph, std::size_t n_segments) {
    const EntropyRate rate(graph);
    const double n = static_cast<double>(graph.height * graph.width);
    double max_entropy = 0.0;
    for (const auto& e : graph.edges) max_entropy = std::max(max_entropy, rate.gain(e));
    const double max_balance = n >= 2.0 ? balance_gain(1, 1, n) : 1.0;
    if (max_entropy <= 0.0 || max_balance <= 0.0) return 1.0;
    return 0.5 * static_cast<double>(n_segments) * max_entropy / max_balance;
}

SuperpixelSegmentation ers_segment(const PixelGraph& graph, std::size_t n_segments,
                                   std::optional<double> lambda_balance, ErsStats* stats) {
    const std::size_t n = graph.height * graph.width;
    if (n_segments < 1 || n_segments > n) {
        throw ParameterError("number of superpixels " + std::to_string(n_segments) + " outside 1.." +
                             std::to_string(n));
    }
    const double lambda = lambda_balance ? *lambda_balance : default_balance_weight(graph, n_segments);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda_balance must be non-negative");

    EntropyRate rate(graph);
    DisjointSets sets(n);
    const double nd = static_cast<double>(n);
    auto gain_of = [&](std::size_t idx) {
        const auto& e = graph.edges[idx];
        const std::size_t ra = sets.find(e.a);
        const std::size_t rb = sets.find(e.b);
        const double b = ra == rb ? 0.0 : balance_gain(sets.size(ra), sets.size(rb), nd);
        return rate.gain(e) + lambda * b;
    };

    // Max-heap on (gain, -edge index): equal gains pop the lowest edge index.
    struct Entry {
        double gain;
        std::size_t edge;
        bool operator<(const Entry& o) const { return gain != o.gain ? gain < o.gain : edge > o.edge; }
    };
    std::vector<Entry> initial;
    initial.reserve(graph.edges.size());
    for (std::size_t i = 0; i < graph.edges.size(); ++i) initial.push_back({gain_of(i), i});
    std::priority_queue<Entry> heap(std::less<Entry>{}, std::move(initial));

    std::size_t components = n;
    ErsStats local;
    local.lambda_balance = lambda;
    double last_gain = std::numeric_limits<double>::infinity();
    const double slack = 1e-9 * (1.0 + lambda);
    while (components > n_segments && !heap.empty()) {
        Entry top = heap.top();
        heap.pop();
        const double fresh = gain_of(top.edge);
        // Lazy evaluation: stale bounds only ever overestimate (submodularity).
        if (!heap.empty() && Entry{fresh, top.edge} < heap.top()) {
            heap.push({fresh, top.edge});
            continue;
        }
        if (fresh > last_gain) {
            local.max_gain_increase = std::max(local.max_gain_increase, fresh - last_gain);
            if (fresh - last_gain > slack) {
                throw NumericError("ERS gain sequence increased by " + std::to_string(fresh - last_gain) +
                                   "; objective is not behaving submodularly");
            }
        }
        last_gain = fresh;
        const auto& e = graph.edges[top.edge];
        rate.select(e);
        ++local.edges_selected;
        if (sets.find(e.a) != sets.find(e.b)) {
            sets.unite(e.a, e.b);
            --components;
            ++local.merges;
        }
    }

    // Ids by first appearance in raster order.
    std::vector<std::uint32_t> root_id(n, 0);
    std::vector<std::uint32_t> ids(n, 0);
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = sets.find(i);
        if (root_id[root] == 0) root_id[root] = ++next;
        ids[i] = root_id[root];
    }
    if (stats) *stats = local;
    return SuperpixelSegmentation(graph.height, graph.width, std::move(ids));
}

HsiCube pca_image(const HsiCube& cube, std::size_t components) {
    if (components == 0) throw ParameterError("pca_image needs at least one component");
    HsiCube out(cube.height(), cube.width(), components);
    const std::size_t usable = std::min({components, cube.bands(), cube.pixels() > 1 ? cube.pixels() : 0});
    if (usable == 0) return out;
    const Eigen::MatrixXd scores = pca(flatten(cube), usable).scores;
    for (std::size_t i = 0; i < cube.pixels(); ++i)
        for (std::size_t c = 0; c < usable; ++c)
            out.pixel(i)[c] = static_cast<float>(scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    return out;
}

}  // namespace ds2dl
