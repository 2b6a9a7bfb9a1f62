#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "ds2dl/error.hpp"
#include "ds2dl/numerics.hpp"
#include "ds2dl/parallel.hpp"

namespace ds2dl {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Candidate {
    double dist2;
    std::size_t index;
    bool operator<(const Candidate& o) const {
        return dist2 != o.dist2 ? dist2 < o.dist2 : index < o.index;
    }
};

// Both search paths must compute distances with this exact summation order.
double squared_distance(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        const double diff = a[c] - b[c];
        s += diff * diff;
    }
    return s;
}

// Bounded max-heap of the k best candidates.
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

    bool full() const { return heap_.size() == k_; }
    const Candidate& worst() const { return heap_.front(); }

    void offer(const Candidate& c) {
        if (!full()) {
            heap_.push_back(c);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (c < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = c;
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    std::vector<Candidate> sorted() {
        std::sort_heap(heap_.begin(), heap_.end());
        return heap_;
    }

private:
    std::size_t k_;
    std::vector<Candidate> heap_;
};

class KdTree {
public:
    KdTree(const RowMajor& points) : pts_(points), d_(static_cast<std::size_t>(points.cols())) {
        order_.resize(static_cast<std::size_t>(points.rows()));
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(2 * order_.size() / kLeaf + 2);
        build(0, order_.size());
    }

    void search(const double* q, std::size_t skip, TopK& best) const {
        std::vector<double> offsets(d_, 0.0);
        visit(0, q, skip, best, offsets, 0.0);
    }

private:
    static constexpr std::size_t kLeaf = 16;

    struct Node {
        std::size_t begin, end;
        std::size_t dim = 0;
        double split = 0.0;
        std::size_t left = 0, right = 0;  // 0 = leaf
    };

    std::size_t build(std::size_t begin, std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back({begin, end});
        if (end - begin <= kLeaf) return id;
        std::size_t best_dim = 0;
        double best_spread = -1.0;
        for (std::size_t c = 0; c < d_; ++c) {
            double lo = pts_(static_cast<Eigen::Index>(order_[begin]), static_cast<Eigen::Index>(c));
            double hi = lo;
            for (std::size_t i = begin; i < end; ++i) {
                const double v = pts_(static_cast<Eigen::Index>(order_[i]), static_cast<Eigen::Index>(c));
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                best_dim = c;
            }
        }
        if (best_spread <= 0.0) return id;  // all points coincide
        const std::size_t mid = begin + (end - begin) / 2;
        auto coord = [&](std::size_t i) {
            return pts_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(best_dim));
        };
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             const double ca = coord(a), cb = coord(b);
                             return ca != cb ? ca < cb : a < b;
                         });
        const double split = coord(order_[mid]);
        nodes_[id].dim = best_dim;
        nodes_[id].split = split;
        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void visit(std::size_t id, const double* q, std::size_t skip, TopK& best, std::vector<double>& offsets,
               double bound) const {
        const Node& node = nodes_[id];
        if (node.left == 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t p = order_[i];
                if (p == skip) continue;
                best.offer({squared_distance(q, pts_.row(static_cast<Eigen::Index>(p)).data(), d_), p});
            }
            return;
        }
        const double diff = q[node.dim] - node.split;
        const std::size_t near = diff < 0.0 ? node.left : node.right;
        const std::size_t far = diff < 0.0 ? node.right : node.left;
        visit(near, q, skip, best, offsets, bound);
        const double old = offsets[node.dim];
        const double far_bound = bound - old * old + diff * diff;
        // Points at exactly the current worst distance may still win on index,
        // so prune only when strictly farther (with rounding slack).
        if (best.full() && far_bound > best.worst().dist2 * (1.0 + 1e-12) + 1e-300) return;
        offsets[node.dim] = diff;
        visit(far, q, skip, best, offsets, far_bound);
        offsets[node.dim] = old;
    }

    const RowMajor& pts_;
    std::size_t d_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace

KnnResult knn(const Eigen::MatrixXd& points, const Eigen::MatrixXd& queries, std::size_t k, bool exclude_self,
              const KnnOptions& options) {
    const auto n = static_cast<std::size_t>(points.rows());
    const auto q = static_cast<std::size_t>(queries.rows());
    const auto d = static_cast<std::size_t>(points.cols());
    if (queries.cols() != points.cols()) throw ContractError("knn: query dimension differs from point dimension");
    if (exclude_self && q != n) throw ContractError("knn: exclude_self requires queries to be the points");
    const std::size_t available = exclude_self ? (n == 0 ? 0 : n - 1) : n;
    if (k == 0 || k > available) {
        throw ParameterError("knn: k = " + std::to_string(k) + " but only " + std::to_string(available) +
                             " candidate points");
    }
    const RowMajor pts = points;
    const RowMajor qs = queries;
    KnnResult out;
    out.k = k;
    out.indices.resize(q * k);
    out.distances.resize(q * k);

    const bool use_tree = n > options.tree_threshold;
    const KdTree* tree = nullptr;
    std::optional<KdTree> storage;
    if (use_tree) {
        storage.emplace(pts);
        tree = &*storage;
    }
    const std::size_t none = n;  // never a valid index
    parallel_for(0, q, [&](std::size_t i) {
        const double* qp = qs.row(static_cast<Eigen::Index>(i)).data();
        const std::size_t skip = exclude_self ? i : none;
        TopK best(k);
        if (tree) {
            tree->search(qp, skip, best);
        } else {
            for (std::size_t p = 0; p < n; ++p) {
                if (p == skip) continue;
                best.offer({squared_distance(qp, pts.row(static_cast<Eigen::Index>(p)).data(), d), p});
            }
        }
        const auto sorted = best.sorted();
        for (std::size_t r = 0; r < k; ++r) {
            out.indices[i * k + r] = sorted[r].index;
            out.distances[i * k + r] = std::sqrt(sorted[r].dist2);
        }
    });
    return out;
}

KnnResult knn_self(const Eigen::MatrixXd& points, std::size_t k, const KnnOptions& options) {
    return knn(points, points, k, true, options);
}

}  // namespace ds2dl
