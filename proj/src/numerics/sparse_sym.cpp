#include <cmath>
#include <string>

#include "ds2dl/error.hpp"
#include "ds2dl/numerics.hpp"

namespace ds2dl {

void SparseSym::check(std::size_t i, std::size_t j, double weight) const {
    if (i >= n_ || j >= n_) throw ParameterError("SparseSym index out of range");
    if (!std::isfinite(weight) || weight < 0.0) {
        throw ParameterError("SparseSym weight must be finite and non-negative, got " + std::to_string(weight));
    }
}

void SparseSym::set(std::size_t i, std::size_t j, double weight) {
    check(i, j, weight);
    if (weight == 0.0) {
        upper_.erase(key(i, j));
        return;
    }
    upper_[key(i, j)] = weight;
}

void SparseSym::set_max(std::size_t i, std::size_t j, double weight) {
    check(i, j, weight);
    if (weight == 0.0) return;
    auto [it, inserted] = upper_.try_emplace(key(i, j), weight);
    if (!inserted && it->second < weight) it->second = weight;
}

double SparseSym::get(std::size_t i, std::size_t j) const {
    const auto it = upper_.find(key(i, j));
    return it == upper_.end() ? 0.0 : it->second;
}

std::vector<SparseEntry> SparseSym::entries() const {
    std::vector<SparseEntry> out;
    out.reserve(upper_.size());
    for (const auto& [ij, w] : upper_) out.push_back({ij.first, ij.second, w});
    return out;
}

Eigen::VectorXd SparseSym::degrees() const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
    for (const auto& [ij, w] : upper_) {
        d(static_cast<Eigen::Index>(ij.first)) += w;
        if (ij.first != ij.second) d(static_cast<Eigen::Index>(ij.second)) += w;
    }
    return d;
}

Eigen::SparseMatrix<double> SparseSym::to_sparse() const {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(2 * upper_.size());
    for (const auto& [ij, w] : upper_) {
        const auto i = static_cast<int>(ij.first);
        const auto j = static_cast<int>(ij.second);
        triplets.emplace_back(i, j, w);
        if (i != j) triplets.emplace_back(j, i, w);
    }
    Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

Eigen::MatrixXd SparseSym::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    for (const auto& [ij, w] : upper_) {
        m(static_cast<Eigen::Index>(ij.first), static_cast<Eigen::Index>(ij.second)) = w;
        m(static_cast<Eigen::Index>(ij.second), static_cast<Eigen::Index>(ij.first)) = w;
    }
    return m;
}

}  // namespace ds2dl
