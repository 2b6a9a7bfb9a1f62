#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ds2dl/io.hpp"

namespace ds2dl {

/// counts(c - 1, g - 1) = pixels with predicted cluster c and class g; pixels
/// with ground truth 0 are skipped.
struct ConfusionMatrix {
    Eigen::MatrixXd counts;

    double total() const { return counts.sum(); }
};

ConfusionMatrix confusion(const LabelMask& pred, const LabelMask& gt);

struct AlignedAccuracy {
    double oa = 0.0;
    double aa = 0.0;
    double kappa = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> mapping;  // (cluster, class), 1-based
};

/// Clusters are matched one-to-one to classes by maximum overlap.
AlignedAccuracy aligned_accuracy(const ConfusionMatrix& cm);

double purity(const ConfusionMatrix& cm);

/// I(pred; gt) / sqrt(H(pred) H(gt)), natural log.
double nmi(const ConfusionMatrix& cm);

struct MetricsReport {
    std::optional<double> oa, aa, kappa;
    std::optional<double> purity_1x, purity_2x, purity_3x;
    std::optional<double> nmi;
    std::optional<double> runtime_seconds;

    /// "metric,value" lines with six decimals, unset metrics omitted.
    std::string to_csv() const;
};

void save_report(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace ds2dl
