#include "ds2dl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "binary.hpp"
#include "ds2dl/error.hpp"
#include "ds2dl/numerics.hpp"

namespace ds2dl {

namespace {

void require_total(const ConfusionMatrix& cm, const char* what) {
    if (!(cm.total() > 0.0)) throw ContractError(std::string(what) + ": no ground-truth labelled pixels");
}

double entropy(const Eigen::VectorXd& counts, double total) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
        if (counts(i) > 0.0) {
            const double p = counts(i) / total;
            h -= p * std::log(p);
        }
    }
    return h;
}

}  // namespace

ConfusionMatrix confusion(const LabelMask& pred, const LabelMask& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        throw ContractError("confusion: prediction is " + std::to_string(pred.height()) + "x" +
                            std::to_string(pred.width()) + ", ground truth is " + std::to_string(gt.height()) + "x" +
                            std::to_string(gt.width()));
    }
    std::size_t clusters = 0, classes = 0;
    for (std::size_t i = 0; i < gt.pixels(); ++i) {
        if (gt[i] == 0) continue;
        if (pred[i] == 0) throw ContractError("confusion: pixel " + std::to_string(i) + " has no predicted label");
        clusters = std::max<std::size_t>(clusters, pred[i]);
        classes = std::max<std::size_t>(classes, gt[i]);
    }
    ConfusionMatrix cm;
    cm.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clusters), static_cast<Eigen::Index>(classes));
    for (std::size_t i = 0; i < gt.pixels(); ++i)
        if (gt[i] != 0) cm.counts(pred[i] - 1, gt[i] - 1) += 1.0;
    return cm;
}

AlignedAccuracy aligned_accuracy(const ConfusionMatrix& cm) {
    require_total(cm, "aligned_accuracy");
    const double total = cm.total();
    const Eigen::VectorXd rows = cm.counts.rowwise().sum();
    const Eigen::VectorXd cols = cm.counts.colwise().sum().transpose();
    AlignedAccuracy out;
    double matched = 0.0, pe = 0.0;
    std::vector<double> recall(static_cast<std::size_t>(cm.counts.cols()), 0.0);
    for (const auto& [c, g] : hungarian(-cm.counts)) {
        const auto ci = static_cast<Eigen::Index>(c), gi = static_cast<Eigen::Index>(g);
        out.mapping.emplace_back(c + 1, g + 1);
        matched += cm.counts(ci, gi);
        pe += rows(ci) * cols(gi);
        if (cols(gi) > 0.0) recall[g] = cm.counts(ci, gi) / cols(gi);
    }
    out.oa = matched / total;
    pe /= total * total;
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t g = 0; g < recall.size(); ++g) {
        if (cols(static_cast<Eigen::Index>(g)) > 0.0) {
            sum += recall[g];
            ++present;
        }
    }
    out.aa = sum / static_cast<double>(present);
    out.kappa = std::abs(1.0 - pe) < 1e-15 ? (out.oa == 1.0 ? 1.0 : 0.0) : (out.oa - pe) / (1.0 - pe);
    return out;
}

double purity(const ConfusionMatrix& cm) {
    require_total(cm, "purity");
    return cm.counts.rowwise().maxCoeff().sum() / cm.total();
}

double nmi(const ConfusionMatrix& cm) {
    require_total(cm, "nmi");
    const double total = cm.total();
    const Eigen::VectorXd rows = cm.counts.rowwise().sum();
    const Eigen::VectorXd cols = cm.counts.colwise().sum().transpose();
    const double hp = entropy(rows, total), hg = entropy(cols, total);
    if (hp == 0.0 || hg == 0.0) {
        // Both partitions are a single block only when they are identical.
        return hp == 0.0 && hg == 0.0 ? 1.0 : 0.0;
    }
    double mi = 0.0;
    for (Eigen::Index c = 0; c < cm.counts.rows(); ++c)
        for (Eigen::Index g = 0; g < cm.counts.cols(); ++g) {
            const double n = cm.counts(c, g);
            if (n > 0.0) mi += n / total * std::log(n * total / (rows(c) * cols(g)));
        }
    return std::clamp(mi / std::sqrt(hp * hg), 0.0, 1.0);
}

std::string MetricsReport::to_csv() const {
    std::string out = "metric,value\n";
    auto row = [&](const char* name, const std::optional<double>& v) {
        if (!v) return;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s,%.6f\n", name, *v);
        out += buf;
    };
    row("OA", oa);
    row("AA", aa);
    row("kappa", kappa);
    row("purity_1x", purity_1x);
    row("purity_2x", purity_2x);
    row("purity_3x", purity_3x);
    row("NMI", nmi);
    row("RT_seconds", runtime_seconds);
    return out;
}

void save_report(const MetricsReport& report, const std::filesystem::path& path) {
    binary::write_file(path, report.to_csv());
}

}  // namespace ds2dl
