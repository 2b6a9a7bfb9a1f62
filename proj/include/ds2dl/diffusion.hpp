#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ds2dl/io.hpp"
#include "ds2dl/numerics.hpp"
#include "ds2dl/superpixel.hpp"

namespace ds2dl {

/// zeta(x) = sum over the k_n nearest other points y of exp(-|x - y|^2 / sigma0^2).
Eigen::VectorXd local_density(const Eigen::MatrixXd& features, std::size_t k_n, double sigma0);

/// Median of all k_n-nearest-neighbour distances (self excluded). Falls back
/// to 1 when that median is 0.
double median_knn_distance(const Eigen::MatrixXd& features, std::size_t k_n);

struct RepresentativeSet {
    std::vector<std::size_t> pixels;    // scene pixel index per representative
    std::vector<std::size_t> segment;   // 1-based superpixel id per representative
    Eigen::MatrixXd features;           // one row per representative
    Eigen::MatrixXd coords;             // (row, col) per representative
    Eigen::VectorXd density;            // zeta per representative
    std::vector<std::size_t> short_segments;  // superpixels with fewer than k pixels

    std::size_t size() const { return pixels.size(); }
};

/// Top-k pixels by zeta inside each superpixel (ties by lower pixel index),
/// listed superpixel by superpixel. `features` has one row per scene pixel.
RepresentativeSet select_representatives(const SuperpixelSegmentation& seg, const Eigen::VectorXd& density,
                                         std::size_t k, const Eigen::MatrixXd& features);

struct GraphStats {
    std::size_t isolated = 0;  // representatives with no neighbour inside the radius
};

/// Spatially gated kNN graph: each node links to its k_n feature-space nearest
/// nodes within spatial distance `radius`, weight exp(-|x_i - x_j|^2 / sigma0^2),
/// symmetrised by max, plus unit self-loops.
SparseSym build_graph(const Eigen::MatrixXd& features, const Eigen::MatrixXd& coords, double sigma0, double radius,
                      std::size_t k_n, GraphStats* stats = nullptr);

enum class ComponentPolicy {
    all,      // every connected component, eigenpairs pooled across components
    largest,  // only the largest component; other nodes stay outside the model
};

std::string to_string(ComponentPolicy policy);
ComponentPolicy parse_component_policy(const std::string& text);

/// Markov chain P = D^-1 W restricted to the modelled nodes, with pi-orthonormal
/// right eigenvectors psi and eigenvalues sorted by descending |lambda|.
struct DiffusionModel {
    std::size_t n_nodes = 0;                // nodes of the input graph
    std::vector<std::size_t> nodes;         // modelled graph nodes, ascending
    std::vector<std::ptrdiff_t> local;      // graph node -> row in psi, or -1
    std::vector<std::size_t> component;     // component id per graph node (0 = largest)
    std::size_t n_components = 0;
    SparseSym adjacency{0};                 // W over modelled nodes (local indices)
    Eigen::VectorXd degrees;
    Eigen::VectorXd pi;
    Eigen::VectorXd lambda;
    Eigen::MatrixXd psi;                    // local node x eigenpair
    double t = 0.0;

    bool contains(std::size_t node) const { return node < local.size() && local[node] >= 0; }
    /// Rows psi scaled by |lambda|^t, so D_t is the Euclidean distance between rows.
    Eigen::MatrixXd embedding() const;
    /// Dense P over modelled nodes.
    Eigen::MatrixXd transition() const;
};

/// Eigen-decomposes the graph. n_eigs = 0 keeps every eigenpair.
DiffusionModel diffusion_model(const SparseSym& w, std::size_t n_eigs, double t,
                               ComponentPolicy policy = ComponentPolicy::all);

/// sqrt(sum_m |lambda_m|^(2t) (psi_m(i) - psi_m(j))^2). ParameterError for
/// nodes outside the model.
double diffusion_distance(const DiffusionModel& model, std::size_t i, std::size_t j);

struct ModeScores {
    Eigen::VectorXd d_t;    // per graph node; 0 outside the model
    Eigen::VectorXd delta;  // zeta * d_t
};

/// d_t(x) = min D_t to another modelled node of density >= zeta(x); for the
/// density argmax, the largest D_t to any modelled node.
ModeScores mode_scores(const DiffusionModel& model, const Eigen::VectorXd& density);

enum class LabelStage : std::uint8_t { mode, backbone, density, fallback, feature, majority };
std::string to_string(LabelStage stage);

struct RepresentativeLabels {
    std::vector<std::uint16_t> labels;  // 1..K per representative
    std::vector<LabelStage> stage;
    std::vector<std::size_t> modes;     // representative index per label, label order
    std::size_t fallbacks = 0;          // nodes labelled without a denser labelled node
};

/// Modes are the K largest delta (ties by index) among modelled nodes; each
/// mode's backbone (itself plus its k_n feature-space neighbours) inherits its
/// label, first mode wins; the rest follow decreasing density, copying the
/// D_t-nearest labelled node of strictly higher density. Nodes outside the
/// model copy their feature-space nearest labelled node.
RepresentativeLabels assign_labels(const DiffusionModel& model, const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& density, const Eigen::VectorXd& delta,
                                   std::size_t n_clusters, std::size_t k_n);

/// Each superpixel takes the most common label of its representatives,
/// smallest label on ties.
LabelMask majority_vote(const SuperpixelSegmentation& seg, const RepresentativeSet& reps,
                        const std::vector<std::uint16_t>& labels);

struct ClusterParams {
    std::size_t n_superpixels = 0;        // N_s, required
    std::size_t reps_per_superpixel = 10; // k
    std::size_t k_n = 10;
    std::optional<double> sigma0;         // unset = median kNN distance
    double radius = std::numeric_limits<double>::infinity();
    std::size_t n_clusters = 0;           // K, required
    double t = 30.0;
    std::size_t n_eigs = 0;               // 0 = min(|X_s|, 100)
    ComponentPolicy policy = ComponentPolicy::all;
    std::optional<double> balance;        // ERS lambda; unset = default_balance_weight
    std::optional<double> edge_sigma;     // ERS sigma_e; unset = default_edge_sigma

    void validate(std::size_t pixels) const;
};

struct ClusterMap {
    LabelMask labels;
    std::vector<std::size_t> mode_pixels;    // scene pixel per cluster label
    std::vector<LabelStage> stage;           // per scene pixel
};

/// Everything that does not depend on the number of clusters.
struct PreparedClustering {
    SuperpixelSegmentation segmentation;
    RepresentativeSet reps;
    DiffusionModel model;
    ModeScores scores;
    double sigma_density = 0.0;
    double sigma_graph = 0.0;
    std::size_t n_eigs = 0;
    GraphStats graph_stats;
    ErsStats ers_stats;
};

/// `features` are the per-pixel clustering features (latent or raw spectra);
/// `pc_image` is the 3-band image the superpixels are computed on.
PreparedClustering prepare_clustering(const HsiCube& features, const HsiCube& pc_image, const ClusterParams& params);
ClusterMap label_clustering(const PreparedClustering& prepared, std::size_t n_clusters, std::size_t k_n);
ClusterMap cluster(const HsiCube& features, const HsiCube& pc_image, const ClusterParams& params);

/// "pixel_index,label,stage" CSV.
void save_provenance(const ClusterMap& map, const std::filesystem::path& path);

}  // namespace ds2dl
