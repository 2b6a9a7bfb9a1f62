#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include "ds2dl/diffusion.hpp"
#include "ds2dl/error.hpp"
#include "ds2dl/io.hpp"
#include "ds2dl/metrics.hpp"
#include "ds2dl/parallel.hpp"
#include "ds2dl/superpixel.hpp"
#include "ds2dl/synth.hpp"
#include "ds2dl/umae.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ds2dl;

namespace {

constexpr int kExitParameter = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct SettingDef {
    const char* section;  // "" for top-level keys
    const char* key;
    const char* fallback;
    const char* help;
};

// Every key accepted in a config file. Flags are the keys with '_' -> '-'.
const std::vector<SettingDef> kSettings = {
    {"", "seed", "0", "random seed"},
    {"", "threads", "0", "worker threads (0 = hardware count)"},

    {"io", "cube", "", "hyperspectral cube (DSC1)"},
    {"io", "gt", "", "ground-truth label mask (DSL1)"},
    {"io", "latent", "", "latent feature cube (DSC1)"},
    {"io", "checkpoint", "", "autoencoder checkpoint (DSW1)"},
    {"io", "loss_log", "", "per-epoch loss CSV"},
    {"io", "truth", "", "generator parameters (JSON)"},
    {"io", "segments", "", "superpixel map (DSL1)"},
    {"io", "clusters", "", "cluster map (DSL1)"},
    {"io", "clusters_2x", "", "cluster map with twice the clusters (DSL1)"},
    {"io", "clusters_3x", "", "cluster map with three times the clusters (DSL1)"},
    {"io", "provenance", "", "per-pixel label provenance CSV"},
    {"io", "metrics", "", "metrics CSV"},
    {"io", "image", "", "rendered PPM image"},
    {"io", "runtime", "", "clustering wall time in seconds to include in the report"},

    {"synth", "height", "60", "rows"},
    {"synth", "width", "60", "columns"},
    {"synth", "bands", "30", "spectral bands"},
    {"synth", "classes", "4", "class regions"},
    {"synth", "noise", "0.05", "Gaussian noise standard deviation"},

    {"umae", "n_train", "512", "training pixels (farthest point sampling)"},
    {"umae", "patch", "3", "spatial patch size (odd)"},
    {"umae", "group_len", "3", "bands per group (odd)"},
    {"umae", "latent_dim", "48", "latent dimension D"},
    {"umae", "epochs", "30", "training epochs"},
    {"umae", "enc_depth", "4", "encoder blocks"},
    {"umae", "dec_depth", "2", "decoder blocks"},
    {"umae", "n_heads", "4", "attention heads"},
    {"umae", "mlp_ratio", "2", "MLP hidden width / D"},
    {"umae", "batch_size", "64", "mini-batch size"},
    {"umae", "mask_ratio", "0.5", "fraction of masked groups"},
    {"umae", "lr", "0.001", "Adam learning rate"},
    {"umae", "beta1", "0.9", "Adam beta1"},
    {"umae", "beta2", "0.999", "Adam beta2"},
    {"umae", "adam_eps", "1e-8", "Adam epsilon"},

    {"diffusion", "mode", "s2dl", "s2dl (raw spectra) or ds2dl (latent)"},
    {"diffusion", "superpixels", "", "superpixel count N_s"},
    {"diffusion", "reps", "10", "representatives per superpixel k"},
    {"diffusion", "k_n", "10", "nearest neighbours for density, graph and backbones"},
    {"diffusion", "sigma0", "auto", "kernel width, or auto (median kNN distance)"},
    {"diffusion", "radius", "inf", "spatial radius R in pixels"},
    {"diffusion", "n_clusters", "", "cluster count K"},
    {"diffusion", "t", "30", "diffusion time"},
    {"diffusion", "n_eigs", "0", "eigenpairs (0 = min(kN_s, 100))"},
    {"diffusion", "components", "all", "all or largest connected component"},
    {"diffusion", "balance", "auto", "superpixel balance weight, or auto"},
    {"diffusion", "edge_sigma", "auto", "superpixel edge kernel width, or auto"},
};

const SettingDef& find_def(const std::string& section, const std::string& key) {
    for (const auto& d : kSettings)
        if (section == d.section && key == d.key) return d;
    throw ParameterError("unknown setting [" + section + "] " + key);
}

std::string flag_name(const std::string& key) {
    std::string f = "--" + key;
    for (char& c : f)
        if (c == '_') c = '-';
    return f;
}

std::string full_key(const SettingDef& d) {
    return std::string(d.section).empty() ? d.key : std::string(d.section) + "." + d.key;
}

/// Effective settings of one command: defaults, then config file, then flags.
class Settings {
public:
    void bind(CLI::App* cmd, const std::string& section, const std::string& key, const std::string& help = {}) {
        const SettingDef& d = find_def(section, key);
        Slot& s = slots_[full_key(d)];
        s.def = &d;
        s.value = d.fallback;
        s.option = cmd->add_option(flag_name(key), s.flag, help.empty() ? d.help : help);
        if (*d.fallback) s.option->default_str(d.fallback);
    }
    void bind_global(CLI::App& app, const std::string& key) {
        const SettingDef& d = find_def("", key);
        Slot& s = slots_[key];
        s.def = &d;
        s.value = d.fallback;
        s.option = app.add_option(flag_name(key), s.flag, d.help)->default_str(d.fallback);
    }

    void resolve(const std::optional<boost::property_tree::ptree>& config) {
        for (auto& [name, s] : slots_) {
            if (config) {
                if (auto v = config->get_optional<std::string>(boost::property_tree::ptree::path_type(name, '.'))) {
                    s.value = *v;
                }
            }
            if (s.option->count() > 0) s.value = s.flag;
        }
    }

    bool has(const std::string& name) const { return !slot(name).value.empty(); }
    std::string str(const std::string& name) const {
        const Slot& s = slot(name);
        if (s.value.empty()) {
            throw ParameterError("missing " + flag_name(s.def->key) + " (or '" + s.def->key + "' in [" +
                                 s.def->section + "] of the config file)");
        }
        return s.value;
    }
    std::optional<fs::path> path(const std::string& name) const {
        if (!has(name)) return std::nullopt;
        return fs::path(str(name));
    }
    std::size_t size(const std::string& name) const {
        const std::string v = str(name);
        std::size_t pos = 0;
        unsigned long long x = 0;
        try {
            x = std::stoull(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v.size() || v.empty() || v[0] == '-') bad(name, "a non-negative integer");
        return static_cast<std::size_t>(x);
    }
    double real(const std::string& name) const {
        const std::string v = str(name);
        if (v == "inf") return std::numeric_limits<double>::infinity();
        std::size_t pos = 0;
        double x = 0;
        try {
            x = std::stod(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v.size() || std::isnan(x)) bad(name, "a number");
        return x;
    }
    std::optional<double> real_or_auto(const std::string& name) const {
        if (str(name) == "auto") return std::nullopt;
        return real(name);
    }

    json to_json() const {
        json j = json::object();
        for (const auto& [name, s] : slots_) j[name] = s.value;
        return j;
    }

private:
    struct Slot {
        const SettingDef* def = nullptr;
        std::string value;
        std::string flag;
        CLI::Option* option = nullptr;
    };
    const Slot& slot(const std::string& name) const {
        auto it = slots_.find(name);
        if (it == slots_.end()) throw ContractError("setting " + name + " is not bound for this command");
        return it->second;
    }
    [[noreturn]] void bad(const std::string& name, const char* what) const {
        throw ParameterError(flag_name(slot(name).def->key) + " must be " + what + ", got '" + slot(name).value + "'");
    }

    std::map<std::string, Slot> slots_;
};

boost::property_tree::ptree load_config(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("config file not found: " + path.string());
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParameterError("config file " + path.string() + ": " + e.message() + " (line " +
                             std::to_string(e.line()) + ")");
    }
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            find_def("", name);
            continue;
        }
        for (const auto& [key, leaf] : node) find_def(name, key);
    }
    return tree;
}

class Logger {
public:
    void open(const std::optional<fs::path>& path) {
        if (path) {
            file_.open(*path, std::ios::app);
            if (!file_) throw IoError("cannot open log file " + path->string());
        }
    }
    void write(const json& record) {
        std::ostream& out = file_.is_open() ? static_cast<std::ostream&>(file_) : std::cerr;
        out << record.dump() << '\n';
        out.flush();
    }

private:
    std::ofstream file_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::uint32_t seed_of(const Settings& s) {
    const std::size_t seed = s.size("seed");
    if (seed > std::numeric_limits<std::uint32_t>::max()) throw ParameterError("--seed must fit in 32 bits");
    return static_cast<std::uint32_t>(seed);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

// Commands. Each returns the JSON record for the log.

json run_synth(const Settings& s, std::uint32_t seed) {
    SynthSpec spec;
    spec.height = s.size("synth.height");
    spec.width = s.size("synth.width");
    spec.bands = s.size("synth.bands");
    spec.classes = s.size("synth.classes");
    spec.noise = s.real("synth.noise");
    spec.seed = seed;
    const SynthScene scene = make_synthetic_scene(spec);
    save_cube(scene.cube, s.str("io.cube"));
    save_labels(scene.labels, s.str("io.gt"));
    if (auto truth = s.path("io.truth")) {
        json t;
        t["height"] = spec.height;
        t["width"] = spec.width;
        t["bands"] = spec.bands;
        t["classes"] = spec.classes;
        t["noise"] = spec.noise;
        t["seed"] = spec.seed;
        for (Eigen::Index c = 0; c < scene.centers.rows(); ++c) {
            t["centers"].push_back({scene.centers(c, 0), scene.centers(c, 1)});
            json row = json::array();
            for (Eigen::Index b = 0; b < scene.signatures.cols(); ++b) row.push_back(scene.signatures(c, b));
            t["signatures"].push_back(row);
        }
        write_text(*truth, t.dump(2) + "\n");
    }
    return {{"classes", scene.labels.num_classes()}};
}

umae::TrainConfig train_config(const Settings& s, std::uint32_t seed) {
    umae::TrainConfig c;
    c.n_train = s.size("umae.n_train");
    c.patch = s.size("umae.patch");
    c.group_len = s.size("umae.group_len");
    c.latent_dim = s.size("umae.latent_dim");
    c.epochs = s.size("umae.epochs");
    c.enc_depth = s.size("umae.enc_depth");
    c.dec_depth = s.size("umae.dec_depth");
    c.n_heads = s.size("umae.n_heads");
    c.mlp_ratio = s.size("umae.mlp_ratio");
    c.batch_size = s.size("umae.batch_size");
    c.mask_ratio = s.real("umae.mask_ratio");
    c.learning_rate = s.real("umae.lr");
    c.adam_beta1 = s.real("umae.beta1");
    c.adam_beta2 = s.real("umae.beta2");
    c.adam_eps = s.real("umae.adam_eps");
    c.seed = seed;
    return c;
}

json run_train(const Settings& s, std::uint32_t seed, Logger& log) {
    const umae::TrainConfig cfg = train_config(s, seed);
    const HsiCube cube = normalize_bands(load_cube(s.str("io.cube")));
    const auto start = std::chrono::steady_clock::now();
    const umae::TrainResult r = umae::train(cube, cfg, [&](std::size_t epoch, double loss) {
        log.write({{"command", "train"}, {"stage", "epoch"}, {"epoch", epoch}, {"mean_loss", loss},
                   {"wall_seconds", seconds_since(start)}});
    });
    umae::save_checkpoint(r.params, cfg, s.str("io.checkpoint"));
    if (auto p = s.path("io.loss_log")) umae::save_loss_log(r.epoch_losses, *p);
    json out{{"parameters", r.params.parameter_count()}, {"training_pixels", r.training_pixels.size()}};
    if (!r.epoch_losses.empty()) {
        out["first_epoch_loss"] = r.epoch_losses.front();
        out["final_epoch_loss"] = r.epoch_losses.back();
    }
    return out;
}

json run_encode(const Settings& s) {
    const umae::Checkpoint ck = umae::load_checkpoint(s.str("io.checkpoint"));
    const HsiCube cube = normalize_bands(load_cube(s.str("io.cube")));
    const HsiCube latent = umae::encode_latent(cube, ck.params, ck.config.patch, ck.config.group_len);
    save_cube(latent, s.str("io.latent"));
    return {{"latent_dim", latent.bands()}};
}

json run_superpix(const Settings& s) {
    const HsiCube pcs = pca_image(normalize_bands(load_cube(s.str("io.cube"))), 3);
    const auto sigma = s.real_or_auto("diffusion.edge_sigma");
    ErsStats stats;
    const auto n = s.size("diffusion.superpixels");
    if (n > 65535) throw ParameterError("--superpixels must be at most 65535 to fit a DSL1 map");
    const SuperpixelSegmentation seg =
        ers_segment(build_pixel_graph(pcs, sigma ? *sigma : default_edge_sigma(pcs)), n,
                    s.real_or_auto("diffusion.balance"), &stats);
    save_labels(seg.to_label_mask(), s.str("io.segments"));
    return {{"segments", seg.count()}, {"balance", stats.lambda_balance}};
}

ClusterParams cluster_params(const Settings& s) {
    ClusterParams p;
    p.n_superpixels = s.size("diffusion.superpixels");
    p.reps_per_superpixel = s.size("diffusion.reps");
    p.k_n = s.size("diffusion.k_n");
    p.sigma0 = s.real_or_auto("diffusion.sigma0");
    p.radius = s.real("diffusion.radius");
    p.n_clusters = s.size("diffusion.n_clusters");
    p.t = s.real("diffusion.t");
    p.n_eigs = s.size("diffusion.n_eigs");
    p.policy = parse_component_policy(s.str("diffusion.components"));
    p.balance = s.real_or_auto("diffusion.balance");
    p.edge_sigma = s.real_or_auto("diffusion.edge_sigma");
    return p;
}

json run_cluster(const Settings& s) {
    const std::string mode = s.str("diffusion.mode");
    if (mode != "s2dl" && mode != "ds2dl") throw ParameterError("--mode must be s2dl or ds2dl, got '" + mode + "'");
    const ClusterParams params = cluster_params(s);
    const HsiCube raw = normalize_bands(load_cube(s.str("io.cube")));
    HsiCube features;
    if (mode == "ds2dl") {
        const auto latent = s.path("io.latent");
        if (!latent || !fs::exists(*latent)) {
            throw ParameterError("ds2dl mode needs the latent cube from a trained autoencoder" +
                                 (latent ? " (" + latent->string() + " does not exist)" : std::string()) +
                                 "; run 'ds2dl train' then 'ds2dl encode --latent PATH' first");
        }
        features = load_cube(*latent);
        if (features.height() != raw.height() || features.width() != raw.width()) {
            throw ParameterError("latent cube is " + std::to_string(features.height()) + "x" +
                                 std::to_string(features.width()) + " but the scene is " +
                                 std::to_string(raw.height()) + "x" + std::to_string(raw.width()));
        }
    } else {
        features = raw;
    }

    const auto start = std::chrono::steady_clock::now();
    const PreparedClustering prep = prepare_clustering(features, pca_image(raw, 3), params);
    const ClusterMap map = label_clustering(prep, params.n_clusters, params.k_n);
    const double rt = seconds_since(start);

    save_labels(map.labels, s.str("io.clusters"));
    if (auto p = s.path("io.provenance")) save_provenance(map, *p);
    json out{{"mode", mode},
             {"feature_dim", features.bands()},
             {"rt_seconds", rt},
             {"representatives", prep.reps.size()},
             {"short_superpixels", prep.reps.short_segments.size()},
             {"isolated_representatives", prep.graph_stats.isolated},
             {"graph_components", prep.model.n_components},
             {"modelled_representatives", prep.model.nodes.size()},
             {"n_eigs", prep.model.lambda.size()},
             {"sigma_density", prep.sigma_density},
             {"sigma_graph", prep.sigma_graph},
             {"balance", prep.ers_stats.lambda_balance}};
    for (std::size_t m : {2u, 3u}) {
        const std::string key = "io.clusters_" + std::to_string(m) + "x";
        if (auto p = s.path(key)) save_labels(label_clustering(prep, m * params.n_clusters, params.k_n).labels, *p);
    }
    return out;
}

json run_eval(const Settings& s) {
    const LabelMask gt = load_labels(s.str("io.gt"));
    const ConfusionMatrix cm = confusion(load_labels(s.str("io.clusters")), gt);
    const AlignedAccuracy acc = aligned_accuracy(cm);
    MetricsReport r;
    r.oa = acc.oa;
    r.aa = acc.aa;
    r.kappa = acc.kappa;
    r.purity_1x = purity(cm);
    r.nmi = nmi(cm);
    if (auto p = s.path("io.clusters_2x")) r.purity_2x = purity(confusion(load_labels(*p), gt));
    if (auto p = s.path("io.clusters_3x")) r.purity_3x = purity(confusion(load_labels(*p), gt));
    if (s.has("io.runtime")) r.runtime_seconds = s.real("io.runtime");
    const std::string csv = r.to_csv();
    if (auto p = s.path("io.metrics")) save_report(r, *p);
    std::cout << csv;
    return {{"oa", acc.oa}, {"aa", acc.aa}, {"kappa", acc.kappa}, {"nmi", *r.nmi}};
}

// Categorical palette, label l uses entry (l - 1) % 16; label 0 is black.
constexpr unsigned char kPalette[16][3] = {
    {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},  {245, 130, 48},  {145, 30, 180},
    {70, 240, 240}, {240, 50, 230},  {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
    {170, 110, 40}, {255, 250, 200}, {128, 0, 0},    {170, 255, 195},
};

json run_render(const Settings& s) {
    const LabelMask labels = load_labels(s.str("io.clusters"));
    std::string ppm = "P6\n" + std::to_string(labels.width()) + " " + std::to_string(labels.height()) + "\n255\n";
    for (std::size_t i = 0; i < labels.pixels(); ++i) {
        const std::uint16_t l = labels[i];
        for (int ch = 0; ch < 3; ++ch) ppm.push_back(static_cast<char>(l == 0 ? 0 : kPalette[(l - 1) % 16][ch]));
    }
    write_text(s.str("io.image"), ppm);
    return {{"labels", labels.num_classes()}};
}

struct Command {
    CLI::App* app;
    Settings settings;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised hyperspectral clustering with a masked autoencoder and diffusion learning"};
    app.require_subcommand(1);
    std::string config_path, log_path;
    app.add_option("--config", config_path, "config file with [io], [synth], [umae], [diffusion] sections");
    app.add_option("--log", log_path, "append JSON-lines log here instead of stderr");

    std::map<std::string, Command> commands;
    Settings globals;
    globals.bind_global(app, "seed");
    globals.bind_global(app, "threads");
    auto add_cmd = [&](const std::string& name, const std::string& help,
                       std::vector<std::pair<std::string, std::string>> keys) {
        Command& c = commands[name];
        c.app = app.add_subcommand(name, help);
        for (const auto& [section, key] : keys) c.settings.bind(c.app, section, key);
    };

    add_cmd("synth", "generate a synthetic scene",
            {{"io", "cube"}, {"io", "gt"}, {"io", "truth"}, {"synth", "height"}, {"synth", "width"},
             {"synth", "bands"}, {"synth", "classes"}, {"synth", "noise"}});
    add_cmd("train", "train the masked autoencoder",
            {{"io", "cube"}, {"io", "checkpoint"}, {"io", "loss_log"}, {"umae", "n_train"}, {"umae", "patch"},
             {"umae", "group_len"}, {"umae", "latent_dim"}, {"umae", "epochs"}, {"umae", "enc_depth"},
             {"umae", "dec_depth"}, {"umae", "n_heads"}, {"umae", "mlp_ratio"}, {"umae", "batch_size"},
             {"umae", "mask_ratio"}, {"umae", "lr"}, {"umae", "beta1"}, {"umae", "beta2"}, {"umae", "adam_eps"}});
    add_cmd("encode", "write the per-pixel latent cube", {{"io", "cube"}, {"io", "checkpoint"}, {"io", "latent"}});
    add_cmd("superpix", "entropy-rate superpixels of the 3-PC image",
            {{"io", "cube"}, {"io", "segments"}, {"diffusion", "superpixels"}, {"diffusion", "balance"},
             {"diffusion", "edge_sigma"}});
    add_cmd("cluster", "diffusion-learning clustering",
            {{"io", "cube"}, {"io", "latent"}, {"io", "clusters"}, {"io", "clusters_2x"}, {"io", "clusters_3x"},
             {"io", "provenance"}, {"diffusion", "mode"}, {"diffusion", "superpixels"}, {"diffusion", "reps"},
             {"diffusion", "k_n"}, {"diffusion", "sigma0"}, {"diffusion", "radius"}, {"diffusion", "n_clusters"},
             {"diffusion", "t"}, {"diffusion", "n_eigs"}, {"diffusion", "components"}, {"diffusion", "balance"},
             {"diffusion", "edge_sigma"}});
    add_cmd("eval", "score a cluster map against ground truth",
            {{"io", "clusters"}, {"io", "gt"}, {"io", "clusters_2x"}, {"io", "clusters_3x"}, {"io", "runtime"},
             {"io", "metrics"}});
    add_cmd("render", "render a label map as PPM", {{"io", "clusters"}, {"io", "image"}});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitParameter;
    }

    Logger log;
    try {
        std::optional<boost::property_tree::ptree> config;
        if (!config_path.empty()) config = load_config(config_path);
        globals.resolve(config);
        set_thread_count(static_cast<unsigned>(globals.size("threads")));
        log.open(log_path.empty() ? std::nullopt : std::optional<fs::path>(log_path));

        for (auto& [name, cmd] : commands) {
            if (!cmd.app->parsed()) continue;
            cmd.settings.resolve(config);
            const Settings& s = cmd.settings;
            const std::uint32_t seed = seed_of(globals);
            json params = s.to_json();
            params["seed"] = seed;
            params["threads"] = thread_count();
            const auto start = std::chrono::steady_clock::now();
            json result;
            if (name == "synth") result = run_synth(s, seed);
            else if (name == "train") result = run_train(s, seed, log);
            else if (name == "encode") result = run_encode(s);
            else if (name == "superpix") result = run_superpix(s);
            else if (name == "cluster") result = run_cluster(s);
            else if (name == "eval") result = run_eval(s);
            else if (name == "render") result = run_render(s);
            log.write({{"command", name}, {"stage", "done"}, {"wall_seconds", seconds_since(start)},
                       {"params", params}, {"result", result}});
        }
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParameter;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParameter;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
