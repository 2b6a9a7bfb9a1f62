// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
// Usage: acceptance <ds2dl binary> <config.ini> <work dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/diffusion_oracles.hpp"
#include "../unit/oracles.hpp"
#include "../unit/umae_oracles.hpp"
#include "ds2dl/diffusion.hpp"
#include "ds2dl/io.hpp"
#include "ds2dl/metrics.hpp"
#include "ds2dl/numerics.hpp"
#include "ds2dl/superpixel.hpp"
#include "ds2dl/umae.hpp"

namespace fs = std::filesystem;
using namespace ds2dl;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
    Verdict verdict = Verdict::fail;
    std::string detail;
};

Outcome pass(std::string d) { return {Verdict::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::fail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Verdict::pass : Verdict::fail, std::move(d)}; }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng);
    return x;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    const umae::TrainConfig cfg = oracle::tiny_config();
    const std::size_t bands = 8;
    umae::UmaeParams p = umae::init_params(cfg, bands);
    oracle::randomize(p, 77, 0.5);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> data(5 * 5 * bands);
    for (auto& v : data) v = u(rng);
    const HsiCube cube(5, 5, bands, data);
    const HsiCube padded = pad_reflect(cube, cfg.patch);
    std::vector<umae::TrainingSample> batch;
    for (std::size_t px : {3u, 10u, 17u}) {
        batch.push_back({umae::build_groups(umae::extract_patch(padded, px / 5, px % 5, cfg.patch), cfg.group_len),
                         umae::sample_mask(bands, cfg.mask_ratio, umae::mask_stream(cfg.seed, 0, px))});
    }
    double worst = 0.0;
    std::string worst_name;
    for (const auto& e : oracle::gradient_check(batch, p, 1e-4, 1e-6)) {
        if (e.max_rel > worst) worst = e.max_rel, worst_name = e.tensor;
    }
    const double secs = seconds_since(t0);
    return verdict(worst <= 1e-4 && secs < 30.0,
                   "max rel err " + fmt(worst) + " (" + worst_name + "), " + fmt(secs) + " s");
}

std::vector<Eigen::MatrixXd> random_graphs() {
    std::vector<Eigen::MatrixXd> out;
    for (std::uint64_t g = 0; g < 20; ++g) {
        const std::size_t n = 5 + (g * 7) % 46;  // 5..50
        out.push_back(oracle::random_graph(n, 0.05 + 0.02 * static_cast<double>(g % 10), g % 2 == 0, 1000 + g));
    }
    return out;
}

Outcome dual_formula() {
    double worst = 0.0;
    std::size_t pairs = 0;
    for (const Eigen::MatrixXd& w : random_graphs()) {
        const SparseSym s = oracle::to_sparse_sym(w);
        for (int t : {1, 2, 5, 30}) {
            const DiffusionModel m = diffusion_model(s, 0, t);
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                for (Eigen::Index j = i + 1; j < w.rows(); ++j) {
                    const double a = diffusion_distance(m, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                    worst = std::max(worst, std::abs(a - oracle::direct_diffusion_distance(w, t, i, j)));
                    ++pairs;
                }
        }
    }
    return verdict(worst <= 1e-8, "max |diff| " + fmt(worst) + " over " + std::to_string(pairs) + " pairs");
}

Outcome markov_invariants() {
    std::vector<SparseSym> graphs;
    for (const Eigen::MatrixXd& w : random_graphs()) graphs.push_back(oracle::to_sparse_sym(w));
    // Spatially gated feature graphs, some of them disconnected.
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Eigen::MatrixXd x = gaussian(60, 3, 50 + seed);
        const Eigen::MatrixXd coords = gaussian(60, 2, 80 + seed) * 10.0;
        graphs.push_back(build_graph(x, coords, 1.0, seed == 0 ? 1e9 : 6.0, 5));
    }
    double row = 0.0, stat = 0.0, top = 0.0, mag = 0.0;
    for (const SparseSym& s : graphs) {
        const DiffusionModel m = diffusion_model(s, 0, 1.0);
        const Eigen::MatrixXd p = m.transition();
        row = std::max(row, (p.rowwise().sum().array() - 1.0).abs().maxCoeff());
        stat = std::max(stat, (m.pi.transpose() * p - m.pi.transpose()).cwiseAbs().maxCoeff());
        top = std::max(top, std::abs(m.lambda(0) - 1.0));
        mag = std::max(mag, m.lambda.cwiseAbs().maxCoeff() - 1.0);
    }
    const bool ok = row <= 1e-12 && stat <= 1e-12 && top <= 1e-10 && mag <= 1e-12;
    return verdict(ok, std::to_string(graphs.size()) + " graphs; row " + fmt(row) + ", piP " + fmt(stat) +
                           ", |lambda1-1| " + fmt(top) + ", max|lambda|-1 " + fmt(mag));
}

Outcome oracle_equivalences() {
    std::vector<std::string> bad;

    const Eigen::MatrixXd pts = gaussian(500, 4, 11);
    const auto expect = oracle::brute_knn(pts, 8, true);
    for (std::size_t threshold : {std::size_t{0}, std::size_t{100000}}) {
        const KnnResult r = knn_self(pts, 8, KnnOptions{threshold});
        for (std::size_t i = 0; i < 500; ++i)
            for (std::size_t k = 0; k < 8; ++k)
                if (r.index(i, k) != expect[i][k]) {
                    bad.push_back("knn");
                    i = 500;
                    break;
                }
    }

    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> cost(0, 50);
    for (int trial = 0; trial < 35; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + trial % 7);
        Eigen::MatrixXd c(n, n);
        for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = cost(rng);
        double total = 0.0;
        for (auto [r, k] : hungarian(c)) total += c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
        if (total != oracle::brute_assignment(c)) {
            bad.push_back("hungarian");
            break;
        }
    }

    const Eigen::MatrixXd f = gaussian(100, 5, 31);
    const auto picks = umae::fps_select(f, 20);
    {
        std::vector<std::size_t> greedy;
        const Eigen::RowVectorXd mean = f.colwise().mean();
        std::size_t first = 0;
        for (Eigen::Index i = 1; i < f.rows(); ++i)
            if ((f.row(i) - mean).squaredNorm() > (f.row(first) - mean).squaredNorm()) first = i;
        greedy.push_back(first);
        while (greedy.size() < 20) {
            double best = -1.0;
            std::size_t arg = 0;
            for (Eigen::Index i = 0; i < f.rows(); ++i) {
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t j : greedy) m = std::min(m, (f.row(i) - f.row(j)).squaredNorm());
                if (m > best) best = m, arg = i;
            }
            greedy.push_back(arg);
        }
        if (picks != greedy) bad.push_back("fps");
    }

    const Eigen::MatrixXd x = gaussian(200, 3, 41);
    const Eigen::VectorXd zeta = local_density(x, 7, 0.8);
    double zeta_err = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::vector<double> d2;
        for (Eigen::Index j = 0; j < x.rows(); ++j)
            if (j != i) d2.push_back((x.row(i) - x.row(j)).squaredNorm());
        std::sort(d2.begin(), d2.end());
        double s = 0.0;
        for (std::size_t k = 0; k < 7; ++k) s += std::exp(-d2[k] / 0.64);
        zeta_err = std::max(zeta_err, std::abs(s - zeta(i)));
    }
    if (zeta_err > 1e-12) bad.push_back("zeta");

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Eigen::MatrixXd w = oracle::random_graph(40, 0.1, true, 300 + seed);
        const DiffusionModel m = diffusion_model(oracle::to_sparse_sym(w), 0, 3.0);
        std::mt19937_64 zr(seed);
        std::uniform_int_distribution<int> level(1, 12);  // coarse levels force density ties
        Eigen::VectorXd z(40);
        for (Eigen::Index i = 0; i < 40; ++i) z(i) = level(zr);
        const ModeScores got = mode_scores(m, z);
        Eigen::Index top = 0;
        for (Eigen::Index i = 1; i < 40; ++i)
            if (z(i) > z(top)) top = i;
        Eigen::VectorXd delta(40);
        for (Eigen::Index i = 0; i < 40; ++i) {
            double d = i == top ? 0.0 : std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < 40; ++j) {
                if (j == i) continue;
                const double dij = diffusion_distance(m, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                if (i == top) d = std::max(d, dij);
                else if (z(j) >= z(i)) d = std::min(d, dij);
            }
            delta(i) = z(i) * d;
        }
        for (std::size_t k : {1u, 3u, 6u}) {
            auto top_k = [&](const Eigen::VectorXd& v) {
                std::vector<std::size_t> idx(40);
                std::iota(idx.begin(), idx.end(), 0);
                std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v(a) > v(b); });
                return std::set<std::size_t>(idx.begin(), idx.begin() + static_cast<long>(k));
            };
            if (top_k(got.delta) != top_k(delta) || (got.delta - delta).cwiseAbs().maxCoeff() > 1e-12) {
                bad.push_back("mode_scores");
                seed = 5;
                break;
            }
        }
    }

    if (bad.empty()) return pass("knn 500 pts, hungarian n<=7, fps 100 pts, zeta err " + fmt(zeta_err) + ", mode scores");
    std::string joined;
    for (const auto& b : bad) joined += (joined.empty() ? "" : ", ") + b;
    return fail("mismatch: " + joined);
}

Outcome ers_contract() {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::size_t failures = 0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> data(32 * 32 * 3);
        for (auto& v : data) v = uni(rng);
        const HsiCube img(32, 32, 3, data);
        const std::size_t ns = 1 + static_cast<std::size_t>(trial * 37 % 200);
        const auto seg = ers_segment(build_pixel_graph(img, default_edge_sigma(img)), ns);
        bool ok = seg.count() == ns;
        for (std::size_t id = 1; ok && id <= ns; ++id) {
            const auto members = segment_members(seg, id);
            ok = !members.empty() && oracle::is_8_connected(members, 32, 32);
        }
        if (!ok) ++failures;
    }

    HsiCube tone(16, 16, 3);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 8; c < 16; ++c)
            for (std::size_t b = 0; b < 3; ++b) tone.at(r, c, b) = 1.0;
    const auto seg = ers_segment(build_pixel_graph(tone, default_edge_sigma(tone)), 2);
    std::set<std::uint32_t> left, right;
    for (std::size_t p = 0; p < 256; ++p) (p % 16 < 8 ? left : right).insert(seg.id(p));
    const bool halves = seg.count() == 2 && left.size() == 1 && right.size() == 1 && *left.begin() != *right.begin();
    return verdict(failures == 0 && halves, std::to_string(50 - failures) + "/50 random images valid; two-tone halves " +
                                                 (halves ? "recovered" : "not recovered"));
}

// ---------------------------------------------------------------------------
// Command-line pipeline

struct Cli {
    fs::path binary;
    fs::path config;

    int run(const std::string& args, const fs::path& dir) const {
        const std::string cmd = "\"" + binary.string() + "\" --config \"" + config.string() + "\" --log \"" +
                                (dir / "log.jsonl").string() + "\" " + args + " > \"" + (dir / "stdout.txt").string() +
                                "\" 2>&1";
        return std::system(cmd.c_str());
    }
};

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::map<std::string, double> read_metrics(const fs::path& path) {
    std::map<std::string, double> out;
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma != std::string::npos) out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    }
    return out;
}

struct PipelineRun {
    bool ok = false;
    std::string error;
    double seconds = 0.0;
    std::map<std::string, double> s2dl, ds2dl;
};

/// synth, train, encode, then cluster and eval in both modes.
PipelineRun run_pipeline(const Cli& cli, const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    PipelineRun out;
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::string> steps = {
        "synth --cube " + q(dir / "scene.dsc") + " --gt " + q(dir / "gt.dsl"),
        "train --cube " + q(dir / "scene.dsc") + " --checkpoint " + q(dir / "model.dsw") + " --loss-log " +
            q(dir / "loss.csv"),
        "encode --cube " + q(dir / "scene.dsc") + " --checkpoint " + q(dir / "model.dsw") + " --latent " +
            q(dir / "latent.dsc"),
        "cluster --mode s2dl --cube " + q(dir / "scene.dsc") + " --clusters " + q(dir / "s2dl.dsl"),
        "cluster --mode ds2dl --cube " + q(dir / "scene.dsc") + " --latent " + q(dir / "latent.dsc") +
            " --clusters " + q(dir / "ds2dl.dsl"),
        "eval --clusters " + q(dir / "s2dl.dsl") + " --gt " + q(dir / "gt.dsl") + " --metrics " +
            q(dir / "s2dl.csv"),
        "eval --clusters " + q(dir / "ds2dl.dsl") + " --gt " + q(dir / "gt.dsl") + " --metrics " +
            q(dir / "ds2dl.csv"),
    };
    for (const auto& step : steps) {
        if (cli.run(step, dir) != 0) {
            out.error = "command failed: " + step.substr(0, step.find(' '));
            return out;
        }
    }
    out.seconds = seconds_since(t0);
    out.s2dl = read_metrics(dir / "s2dl.csv");
    out.ds2dl = read_metrics(dir / "ds2dl.csv");
    out.ok = true;
    return out;
}

Outcome end_to_end(const PipelineRun& run) {
    if (!run.ok) return fail(run.error);
    const double a = run.s2dl.count("OA") ? run.s2dl.at("OA") : 0.0;
    const double b = run.ds2dl.count("OA") ? run.ds2dl.at("OA") : 0.0;
    return verdict(a >= 0.95 && b >= 0.95 && run.seconds < 300.0,
                   "OA s2dl " + fmt(a) + ", ds2dl " + fmt(b) + ", " + fmt(run.seconds) + " s");
}

Outcome training_signal(const fs::path& dir) {
    std::ifstream in(dir / "loss.csv");
    std::string line;
    std::vector<double> losses;
    std::getline(in, line);
    while (std::getline(in, line)) losses.push_back(std::stod(line.substr(line.find(',') + 1)));
    if (losses.size() < 2) return fail("loss log missing or too short");
    const double ratio = losses.back() / losses.front();
    return verdict(ratio <= 0.5, "first " + fmt(losses.front()) + ", last " + fmt(losses.back()) + ", ratio " +
                                     fmt(ratio));
}

Outcome metrics_exactness() {
    ConfusionMatrix cm;
    cm.counts.resize(2, 2);
    cm.counts << 1, 1, 0, 2;
    const auto acc = aligned_accuracy(cm);
    const bool hand = std::abs(acc.oa - 0.75) <= 1e-12 && std::abs(acc.aa - 5.0 / 6.0) <= 1e-12 &&
                      std::abs(acc.kappa - 5.0 / 9.0) <= 1e-12;

    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> lab(1, 5);
    std::vector<std::uint16_t> pred(400), gt(400);
    for (std::size_t i = 0; i < 400; ++i) {
        gt[i] = static_cast<std::uint16_t>(lab(rng));
        pred[i] = static_cast<std::uint16_t>(rng() % 3 == 0 ? lab(rng) : gt[i]);
    }
    const LabelMask g(20, 20, gt);
    const auto base = aligned_accuracy(confusion(LabelMask(20, 20, pred), g));
    std::vector<std::uint16_t> perm = {1, 2, 3, 4, 5};
    double drift = 0.0;
    for (int r = 0; r < 100; ++r) {
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::uint16_t> relabel(400);
        for (std::size_t i = 0; i < 400; ++i) relabel[i] = perm[pred[i] - 1u];
        const auto a = aligned_accuracy(confusion(LabelMask(20, 20, relabel), g));
        drift = std::max({drift, std::abs(a.oa - base.oa), std::abs(a.aa - base.aa), std::abs(a.kappa - base.kappa)});
    }
    return verdict(hand && drift <= 1e-12, "OA " + fmt(acc.oa) + ", AA " + fmt(acc.aa) + ", kappa " + fmt(acc.kappa) +
                                               " (asserted 5/9 = " + fmt(5.0 / 9.0) + "); relabel drift " + fmt(drift));
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                      std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>());
}

Outcome determinism(const PipelineRun& first, const Cli& cli, const fs::path& a, const fs::path& b) {
    if (!first.ok) return fail("first run failed: " + first.error);
    const PipelineRun second = run_pipeline(cli, b);
    if (!second.ok) return fail("second run failed: " + second.error);
    std::string differ;
    for (const char* f : {"s2dl.dsl", "ds2dl.dsl", "model.dsw", "s2dl.csv", "ds2dl.csv"})
        if (!same_bytes(a / f, b / f)) differ += std::string(differ.empty() ? "" : ", ") + f;
    return verdict(differ.empty(), differ.empty() ? "cluster maps, checkpoint and metrics byte-identical"
                                                  : "differ: " + differ);
}

// ---------------------------------------------------------------------------
// Optional full-data comparison, driven by DS2DL_<SCENE>_CUBE / _GT / _CONFIG.

struct ReferenceRow {
    const char* scene;
    double s2dl[4];  // OA, AA, kappa, NMI
    double ds2dl[4];
};

constexpr ReferenceRow kReference[] = {
    {"KSC", {0.56688, 0.52220, 0.54115, 0.6766}, {0.6008, 0.6247, 0.5618, 0.7182}},
    {"BOTSWANA", {0.60037, 0.61575, 0.56781, 0.7083}, {0.64101, 0.66476, 0.61207, 0.7244}},
};

const char* env(const std::string& name) { return std::getenv(name.c_str()); }

Outcome full_data(const fs::path& binary, const fs::path& work) {
    std::vector<std::string> notes;
    bool any = false, ok = true;
    for (const ReferenceRow& row : kReference) {
        const std::string prefix = std::string("DS2DL_") + row.scene;
        const char* cube = env(prefix + "_CUBE");
        const char* gt = env(prefix + "_GT");
        const char* config = env(prefix + "_CONFIG");
        if (!cube || !gt || !config) continue;
        any = true;
        const Cli cli{binary, config};
        const fs::path dir = work / row.scene;
        fs::remove_all(dir);
        fs::create_directories(dir);
        const std::string c = q(cube), g = q(gt);
        if (cli.run("train --cube " + c + " --checkpoint " + q(dir / "model.dsw"), dir) != 0 ||
            cli.run("encode --cube " + c + " --checkpoint " + q(dir / "model.dsw") + " --latent " +
                        q(dir / "latent.dsc"),
                    dir) != 0)
            return fail(std::string(row.scene) + ": training failed");
        std::map<std::string, double> m[2];
        double rt[2] = {0.0, 0.0};
        const char* modes[2] = {"s2dl", "ds2dl"};
        for (int k = 0; k < 2; ++k) {
            const fs::path out = dir / (std::string(modes[k]) + ".dsl");
            const auto t0 = std::chrono::steady_clock::now();
            if (cli.run(std::string("cluster --mode ") + modes[k] + " --cube " + c + " --latent " +
                            q(dir / "latent.dsc") + " --clusters " + q(out),
                        dir) != 0)
                return fail(std::string(row.scene) + ": clustering failed");
            rt[k] = seconds_since(t0);
            const fs::path csv = dir / (std::string(modes[k]) + ".csv");
            if (cli.run("eval --clusters " + q(out) + " --gt " + g + " --metrics " + q(csv), dir) != 0)
                return fail(std::string(row.scene) + ": eval failed");
            m[k] = read_metrics(csv);
        }
        const char* keys[4] = {"OA", "AA", "kappa", "NMI"};
        bool scene_ok = rt[1] < rt[0];
        for (int i = 0; i < 4; ++i) {
            const double a = m[0][keys[i]], b = m[1][keys[i]];
            scene_ok = scene_ok && b > a && std::abs(a - row.s2dl[i]) <= 0.05 && std::abs(b - row.ds2dl[i]) <= 0.05;
        }
        ok = ok && scene_ok;
        notes.push_back(std::string(row.scene) + " OA " + fmt(m[0]["OA"]) + " vs " + fmt(m[1]["OA"]) + ", RT " +
                        fmt(rt[0]) + " vs " + fmt(rt[1]) + " s");
    }
    if (!any) return {Verdict::skip, "set DS2DL_KSC_{CUBE,GT,CONFIG} or DS2DL_BOTSWANA_{CUBE,GT,CONFIG}"};
    std::string joined;
    for (const auto& n : notes) joined += (joined.empty() ? "" : "; ") + n;
    return verdict(ok, joined);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 4) {
        std::cerr << "usage: acceptance <ds2dl binary> <config.ini> <work dir>\n";
        return 2;
    }
    const Cli cli{fs::absolute(argv[1]), fs::absolute(argv[2])};
    const fs::path work = fs::absolute(argv[3]);
    fs::create_directories(work);
    const fs::path run_a = work / "run_a", run_b = work / "run_b";

    PipelineRun first;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient correctness", gradient_correctness},
        {"diffusion distance dual formula", dual_formula},
        {"markov invariants", markov_invariants},
        {"oracle equivalences", oracle_equivalences},
        {"superpixel contract", ers_contract},
        {"end-to-end synthetic clustering",
         [&] {
             first = run_pipeline(cli, run_a);
             return end_to_end(first);
         }},
        {"autoencoder training signal", [&] { return first.ok ? training_signal(run_a) : fail(first.error); }},
        {"metrics exactness", metrics_exactness},
        {"determinism", [&] { return determinism(first, cli, run_a, run_b); }},
        {"full-data comparison", [&] { return full_data(cli.binary, work / "full"); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
        if (o.verdict == Verdict::fail) ++failed;
        std::cout << tag << "  " << (i + 1) << "  " << criteria[i].first << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
