#include "pcast/gbtree.hpp"

#include "pcast/csv.hpp"
#include "pcast/errors.hpp"
#include "pcast/parallel.hpp"
#include "pcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pcast::gbt {

namespace {

double soft_threshold(double g, double alpha) {
    if (g > alpha) return g - alpha;
    if (g < -alpha) return g + alpha;
    return 0.0;
}

double structure_score(double g, double h, double lambda, double alpha) {
    const double t = soft_threshold(g, alpha);
    return t * t / (h + lambda);
}

double leaf_weight(double g, double h, double lambda, double alpha) {
    return -soft_threshold(g, alpha) / (h + lambda);
}

// Rows drawn without replacement, k = round(subsample * n), returned sorted.
std::vector<Eigen::Index> subsample_rows(Eigen::Index n, double subsample, std::uint64_t seed) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    const auto k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(subsample * static_cast<double>(n))),
                                            1, n);
    if (k == n) return rows;
    std::mt19937_64 rng(seed);
    for (Eigen::Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
        std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pick(rng))]);
    }
    rows.resize(static_cast<std::size_t>(k));
    std::sort(rows.begin(), rows.end());
    return rows;
}

struct TreeGrower {
    const MaskedMatrix& X;
    const Eigen::VectorXd& grad;
    const Eigen::VectorXd& hess;
    const GbtParams& params;
    unsigned threads;
    GbtTree tree;

    int build(const std::vector<Eigen::Index>& rows, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        double g = 0.0, h = 0.0;
        for (const auto r : rows) {
            g += grad[r];
            h += hess[r];
        }
        tree.nodes[static_cast<std::size_t>(id)].weight =
            leaf_weight(g, h, params.reg_lambda, params.reg_alpha);

        if (depth >= params.max_depth) return id;
        const auto candidates = enumerate_splits(X, grad, hess, rows, params, threads);
        const SplitCandidate* best = best_split(candidates);
        if (best == nullptr || !(best->gain > 0.0)) return id;

        std::vector<Eigen::Index> left, right;
        for (const auto r : rows) {
            const bool go_left = X.present(r, best->feature)
                                     ? X.values(r, best->feature) <= best->threshold
                                     : best->default_left;
            (go_left ? left : right).push_back(r);
        }

        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.leaf = false;
        node.feature = best->feature;
        node.threshold = best->threshold;
        node.default_left = best->default_left;
        const int left_id = build(left, depth + 1);
        const int right_id = build(right, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = left_id;
        tree.nodes[static_cast<std::size_t>(id)].right = right_id;
        return id;
    }
};

}  // namespace

void GbtParams::validate() const {
    if (n_estimators < 0) throw std::invalid_argument("GbtParams: n_estimators must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw std::invalid_argument("GbtParams: learning_rate must lie in (0, 1]");
    if (max_depth < 1) throw std::invalid_argument("GbtParams: max_depth must be >= 1");
    if (!(subsample > 0.0 && subsample <= 1.0))
        throw std::invalid_argument("GbtParams: subsample must lie in (0, 1]");
    if (reg_lambda < 0.0 || reg_alpha < 0.0 || gamma < 0.0 || min_child_weight < 0.0)
        throw std::invalid_argument("GbtParams: regularization parameters must be nonnegative");
}

double GbtTree::route(const Eigen::VectorXd& x, const BoolArray& present) const {
    int id = 0;
    for (;;) {
        const GbtNode& node = nodes[static_cast<std::size_t>(id)];
        if (node.leaf) return node.weight;
        const bool go_left = present[node.feature] ? x[node.feature] <= node.threshold : node.default_left;
        id = go_left ? node.left : node.right;
    }
}

std::vector<SplitCandidate> enumerate_splits(const MaskedMatrix& X, const Eigen::VectorXd& grad,
                                             const Eigen::VectorXd& hess,
                                             const std::vector<Eigen::Index>& rows, const GbtParams& params,
                                             unsigned threads) {
    double g_total = 0.0, h_total = 0.0;
    for (const auto r : rows) {
        g_total += grad[r];
        h_total += hess[r];
    }
    const double parent_score = structure_score(g_total, h_total, params.reg_lambda, params.reg_alpha);

    std::vector<std::vector<SplitCandidate>> per_feature(static_cast<std::size_t>(X.cols()));
    parallel_for(per_feature.size(), threads, [&](std::size_t f) {
        const auto feature = static_cast<Eigen::Index>(f);
        std::vector<std::tuple<double, double, double>> xs;  // value, g, h
        double g_present = 0.0, h_present = 0.0;
        for (const auto r : rows) {
            if (!X.present(r, feature)) continue;
            xs.emplace_back(X.values(r, feature), grad[r], hess[r]);
            g_present += grad[r];
            h_present += hess[r];
        }
        if (xs.size() < 2) return;
        std::sort(xs.begin(), xs.end(),
                  [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
        const double g_miss = g_total - g_present;
        const double h_miss = h_total - h_present;

        auto& out = per_feature[f];
        double g_prefix = 0.0, h_prefix = 0.0;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            g_prefix += std::get<1>(xs[i]);
            h_prefix += std::get<2>(xs[i]);
            const double lo = std::get<0>(xs[i]);
            const double hi = std::get<0>(xs[i + 1]);
            if (lo == hi) continue;
            const double threshold = lo + 0.5 * (hi - lo);
            for (const bool missing_left : {true, false}) {
                SplitCandidate cand;
                cand.feature = static_cast<int>(feature);
                cand.threshold = threshold;
                cand.default_left = missing_left;
                cand.g_left = g_prefix + (missing_left ? g_miss : 0.0);
                cand.h_left = h_prefix + (missing_left ? h_miss : 0.0);
                cand.g_right = g_total - cand.g_left;
                cand.h_right = h_total - cand.h_left;
                if (cand.h_left < params.min_child_weight || cand.h_right < params.min_child_weight)
                    continue;
                cand.gain = 0.5 * (structure_score(cand.g_left, cand.h_left, params.reg_lambda,
                                                   params.reg_alpha) +
                                   structure_score(cand.g_right, cand.h_right, params.reg_lambda,
                                                   params.reg_alpha) -
                                   parent_score) -
                            params.gamma;
                out.push_back(cand);
            }
        }
    });

    std::vector<SplitCandidate> candidates;
    for (auto& chunk : per_feature)
        candidates.insert(candidates.end(), chunk.begin(), chunk.end());
    return candidates;
}

const SplitCandidate* best_split(const std::vector<SplitCandidate>& candidates) {
    const SplitCandidate* best = nullptr;
    for (const auto& cand : candidates)
        if (best == nullptr || cand.gain > best->gain) best = &cand;
    return best;
}

GbtModel fit(const MaskedMatrix& X, const Eigen::VectorXd& y, const GbtParams& params,
             const GradHessFn& grad_hess, unsigned threads) {
    params.validate();
    const Eigen::Index n = X.rows();
    if (n < 2) throw std::invalid_argument("gbt::fit: need at least 2 rows");
    if (X.cols() < 1) throw std::invalid_argument("gbt::fit: need at least 1 feature");
    if (n != y.size()) throw std::invalid_argument("gbt::fit: X rows must match y length");
    if (!y.allFinite()) throw std::invalid_argument("gbt::fit: non-finite target values");
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (X.present(i, j) && !std::isfinite(X.values(i, j)))
                throw std::invalid_argument("gbt::fit: non-finite feature value");

    GbtModel model;
    model.params = params;
    model.n_features = X.cols();
    model.base_score = y.mean();
    model.trees.reserve(static_cast<std::size_t>(params.n_estimators));

    Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, model.base_score);
    Eigen::VectorXd grad(n), hess(n);
    for (int round = 0; round < params.n_estimators; ++round) {
        if (grad_hess) {
            grad_hess(pred, y, grad, hess);
            if (!grad.allFinite() || !hess.allFinite())
                throw ModelError("gbt::fit: custom objective produced non-finite derivatives");
        } else {
            grad = pred - y;
            hess.setOnes();
        }

        const auto rows =
            subsample_rows(n, params.subsample, derive_seed(params.seed, static_cast<std::uint64_t>(round)));
        TreeGrower grower{X, grad, hess, params, threads, {}};
        grower.build(rows, 0);
        model.trees.push_back(std::move(grower.tree));

        const GbtTree& tree = model.trees.back();
        for (Eigen::Index i = 0; i < n; ++i)
            pred[i] += params.learning_rate * tree.route(X.values.row(i).transpose(), X.present.row(i).transpose());
    }
    return model;
}

double predict(const GbtModel& model, const Eigen::VectorXd& x, const BoolArray& present) {
    if (x.size() != model.n_features || present.size() != model.n_features)
        throw std::invalid_argument("gbt::predict: feature count mismatch");
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.route(x, present);
    return model.base_score + model.params.learning_rate * sum;
}

double predict(const GbtModel& model, const Eigen::VectorXd& x) {
    return predict(model, x, BoolArray::Constant(x.size(), true));
}

Eigen::VectorXd predict(const GbtModel& model, const MaskedMatrix& X) {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out[i] = predict(model, X.values.row(i).transpose(), X.present.row(i).transpose());
    return out;
}

double objective(const GbtModel& model, const MaskedMatrix& X, const Eigen::VectorXd& y) {
    const Eigen::VectorXd pred = predict(model, X);
    double total = (y - pred).squaredNorm();
    for (const auto& tree : model.trees)
        for (const auto& node : tree.nodes)
            if (node.leaf)
                total += model.params.gamma + 0.5 * model.params.reg_lambda * node.weight * node.weight +
                         model.params.reg_alpha * std::abs(node.weight);
    return total;
}

std::string serialize_model(const GbtModel& model) {
    std::ostringstream out;
    out << "panelcast-gbt-v1\n";
    out << "n_estimators " << model.params.n_estimators << '\n';
    out << "learning_rate " << csv::format_double(model.params.learning_rate) << '\n';
    out << "max_depth " << model.params.max_depth << '\n';
    out << "subsample " << csv::format_double(model.params.subsample) << '\n';
    out << "reg_lambda " << csv::format_double(model.params.reg_lambda) << '\n';
    out << "reg_alpha " << csv::format_double(model.params.reg_alpha) << '\n';
    out << "gamma " << csv::format_double(model.params.gamma) << '\n';
    out << "min_child_weight " << csv::format_double(model.params.min_child_weight) << '\n';
    out << "seed " << model.params.seed << '\n';
    out << "n_features " << model.n_features << '\n';
    out << "base_score " << csv::format_double(model.base_score) << '\n';
    out << "n_trees " << model.trees.size() << '\n';
    out << "node_id,kind,feature,threshold,default_left,weight,left_id,right_id\n";
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        out << "tree " << t << ' ' << model.trees[t].nodes.size() << '\n';
        const auto& nodes = model.trees[t].nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const GbtNode& node = nodes[i];
            out << i << ',' << (node.leaf ? "leaf" : "split") << ',' << node.feature << ','
                << csv::format_double(node.threshold) << ',' << (node.default_left ? 1 : 0) << ','
                << csv::format_double(node.weight) << ',' << node.left << ',' << node.right << '\n';
        }
    }
    return out.str();
}

namespace {

std::pair<std::string, std::string> split_kv(const std::string& line) {
    const auto pos = line.find(' ');
    if (pos == std::string::npos) throw DataError("gbt model: malformed header line '" + line + "'");
    return {line.substr(0, pos), line.substr(pos + 1)};
}

long long req_int(const std::string& field) {
    const auto v = csv::parse_int(field);
    if (!v) throw DataError("gbt model: expected integer, got '" + field + "'");
    return *v;
}

double req_double(const std::string& field) {
    const auto v = csv::parse_double(field);
    if (!v) throw DataError("gbt model: expected number, got '" + field + "'");
    return *v;
}

}  // namespace

GbtModel parse_model(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "panelcast-gbt-v1")
        throw DataError("gbt model: unrecognized format marker");

    GbtModel model;
    std::size_t n_trees = 0;
    for (;;) {
        if (!std::getline(in, line)) throw DataError("gbt model: truncated header");
        if (line == "node_id,kind,feature,threshold,default_left,weight,left_id,right_id") break;
        const auto [key, value] = split_kv(line);
        if (key == "n_estimators") model.params.n_estimators = static_cast<int>(req_int(value));
        else if (key == "learning_rate") model.params.learning_rate = req_double(value);
        else if (key == "max_depth") model.params.max_depth = static_cast<int>(req_int(value));
        else if (key == "subsample") model.params.subsample = req_double(value);
        else if (key == "reg_lambda") model.params.reg_lambda = req_double(value);
        else if (key == "reg_alpha") model.params.reg_alpha = req_double(value);
        else if (key == "gamma") model.params.gamma = req_double(value);
        else if (key == "min_child_weight") model.params.min_child_weight = req_double(value);
        else if (key == "seed") model.params.seed = static_cast<std::uint64_t>(req_int(value));
        else if (key == "n_features") model.n_features = static_cast<Eigen::Index>(req_int(value));
        else if (key == "base_score") model.base_score = req_double(value);
        else if (key == "n_trees") n_trees = static_cast<std::size_t>(req_int(value));
        else throw DataError("gbt model: unknown header key '" + key + "'");
    }

    model.trees.reserve(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        if (!std::getline(in, line)) throw DataError("gbt model: missing tree block " + std::to_string(t));
        std::istringstream tree_header(line);
        std::string word;
        std::size_t index = 0, n_nodes = 0;
        tree_header >> word >> index >> n_nodes;
        if (word != "tree" || index != t) throw DataError("gbt model: malformed tree header '" + line + "'");
        GbtTree tree;
        tree.nodes.resize(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            if (!std::getline(in, line)) throw DataError("gbt model: truncated node list");
            const auto fields = csv::split_record(line);
            if (fields.size() != 8) throw DataError("gbt model: malformed node row '" + line + "'");
            if (static_cast<std::size_t>(req_int(fields[0])) != i)
                throw DataError("gbt model: node ids must be preorder-contiguous");
            GbtNode node;
            node.leaf = fields[1] == "leaf";
            if (!node.leaf && fields[1] != "split")
                throw DataError("gbt model: unknown node kind '" + fields[1] + "'");
            node.feature = static_cast<int>(req_int(fields[2]));
            node.threshold = req_double(fields[3]);
            node.default_left = req_int(fields[4]) != 0;
            node.weight = req_double(fields[5]);
            node.left = static_cast<int>(req_int(fields[6]));
            node.right = static_cast<int>(req_int(fields[7]));
            tree.nodes[i] = node;
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

void save_model(const GbtModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << serialize_model(model);
    if (!out) throw DataError("write failed: " + path.string());
}

GbtModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

}  // namespace pcast::gbt
