#include "pcast/random_forest.hpp"

#include "pcast/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace pcast {

void RfConfig::validate(Eigen::Index n_features) const {
    if (n_trees < 1) throw std::invalid_argument("RfConfig: n_trees must be >= 1");
    if (min_leaf < 1) throw std::invalid_argument("RfConfig: min_leaf must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("RfConfig: max_iter must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("RfConfig: tol must be positive");
    if (m_try < 0 || m_try > n_features) throw std::invalid_argument("RfConfig: m_try out of range");
}

int RfConfig::effective_m_try(Eigen::Index n_features) const {
    if (m_try > 0) return m_try;
    const int root = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
    return std::min<int>(std::max(root, 1), static_cast<int>(n_features));
}

double RfTree::predict(const Eigen::VectorXd& x) const {
    int id = 0;
    while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
        const RfNode& node = nodes[static_cast<std::size_t>(id)];
        id = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(id)].value;
}

double RandomForestModel::predict(const Eigen::VectorXd& x) const {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.predict(x);
    return sum / static_cast<double>(trees.size());
}

namespace {

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const Eigen::VectorXd& y;
    const RfConfig& cfg;
    int m_try;
    std::mt19937_64 rng;
    RfTree tree;
    std::vector<int> feature_pool;

    TreeBuilder(const Eigen::MatrixXd& X_, const Eigen::VectorXd& y_, const RfConfig& cfg_, int m_try_,
                std::uint64_t seed)
        : X(X_), y(y_), cfg(cfg_), m_try(m_try_), rng(seed) {
        feature_pool.resize(static_cast<std::size_t>(X.cols()));
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
    }

    std::vector<Eigen::Index> bootstrap() {
        std::uniform_int_distribution<Eigen::Index> pick(0, X.rows() - 1);
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(X.rows()));
        for (auto& r : rows) r = pick(rng);
        return rows;
    }

    // m_try distinct features, returned in ascending order so that the
    // lowest-index tie break is well defined.
    std::vector<int> sample_features() {
        for (int i = 0; i < m_try; ++i) {
            std::uniform_int_distribution<int> pick(i, static_cast<int>(feature_pool.size()) - 1);
            std::swap(feature_pool[static_cast<std::size_t>(i)], feature_pool[static_cast<std::size_t>(pick(rng))]);
        }
        std::vector<int> chosen(feature_pool.begin(), feature_pool.begin() + m_try);
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    // Best variance-reduction split among the sampled features. Gain is
    // sum_L^2/n_L + sum_R^2/n_R - sum^2/n (the SSE drop with y^2 cancelled).
    Split best_split(const std::vector<Eigen::Index>& rows) {
        Split best;
        std::vector<std::pair<double, double>> xy(rows.size());
        for (const int f : sample_features()) {
            for (std::size_t i = 0; i < rows.size(); ++i) xy[i] = {X(rows[i], f), y[rows[i]]};
            std::sort(xy.begin(), xy.end());

            double total = 0.0;
            for (const auto& [xv, yv] : xy) total += yv;
            const auto n = static_cast<double>(xy.size());

            double left_sum = 0.0;
            for (std::size_t i = 0; i + 1 < xy.size(); ++i) {
                left_sum += xy[i].second;
                if (xy[i].first == xy[i + 1].first) continue;
                const auto nl = static_cast<double>(i + 1);
                const auto nr = n - nl;
                if (nl < cfg.min_leaf || nr < cfg.min_leaf) continue;
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - total * total / n;
                if (gain > best.gain) {
                    best.feature = f;
                    best.threshold = xy[i].first + 0.5 * (xy[i + 1].first - xy[i].first);
                    best.gain = gain;
                }
            }
        }
        return best;
    }

    int build(const std::vector<Eigen::Index>& rows) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        double mean = 0.0;
        for (const auto r : rows) mean += y[r];
        mean /= static_cast<double>(rows.size());
        tree.nodes[static_cast<std::size_t>(id)].value = mean;

        if (rows.size() < 2 * static_cast<std::size_t>(cfg.min_leaf)) return id;
        bool constant = true;
        for (const auto r : rows)
            if (y[r] != y[rows[0]]) {
                constant = false;
                break;
            }
        if (constant) return id;

        const Split split = best_split(rows);
        if (split.feature < 0) return id;

        std::vector<Eigen::Index> left, right;
        for (const auto r : rows)
            (X(r, split.feature) <= split.threshold ? left : right).push_back(r);

        tree.nodes[static_cast<std::size_t>(id)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
        const int left_id = build(left);
        const int right_id = build(right);
        tree.nodes[static_cast<std::size_t>(id)].left = left_id;
        tree.nodes[static_cast<std::size_t>(id)].right = right_id;
        return id;
    }
};

}  // namespace

RandomForestModel fit_random_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RfConfig& cfg,
                                    std::vector<std::string> feature_names, unsigned threads) {
    if (X.rows() < 2) throw std::invalid_argument("fit_random_forest: need at least 2 rows");
    if (X.cols() < 1) throw std::invalid_argument("fit_random_forest: need at least 1 feature column");
    if (X.rows() != y.size()) throw std::invalid_argument("fit_random_forest: X rows must match y length");
    if (!X.allFinite() || !y.allFinite())
        throw std::invalid_argument("fit_random_forest: inputs must be complete and finite");
    cfg.validate(X.cols());

    RandomForestModel model;
    if (feature_names.empty())
        for (Eigen::Index j = 0; j < X.cols(); ++j) feature_names.push_back("f" + std::to_string(j));
    model.feature_names = std::move(feature_names);
    model.trees.resize(static_cast<std::size_t>(cfg.n_trees));
    model.tree_seeds.resize(static_cast<std::size_t>(cfg.n_trees));
    const int m_try = cfg.effective_m_try(X.cols());

    parallel_for(static_cast<std::size_t>(cfg.n_trees), threads, [&](std::size_t t) {
        const std::uint64_t tree_seed = cfg.seed ^ static_cast<std::uint64_t>(t);
        TreeBuilder builder(X, y, cfg, m_try, tree_seed);
        builder.build(builder.bootstrap());
        model.tree_seeds[t] = tree_seed;
        model.trees[t] = std::move(builder.tree);
    });
    return model;
}

}  // namespace pcast
