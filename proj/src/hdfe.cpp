#include "tempanel/hdfe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "tempanel/errors.hpp"

namespace tempanel {

FactorGroup make_group(const std::string& name, const std::vector<std::string>& keys) {
    FactorGroup g;
    g.name = name;
    g.level_of_row.reserve(keys.size());
    std::unordered_map<std::string, int> intern;
    intern.reserve(keys.size());
    for (const auto& key : keys) {
        auto [it, inserted] = intern.try_emplace(key, g.n_levels);
        if (inserted) ++g.n_levels;
        g.level_of_row.push_back(it->second);
    }
    return g;
}

FactorGroup restrict_group(const FactorGroup& group, const std::vector<char>& keep) {
    FactorGroup out;
    out.name = group.name;
    std::vector<int> remap(static_cast<std::size_t>(group.n_levels), -1);
    for (std::size_t i = 0; i < group.level_of_row.size(); ++i) {
        if (!keep[i]) continue;
        int& lvl = remap[static_cast<std::size_t>(group.level_of_row[i])];
        if (lvl < 0) lvl = out.n_levels++;
        out.level_of_row.push_back(lvl);
    }
    return out;
}

SingletonDropResult drop_singletons(const std::vector<FactorGroup>& groups) {
    if (groups.empty()) throw ValidationError("drop_singletons: no groups");
    const std::size_t n = groups.front().level_of_row.size();
    for (const auto& g : groups)
        if (g.level_of_row.size() != n)
            throw ValidationError("drop_singletons: groups have unequal row counts");

    SingletonDropResult result;
    result.keep.assign(n, 1);
    bool changed = true;
    std::vector<int> counts;
    while (changed) {
        changed = false;
        for (const auto& g : groups) {
            counts.assign(static_cast<std::size_t>(g.n_levels), 0);
            for (std::size_t i = 0; i < n; ++i)
                if (result.keep[i]) ++counts[static_cast<std::size_t>(g.level_of_row[i])];
            for (std::size_t i = 0; i < n; ++i) {
                if (result.keep[i] &&
                    counts[static_cast<std::size_t>(g.level_of_row[i])] == 1) {
                    result.keep[i] = 0;
                    ++result.dropped;
                    changed = true;
                }
            }
        }
    }
    result.groups.reserve(groups.size());
    for (const auto& g : groups) result.groups.push_back(restrict_group(g, result.keep));
    return result;
}

namespace {

void for_each_column(Eigen::Index ncols, int threads,
                     const std::function<void(Eigen::Index)>& fn) {
    if (threads <= 1 || ncols <= 1) {
        for (Eigen::Index c = 0; c < ncols; ++c) fn(c);
        return;
    }
    const int used = static_cast<int>(std::min<Eigen::Index>(threads, ncols));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(used));
    for (int t = 0; t < used; ++t) {
        pool.emplace_back([&, t] {
            for (Eigen::Index c = t; c < ncols; c += used) fn(c);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

AbsorptionResult absorb(const Eigen::MatrixXd& columns, const FESpec& spec, int threads) {
    if (spec.groups.empty()) throw ValidationError("absorb: need at least one group");
    if (!(spec.tolerance > 0)) throw ValidationError("absorb: tolerance must be > 0");
    const Eigen::Index n = columns.rows();
    for (const auto& g : spec.groups)
        if (static_cast<Eigen::Index>(g.level_of_row.size()) != n)
            throw ValidationError("absorb: group '" + g.name + "' not aligned with columns");

    AbsorptionResult result;
    result.columns = columns;
    const Eigen::Index ncols = columns.cols();
    if (n == 0 || ncols == 0) return result;

    Eigen::VectorXd scale(ncols);
    for (Eigen::Index c = 0; c < ncols; ++c) {
        const double m = columns.col(c).cwiseAbs().maxCoeff();
        scale(c) = m > 0 ? m : 1.0;
    }

    int max_levels = 0;
    std::vector<std::vector<double>> inv_count(spec.groups.size());
    for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
        const auto& g = spec.groups[gi];
        max_levels = std::max(max_levels, g.n_levels);
        std::vector<int> counts(static_cast<std::size_t>(g.n_levels), 0);
        for (int lvl : g.level_of_row) ++counts[static_cast<std::size_t>(lvl)];
        inv_count[gi].resize(counts.size());
        for (std::size_t l = 0; l < counts.size(); ++l)
            inv_count[gi][l] = counts[l] > 0 ? 1.0 / counts[l] : 0.0;
    }

    // One level-sum workspace column per data column so threads never share.
    Eigen::MatrixXd sums(max_levels, ncols);
    Eigen::VectorXd col_worst(ncols);
    Eigen::MatrixXd& data = result.columns;

    // Largest |level sum| / column scale over all groups, the quantity the
    // orthogonality contract bounds by the tolerance.
    const auto residual_norm = [&]() -> double {
        col_worst.setZero();
        for (const auto& g : spec.groups) {
            for_each_column(ncols, threads, [&](Eigen::Index c) {
                auto s = sums.col(c).head(g.n_levels);
                s.setZero();
                for (Eigen::Index r = 0; r < n; ++r)
                    s(g.level_of_row[static_cast<std::size_t>(r)]) += data(r, c);
                const double worst = g.n_levels > 0 ? s.cwiseAbs().maxCoeff() : 0.0;
                col_worst(c) = std::max(col_worst(c), worst / scale(c));
            });
        }
        return col_worst.maxCoeff();
    };

    const auto demean_cycle = [&]() {
        for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
            const auto& g = spec.groups[gi];
            const auto& inv = inv_count[gi];
            for_each_column(ncols, threads, [&](Eigen::Index c) {
                auto s = sums.col(c).head(g.n_levels);
                s.setZero();
                for (Eigen::Index r = 0; r < n; ++r)
                    s(g.level_of_row[static_cast<std::size_t>(r)]) += data(r, c);
                for (Eigen::Index r = 0; r < n; ++r) {
                    const auto lvl = static_cast<std::size_t>(
                        g.level_of_row[static_cast<std::size_t>(r)]);
                    data(r, c) -= s(static_cast<Eigen::Index>(lvl)) * inv[lvl];
                }
            });
        }
    };

    for (;;) {
        const double rel = residual_norm();
        if (rel <= spec.tolerance) return result;
        if (result.iterations_used >= spec.max_iters)
            throw ConvergenceError(
                "absorb: no convergence after " + std::to_string(spec.max_iters) +
                    " cycles (residual " + std::to_string(rel) + ")",
                rel);
        demean_cycle();
        ++result.iterations_used;
    }
}

namespace {

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int a) {
        while (parent_[static_cast<std::size_t>(a)] != a) {
            parent_[static_cast<std::size_t>(a)] =
                parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(a)])];
            a = parent_[static_cast<std::size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) { parent_[static_cast<std::size_t>(find(a))] = find(b); }

private:
    std::vector<int> parent_;
};

}  // namespace

AbsorbedDof count_absorbed_dof(const std::vector<FactorGroup>& groups) {
    if (groups.empty()) throw ValidationError("count_absorbed_dof: no groups");
    AbsorbedDof out;
    if (groups.size() == 1) {
        out.m = groups[0].n_levels;
        return out;
    }
    // Bipartite level graph of the first two groups; each row is an edge.
    const auto& a = groups[0];
    const auto& b = groups[1];
    UnionFind uf(a.n_levels + b.n_levels);
    for (std::size_t i = 0; i < a.level_of_row.size(); ++i)
        uf.unite(a.level_of_row[i], a.n_levels + b.level_of_row[i]);
    std::vector<char> seen(static_cast<std::size_t>(a.n_levels + b.n_levels), 0);
    int components = 0;
    for (int v = 0; v < a.n_levels + b.n_levels; ++v) {
        const int root = uf.find(v);
        if (!seen[static_cast<std::size_t>(root)]) {
            seen[static_cast<std::size_t>(root)] = 1;
            ++components;
        }
    }
    out.m = a.n_levels + b.n_levels - components;
    for (std::size_t gi = 2; gi < groups.size(); ++gi) {
        out.m += groups[gi].n_levels - 1;
        out.exact = false;
    }
    return out;
}

}  // namespace tempanel
