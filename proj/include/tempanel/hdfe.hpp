#ifndef TEMPANEL_HDFE_HPP
#define TEMPANEL_HDFE_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

namespace tempanel {

/// One categorical factor: a level index per row. Level ids are dense,
/// assigned in first-appearance order so results do not depend on hashing.
struct FactorGroup {
    std::string name;
    std::vector<int> level_of_row;
    int n_levels = 0;
};

/// Interns string keys into a FactorGroup.
FactorGroup make_group(const std::string& name, const std::vector<std::string>& keys);

/// A FactorGroup restricted to the rows where keep[i] is true, with levels
/// re-interned on the survivors.
FactorGroup restrict_group(const FactorGroup& group, const std::vector<char>& keep);

struct FESpec {
    std::vector<FactorGroup> groups;
    double tolerance = 1e-8;  // relative to each column's max |value|
    int max_iters = 10000;
};

struct SingletonDropResult {
    std::vector<char> keep;          // per input row
    std::size_t dropped = 0;
    std::vector<FactorGroup> groups; // re-interned on the survivors
};

/// Iterates until no level in any group has exactly one surviving row. The
/// fixed point is unique, so the result is order-independent. An empty
/// survivor set is legal.
SingletonDropResult drop_singletons(const std::vector<FactorGroup>& groups);

struct AbsorptionResult {
    Eigen::MatrixXd columns;  // demeaned copy of the input columns
    int iterations_used = 0;  // demeaning cycles performed (0 = input was already demeaned)
};

/// Removes group means from every column by cyclic alternating projections
/// (Gauss-Seidel over groups). A cycle demeans each group once; convergence
/// requires every level's column sum to fall below tolerance * max|column|,
/// which is checked before each cycle so the returned data itself satisfies
/// that bound. One group is exact after a single cycle. Throws
/// ConvergenceError when max_iters cycles are not enough.
/// Columns are independent, so the sweep may be parallelized across them;
/// per-column accumulation stays in row order and results are identical for
/// any thread count.
AbsorptionResult absorb(const Eigen::MatrixXd& columns, const FESpec& spec,
                        int threads = 1);

struct AbsorbedDof {
    int m = 0;
    bool exact = true;  // false for three or more groups
};

/// Rank of the implied fixed-effect dummy matrix. One group: number of
/// levels. Two groups: L1 + L2 - (connected components of the bipartite
/// level graph). Three or more: exact for the first two plus (levels - 1)
/// per extra group, flagged approximate.
AbsorbedDof count_absorbed_dof(const std::vector<FactorGroup>& groups);

}  // namespace tempanel

#endif
