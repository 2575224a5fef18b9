#ifndef TEMPANEL_BINS_HPP
#define TEMPANEL_BINS_HPP

#include <array>
#include <string>
#include <vector>

namespace tempanel {

/// The 5-degree temperature bins. Intervals are left-open/right-closed,
/// anchored by the "<= -10" and "> 30" table labels:
///   (-inf,-10] (-10,-5] (-5,0] (0,5] (5,10] (10,15] (15,20] (20,25] (25,30] (30,inf)
/// The (10,15] interval is the omitted reference group; the other nine are
/// regressors, kept everywhere in cold-to-hot order.
class BinSpec {
public:
    static constexpr int kRegressors = 9;

    /// Celsius breakpoints {-10,-5,0,5,10,15,20,25,30} with reference (10,15].
    static const BinSpec& standard();

    /// edges must be strictly increasing; reference_interval indexes one of
    /// the edges.size()+1 intervals. Throws ValidationError otherwise.
    BinSpec(std::vector<double> edges, int reference_interval);

    /// Interval index in [0, n_intervals) for a finite temperature.
    /// Throws ValidationError on non-finite input.
    int interval_of(double temp_c) const;

    int n_intervals() const { return static_cast<int>(edges_.size()) + 1; }
    int n_regressors() const { return n_intervals() - 1; }
    int reference_interval() const { return reference_; }

    /// Regressor slot in [0, n_regressors) for a non-reference interval,
    /// cold-to-hot. Returns -1 for the reference interval.
    int regressor_slot(int interval) const;

    /// Display label for an interval: "<=-10°C", "-10~-5°C", ..., ">30°C".
    std::string interval_label(int interval) const;
    /// ASCII column code for an interval: "le_m10", "m10_m5", ..., "gt30".
    std::string interval_code(int interval) const;

    /// Labels/codes of the nine regressor bins, cold-to-hot.
    std::vector<std::string> regressor_labels() const;
    std::vector<std::string> regressor_codes() const;

private:
    std::vector<double> edges_;
    int reference_;
};

/// Exactly one interval index for a finite temperature.
int bin_index(double temp_c, const BinSpec& spec);

/// Day counts per regressor bin for one firm-year.
/// counts are cold-to-hot; sum(counts) + reference_days == total_days.
struct BinCounts {
    std::array<int, BinSpec::kRegressors> counts{};
    int reference_days = 0;
    int total_days = 0;

    bool operator==(const BinCounts&) const = default;
};

BinCounts count_bins(const std::vector<double>& daily_temps_c, const BinSpec& spec);

}  // namespace tempanel

#endif
