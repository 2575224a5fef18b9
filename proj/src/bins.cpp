#include "tempanel/bins.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tempanel/errors.hpp"

namespace tempanel {

namespace {

// "-10" -> "m10" for ASCII column codes.
std::string ascii_number(double v) {
    std::ostringstream os;
    if (v < 0) {
        os << 'm' << -v;
    } else {
        os << v;
    }
    return os.str();
}

std::string display_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

const BinSpec& BinSpec::standard() {
    static const BinSpec spec({-10, -5, 0, 5, 10, 15, 20, 25, 30}, 5);
    return spec;
}

BinSpec::BinSpec(std::vector<double> edges, int reference_interval)
    : edges_(std::move(edges)), reference_(reference_interval) {
    if (static_cast<int>(edges_.size()) != kRegressors)
        throw ValidationError("bin spec: expected 9 edges (10 intervals including reference)");
    for (std::size_t i = 1; i < edges_.size(); ++i) {
        if (!(edges_[i - 1] < edges_[i]))
            throw ValidationError("bin spec: edges must be strictly increasing");
    }
    if (reference_ < 0 || reference_ >= n_intervals())
        throw ValidationError("bin spec: reference interval out of range");
}

int BinSpec::interval_of(double temp_c) const {
    if (!std::isfinite(temp_c)) throw ValidationError("bin index: non-finite temperature");
    // Interval i covers (edges[i-1], edges[i]]; a value equal to an edge
    // belongs to the interval that ends there.
    auto it = std::lower_bound(edges_.begin(), edges_.end(), temp_c);
    return static_cast<int>(it - edges_.begin());
}

int BinSpec::regressor_slot(int interval) const {
    if (interval == reference_) return -1;
    return interval < reference_ ? interval : interval - 1;
}

std::string BinSpec::interval_label(int interval) const {
    if (interval == 0) return "<=" + display_number(edges_.front()) + "°C";
    if (interval == n_intervals() - 1) return ">" + display_number(edges_.back()) + "°C";
    return display_number(edges_[interval - 1]) + "~" + display_number(edges_[interval]) +
           "°C";
}

std::string BinSpec::interval_code(int interval) const {
    if (interval == 0) return "le_" + ascii_number(edges_.front());
    if (interval == n_intervals() - 1) return "gt" + ascii_number(edges_.back());
    return ascii_number(edges_[interval - 1]) + "_" + ascii_number(edges_[interval]);
}

std::vector<std::string> BinSpec::regressor_labels() const {
    std::vector<std::string> out;
    for (int i = 0; i < n_intervals(); ++i)
        if (i != reference_) out.push_back(interval_label(i));
    return out;
}

std::vector<std::string> BinSpec::regressor_codes() const {
    std::vector<std::string> out;
    for (int i = 0; i < n_intervals(); ++i)
        if (i != reference_) out.push_back(interval_code(i));
    return out;
}

int bin_index(double temp_c, const BinSpec& spec) { return spec.interval_of(temp_c); }

BinCounts count_bins(const std::vector<double>& daily_temps_c, const BinSpec& spec) {
    BinCounts out;
    for (double t : daily_temps_c) {
        const int interval = spec.interval_of(t);
        const int slot = spec.regressor_slot(interval);
        if (slot < 0) {
            ++out.reference_days;
        } else {
            ++out.counts[static_cast<std::size_t>(slot)];
        }
        ++out.total_days;
    }
    return out;
}

}  // namespace tempanel
