#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "otoc/error.hpp"

namespace otoc {

/// Sampled real observable on a strictly increasing time grid.
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(std::vector<double> times, std::vector<double> values, std::string label = {})
        : times_(std::move(times)), values_(std::move(values)), label_(std::move(label)) {
        require(times_.size() == values_.size(), ErrorKind::InvalidArgument,
                "time and value arrays differ in length");
        for (std::size_t i = 1; i < times_.size(); ++i) {
            require(times_[i] > times_[i - 1], ErrorKind::InvalidArgument,
                    "time grid must be strictly increasing");
        }
    }

    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::string& label() const noexcept { return label_; }
    std::size_t size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.empty(); }
    double time(std::size_t i) const { return times_.at(i); }
    double value(std::size_t i) const { return values_.at(i); }

private:
    std::vector<double> times_;
    std::vector<double> values_;
    std::string label_;
};

/// n samples on [0, t_end], endpoints included.
inline std::vector<double> uniform_times(double t_end, int n) {
    require(n >= 2, ErrorKind::InvalidArgument, "time grid needs at least 2 samples");
    require(t_end > 0.0 && std::isfinite(t_end), ErrorKind::InvalidArgument,
            "time grid end must be positive");
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = t_end * i / (n - 1);
    return t;
}

}  // namespace otoc
