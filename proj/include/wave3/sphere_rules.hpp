#pragma once

#include <string>
#include <vector>

#include "wave3/common.hpp"

namespace wave3 {

/// Quadrature rule for the mean over the unit sphere; weights sum to 1.
class SphereRule {
public:
    /// Lebedev rule of the given algebraic order (17, 29, 41, 59 or 89).
    static SphereRule lebedev(int order = 41);
    /// Equal-weight spherical Fibonacci lattice with n points.
    static SphereRule fibonacci(int n);
    /// Lebedev 41 (590 points).
    static const SphereRule& default_rule();

    template <class F>
    double mean(F&& g) const {
        double s = 0.0;
        for (std::size_t i = 0; i < dirs_.size(); ++i) s += weights_[i] * g(dirs_[i]);
        return s;
    }

    std::size_t size() const { return dirs_.size(); }
    const std::vector<Vec3>& directions() const { return dirs_; }
    const std::vector<double>& weights() const { return weights_; }
    /// e.g. "lebedev-41" or "fibonacci-1000"; recorded in manifests.
    const std::string& name() const { return name_; }

private:
    std::vector<Vec3> dirs_;
    std::vector<double> weights_;
    std::string name_;
};

std::vector<int> available_lebedev_orders();

}  // namespace wave3
