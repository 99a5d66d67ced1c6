#include "wave3/sphere_rules.hpp"

#include <cmath>

#include "wave3/lebedev_tables.hpp"

namespace wave3 {

SphereRule SphereRule::lebedev(int order) {
    for (const auto& table : detail::kLebedevTables) {
        if (table.order != order) continue;
        SphereRule r;
        r.dirs_.reserve(table.nodes.size());
        r.weights_.reserve(table.nodes.size());
        for (const auto& n : table.nodes) {
            r.dirs_.push_back({n.x, n.y, n.z});
            r.weights_.push_back(n.w);
        }
        r.name_ = "lebedev-" + std::to_string(order);
        return r;
    }
    throw ConfigError("no Lebedev rule of order " + std::to_string(order));
}

SphereRule SphereRule::fibonacci(int n) {
    if (n < 1) throw ConfigError("Fibonacci sphere rule needs at least one point");
    SphereRule r;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        r.dirs_.push_back({s * std::cos(phi), s * std::sin(phi), z});
        r.weights_.push_back(1.0 / n);
    }
    r.name_ = "fibonacci-" + std::to_string(n);
    return r;
}

const SphereRule& SphereRule::default_rule() {
    static const SphereRule rule = lebedev(41);
    return rule;
}

std::vector<int> available_lebedev_orders() {
    std::vector<int> out;
    for (const auto& t : detail::kLebedevTables) out.push_back(t.order);
    return out;
}

}  // namespace wave3
