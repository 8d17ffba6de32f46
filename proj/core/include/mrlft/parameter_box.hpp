#pragma once

#include <random>
#include <string>
#include <vector>

namespace mrlft {

// Axis-aligned box over normalized real parameters. Each parameter carries
// its physical nominal and half-range for reporting; analysis works on the
// normalized interval [lo, hi], a subset of [-1, 1] for the unit box.
class ParameterBox {
public:
    struct Param {
        std::string name;
        double nominal = 0.0;
        double half_range = 0.0;
        double lo = -1.0;
        double hi = 1.0;
    };

    ParameterBox() = default;
    explicit ParameterBox(std::vector<Param> params);

    static ParameterBox unit(const std::vector<std::string>& names);

    const std::vector<Param>& params() const { return params_; }
    int size() const { return static_cast<int>(params_.size()); }
    bool empty() const { return params_.empty(); }
    int index_of(const std::string& name) const;  // -1 if absent

    std::vector<double> center() const;
    std::vector<double> radii() const;  // (hi - lo) / 2
    double max_radius() const;
    double volume() const;

    // All 2^k corner points over non-degenerate parameters (degenerate ones
    // stay at their center).
    std::vector<std::vector<double>> vertices() const;

    std::vector<double> sample(std::mt19937_64& rng) const;
    bool contains(const std::vector<double>& x, double tol = 1e-12) const;

    // Splits along dimension `dim` at the midpoint.
    std::pair<ParameterBox, ParameterBox> split(int dim) const;

    // Physical value of parameter i at normalized coordinate x.
    double physical(int i, double x) const;

private:
    std::vector<Param> params_;
};

}  // namespace mrlft
