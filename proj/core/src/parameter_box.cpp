#include "mrlft/parameter_box.hpp"

#include <algorithm>
#include <cmath>

#include "mrlft/errors.hpp"

namespace mrlft {

ParameterBox::ParameterBox(std::vector<Param> params) : params_(std::move(params)) {
    for (const auto& p : params_) {
        if (p.lo > p.hi)
            throw ModelError("parameter '" + p.name + "': interval lo > hi");
        if (p.lo < -1.0 - 1e-12 || p.hi > 1.0 + 1e-12)
            throw ModelError("parameter '" + p.name + "': interval outside [-1, 1]");
    }
}

ParameterBox ParameterBox::unit(const std::vector<std::string>& names) {
    std::vector<Param> ps;
    ps.reserve(names.size());
    for (const auto& n : names) ps.push_back({n, 0.0, 1.0, -1.0, 1.0});
    return ParameterBox(std::move(ps));
}

int ParameterBox::index_of(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> ParameterBox::center() const {
    std::vector<double> c(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) c[i] = 0.5 * (params_[i].lo + params_[i].hi);
    return c;
}

std::vector<double> ParameterBox::radii() const {
    std::vector<double> r(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) r[i] = 0.5 * (params_[i].hi - params_[i].lo);
    return r;
}

double ParameterBox::max_radius() const {
    double m = 0.0;
    for (const auto& p : params_) m = std::max(m, 0.5 * (p.hi - p.lo));
    return m;
}

double ParameterBox::volume() const {
    double v = 1.0;
    for (const auto& p : params_) v *= (p.hi - p.lo);
    return v;
}

std::vector<std::vector<double>> ParameterBox::vertices() const {
    std::vector<int> active;
    for (size_t i = 0; i < params_.size(); ++i)
        if (params_[i].hi - params_[i].lo > 1e-15) active.push_back(static_cast<int>(i));
    const size_t count = size_t{1} << active.size();
    std::vector<std::vector<double>> out;
    out.reserve(count);
    std::vector<double> base = center();
    for (size_t mask = 0; mask < count; ++mask) {
        std::vector<double> v = base;
        for (size_t b = 0; b < active.size(); ++b) {
            const auto& p = params_[active[b]];
            v[active[b]] = (mask >> b) & 1 ? p.hi : p.lo;
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<double> ParameterBox::sample(std::mt19937_64& rng) const {
    std::vector<double> v(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        std::uniform_real_distribution<double> dist(params_[i].lo, params_[i].hi);
        v[i] = dist(rng);
    }
    return v;
}

bool ParameterBox::contains(const std::vector<double>& x, double tol) const {
    if (x.size() != params_.size()) return false;
    for (size_t i = 0; i < params_.size(); ++i)
        if (x[i] < params_[i].lo - tol || x[i] > params_[i].hi + tol) return false;
    return true;
}

std::pair<ParameterBox, ParameterBox> ParameterBox::split(int dim) const {
    if (dim < 0 || dim >= size()) throw ModelError("ParameterBox::split: bad dimension");
    std::vector<Param> a = params_, b = params_;
    double mid = 0.5 * (params_[dim].lo + params_[dim].hi);
    a[dim].hi = mid;
    b[dim].lo = mid;
    return {ParameterBox(std::move(a)), ParameterBox(std::move(b))};
}

double ParameterBox::physical(int i, double x) const {
    const auto& p = params_[i];
    return p.nominal + p.half_range * x;
}

}  // namespace mrlft
