#pragma once

#include "types.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace mpjc {

// Piecewise-linear function of time, clamped outside its knots.
class Schedule {
public:
    Schedule() = default;
    explicit Schedule(double constant) : knots_{{0.0, constant}} {}
    explicit Schedule(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
        if (knots_.empty()) throw ValidationError({"schedule: needs at least one knot"});
        for (std::size_t k = 1; k < knots_.size(); ++k)
            if (!(knots_[k].first > knots_[k - 1].first))
                throw ValidationError({"schedule: knot times must be strictly increasing"});
    }

    static Schedule linear(double t0, double v0, double t1, double v1) { return Schedule({{t0, v0}, {t1, v1}}); }

    double operator()(double t) const {
        if (knots_.size() == 1 || t <= knots_.front().first) return knots_.front().second;
        if (t >= knots_.back().first) return knots_.back().second;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double x, const std::pair<double, double>& k) { return x < k.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double w = (t - lo.first) / (hi.first - lo.first);
        return lo.second + w * (hi.second - lo.second);
    }

    bool constant() const { return knots_.size() <= 1; }
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }
    bool empty() const { return knots_.empty(); }

    // "t0:v0, t1:v1, ..." or a single number.
    static Schedule parse(const std::string& text) {
        auto fail = [&]() { return ValidationError({"schedule: cannot parse '" + text + "'"}); };
        auto number = [&](const std::string& s) {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(s, &used);
            } catch (const std::exception&) {
                throw fail();
            }
            if (s.find_first_not_of(" \t", used) != std::string::npos) throw fail();
            return v;
        };
        if (text.find(':') == std::string::npos) return Schedule(number(text));
        std::vector<std::pair<double, double>> k;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw fail();
            k.emplace_back(number(item.substr(0, colon)), number(item.substr(colon + 1)));
        }
        return Schedule(std::move(k));
    }

    std::string str() const {
        std::ostringstream os;
        os.precision(17);
        if (constant()) {
            os << knots_.front().second;
            return os.str();
        }
        for (std::size_t i = 0; i < knots_.size(); ++i) os << (i ? "," : "") << knots_[i].first << ":" << knots_[i].second;
        return os.str();
    }

private:
    std::vector<std::pair<double, double>> knots_;
};

}  // namespace mpjc
