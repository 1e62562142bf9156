#pragma once

#include "pvb/data.hpp"
#include "pvb/em.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace pvb::test {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double bern(int y, double p) { return y == 1 ? p : 1.0 - p; }

// Observed-data log-likelihood written out record by record, with the
// parameters packed as alpha | beta | gamma for the MNAR model with at most
// one covariate.
inline double direct_loglik(const Dataset& d, const std::vector<double>& th, bool with_x)
{
    const int k = with_x ? 1 : 0;
    const double* a = th.data();
    const double* b = a + 1 + k;
    const double* g = b + 2 + k;
    double total = 0.0;
    for (const auto& r : d.records()) {
        const double x = with_x ? r.x[0] : 0.0;
        auto joint = [&](int dd, int v) {
            const double pd = sigmoid(a[0] + (with_x ? a[1] * x : 0.0));
            const double pt = sigmoid(b[0] + b[1] * dd + (with_x ? b[2] * x : 0.0));
            const double pv = sigmoid(g[0] + g[1] * r.t + g[2] * dd + (with_x ? g[3] * x : 0.0));
            return bern(dd, pd) * bern(r.t, pt) * bern(v, pv);
        };
        total += r.verified() ? std::log(joint(*r.d, 1)) : std::log(joint(0, 0) + joint(1, 0));
    }
    return total;
}

inline std::vector<double> pack(const EmState& s)
{
    std::vector<double> out;
    for (const logit::Vector* v : {&s.alpha, &s.beta, &s.gamma})
        for (Eigen::Index i = 0; i < v->size(); ++i) out.push_back((*v)[i]);
    return out;
}

// Nelder-Mead maximiser with restarts.
inline double direct_search_max(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<std::vector<double>>& starts)
{
    double best = -1e300;
    for (auto start : starts) {
        const std::size_t n = start.size();
        for (int restart = 0; restart < 6; ++restart) {
            std::vector<std::vector<double>> simplex{start};
            for (std::size_t i = 0; i < n; ++i) {
                auto p = start;
                p[i] += restart == 0 ? 1.0 : 0.2;
                simplex.push_back(p);
            }
            std::vector<double> val;
            for (const auto& p : simplex) val.push_back(-f(p));
            for (int it = 0; it < 20000; ++it) {
                std::vector<std::size_t> order(n + 1);
                for (std::size_t i = 0; i <= n; ++i) order[i] = i;
                std::sort(order.begin(), order.end(), [&](auto i, auto j) { return val[i] < val[j]; });
                const auto lo = order.front(), hi = order.back(), second = order[n - 1];
                if (std::abs(val[hi] - val[lo]) < 1e-13) break;
                std::vector<double> c(n, 0.0);
                for (std::size_t i = 0; i <= n; ++i)
                    if (i != hi)
                        for (std::size_t k = 0; k < n; ++k) c[k] += simplex[i][k] / static_cast<double>(n);
                auto along = [&](double t) {
                    std::vector<double> p(n);
                    for (std::size_t k = 0; k < n; ++k) p[k] = c[k] + t * (simplex[hi][k] - c[k]);
                    return p;
                };
                const auto r = along(-1.0);
                const double fr = -f(r);
                if (fr < val[lo]) {
                    const auto e = along(-2.0);
                    const double fe = -f(e);
                    if (fe < fr) {
                        simplex[hi] = e;
                        val[hi] = fe;
                    } else {
                        simplex[hi] = r;
                        val[hi] = fr;
                    }
                } else if (fr < val[second]) {
                    simplex[hi] = r;
                    val[hi] = fr;
                } else {
                    const auto cc = along(0.5);
                    const double fc = -f(cc);
                    if (fc < val[hi]) {
                        simplex[hi] = cc;
                        val[hi] = fc;
                    } else {
                        for (std::size_t i = 0; i <= n; ++i) {
                            if (i == lo) continue;
                            for (std::size_t k = 0; k < n; ++k)
                                simplex[i][k] = simplex[lo][k] + 0.5 * (simplex[i][k] - simplex[lo][k]);
                            val[i] = -f(simplex[i]);
                        }
                    }
                }
            }
            const auto it = std::min_element(val.begin(), val.end());
            start = simplex[static_cast<std::size_t>(it - val.begin())];
            best = std::max(best, -*it);
        }
    }
    return best;
}

}  // namespace pvb::test
