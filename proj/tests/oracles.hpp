#pragma once

// Brute-force reference implementations. Each one follows the textbook
// definition directly and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// IoU of integer-coordinate boxes by counting unit pixels.
inline double pixel_iou(int ax, int ay, int aw, int ah, int bx, int by, int bw, int bh) {
    const int x0 = std::min(ax, bx), x1 = std::max(ax + aw, bx + bw);
    const int y0 = std::min(ay, by), y1 = std::max(ay + ah, by + bh);
    long both = 0, either = 0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const bool in_a = x >= ax && x < ax + aw && y >= ay && y < ay + ah;
            const bool in_b = x >= bx && x < bx + bw && y >= by && y < by + bh;
            both += in_a && in_b;
            either += in_a || in_b;
        }
    }
    return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Rank by definition: 1 + (#smaller) + (#equal others) / 2.
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++less;
            if (j != i && v[j] == v[i]) ++equal;
        }
        r[i] = 1.0 + static_cast<double>(less) + static_cast<double>(equal) / 2.0;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(ranks(x), ranks(y));
}

// Kruskal-Wallis H as the between-group share of pooled rank variance,
// (N - 1) * SS_between / SS_total, which carries the tie correction implicitly.
inline double kruskal_wallis_h(const std::vector<std::vector<double>>& groups) {
    std::vector<double> pooled;
    for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
    const auto r = ranks(pooled);
    const double n = static_cast<double>(pooled.size());
    const double grand = (n + 1.0) / 2.0;
    double between = 0.0, total = 0.0;
    std::size_t k = 0;
    for (const auto& g : groups) {
        double mean = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) mean += r[k + i];
        mean /= static_cast<double>(g.size());
        between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
        for (std::size_t i = 0; i < g.size(); ++i) total += (r[k + i] - grand) * (r[k + i] - grand);
        k += g.size();
    }
    return (n - 1.0) * between / total;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

// Coefficient of determination of the least-squares line through (x, y).
inline double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
    const double r = pearson(x, y);
    return r * r;
}

} // namespace oracle
