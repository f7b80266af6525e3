#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "syntempl/error.hpp"

namespace syntempl {

struct RankTestResult {
    double u_statistic = 0.0;  // U for sample A
    double p_two_tailed = 1.0;
    double median_a = 0.0;
    double median_b = 0.0;
    size_t n_a = 0;
    size_t n_b = 0;
};

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Mann-Whitney U with midrank tie handling; two-tailed p-value by normal
// approximation with tie-corrected variance and continuity correction.
inline RankTestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw DataError("mann_whitney_u requires non-empty samples");
    const size_t na = a.size(), nb = b.size();
    const size_t n = na + nb;

    struct Obs {
        double value;
        bool from_a;
    };
    std::vector<Obs> all;
    all.reserve(n);
    for (double v : a) all.push_back({v, true});
    for (double v : b) all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const Obs& x, const Obs& y) { return x.value < y.value; });

    double rank_sum_a = 0.0;
    double tie_sum = 0.0;  // sum of t^3 - t over tie groups
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && all[j].value == all[i].value) ++j;
        const double t = static_cast<double>(j - i);
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // midrank, 1-based
        for (size_t k = i; k < j; ++k)
            if (all[k].from_a) rank_sum_a += avg_rank;
        tie_sum += t * t * t - t;
        i = j;
    }

    const double dna = static_cast<double>(na), dnb = static_cast<double>(nb);
    const double u_a = rank_sum_a - dna * (dna + 1.0) / 2.0;

    const double mu = 0.5 * dna * dnb;
    const double dn = static_cast<double>(n);
    double var = dna * dnb / 12.0 * ((dn + 1.0) - tie_sum / (dn * (dn - 1.0)));
    if (var < 0.0) var = 0.0;
    const double sd = std::sqrt(var);

    double p;
    if (sd <= 0.0) {
        p = 1.0;
    } else {
        double z = std::abs(u_a - mu) - 0.5;  // continuity correction
        if (z < 0.0) z = 0.0;
        z /= sd;
        p = std::erfc(z / std::sqrt(2.0));  // two-tailed
        if (p > 1.0) p = 1.0;
        if (p <= 0.0) p = std::numeric_limits<double>::min();
    }

    RankTestResult r;
    r.u_statistic = u_a;
    r.p_two_tailed = p;
    r.median_a = detail::median(a);
    r.median_b = detail::median(b);
    r.n_a = na;
    r.n_b = nb;
    return r;
}

}  // namespace syntempl
