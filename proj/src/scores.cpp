#include "hal/scores.hpp"

#include <cmath>

namespace hal {

std::vector<GroupStats> group_score_stats(const std::vector<AuxScoreRow>& rows, int s) {
    std::vector<GroupStats> out;
    for (int g = 0; g < s; ++g) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            if (r.superclass == g) {
                sum += r.score;
                sq += r.score * r.score;
                ++n;
            }
        double mean = n ? sum / static_cast<double>(n) : 0.0;
        double var = n > 1 ? (sq - sum * mean) / static_cast<double>(n - 1) : 0.0;
        out.push_back({g, n, mean, std::sqrt(var > 0.0 ? var : 0.0)});
    }
    return out;
}

double separation_statistic(const std::vector<AuxScoreRow>& rows, int s) {
    auto stats = group_score_stats(rows, s);
    double worst = -1.0;
    for (int i = 0; i < s; ++i)
        for (int j = i + 1; j < s; ++j) {
            const auto& a = stats[i];
            const auto& b = stats[j];
            if (a.count < 2 || b.count < 2) continue;
            double pooled_var = (static_cast<double>(a.count - 1) * a.stdev * a.stdev +
                                 static_cast<double>(b.count - 1) * b.stdev * b.stdev) /
                                static_cast<double>(a.count + b.count - 2);
            double pooled = std::sqrt(pooled_var > 1e-30 ? pooled_var : 1e-30);
            double sep = std::fabs(a.mean - b.mean) / pooled;
            if (worst < 0.0 || sep < worst) worst = sep;
        }
    return worst < 0.0 ? 0.0 : worst;
}

}  // namespace hal
