#pragma once

// Naive reference implementations used to cross-check the library. They are
// written directly from the formulas with no shared code paths.

#include <cmath>
#include <vector>

#include "talign/frame.hpp"

namespace oracle {

using Grid = std::vector<std::vector<std::vector<double>>>;  // [y][x][c]

inline Grid to_grid(const talign::Frame& f) {
    Grid g(f.height(), std::vector<std::vector<double>>(f.width(), std::vector<double>(f.channels())));
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            for (int c = 0; c < f.channels(); ++c) g[y][x][c] = f.at(c, x, y);
    return g;
}

struct Accuracy {
    // [y][x][tap], tap = (dy + 1) * 3 + (dx + 1)
    std::vector<std::vector<std::vector<double>>> weights;
    Grid reweighted;
};

inline Accuracy accuracy(const talign::Frame& reference, const talign::Frame& aligned, double eps = 1e-8) {
    const Grid r = to_grid(reference), a = to_grid(aligned);
    const int h = aligned.height(), w = aligned.width(), nc = aligned.channels();
    auto norm = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double e : v) s += e * e;
        return std::sqrt(s);
    };
    Accuracy out;
    out.weights.assign(h, std::vector<std::vector<double>>(w, std::vector<double>(9)));
    out.reweighted = Grid(h, std::vector<std::vector<double>>(w, std::vector<double>(nc, 0.0)));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::vector<double>& v0 = r[y][x];
            std::vector<double> expsim(9);
            double total = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = std::min(std::max(y + dy, 0), h - 1);
                    const int xx = std::min(std::max(x + dx, 0), w - 1);
                    const std::vector<double>& v = a[yy][xx];
                    double dot = 0.0;
                    for (int c = 0; c < nc; ++c) dot += v[c] * v0[c];
                    const double s = dot / ((norm(v) + eps) * (norm(v0) + eps));
                    expsim[(dy + 1) * 3 + (dx + 1)] = std::exp(s);
                    total += std::exp(s);
                }
            }
            for (int tap = 0; tap < 9; ++tap) out.weights[y][x][tap] = expsim[tap] / total;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = std::min(std::max(y + dy, 0), h - 1);
                    const int xx = std::min(std::max(x + dx, 0), w - 1);
                    for (int c = 0; c < nc; ++c) {
                        out.reweighted[y][x][c] += out.weights[y][x][(dy + 1) * 3 + (dx + 1)] * a[yy][xx][c];
                    }
                }
            }
        }
    }
    return out;
}

inline std::vector<Grid> consistency(const std::vector<talign::Frame>& set, double alpha) {
    std::vector<Grid> grids;
    for (const auto& f : set) grids.push_back(to_grid(f));
    const int h = set[0].height(), w = set[0].width(), nc = set[0].channels();
    std::vector<Grid> out(set.size(), Grid(h, std::vector<std::vector<double>>(w, std::vector<double>(nc))));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < nc; ++c) {
                double mean = 0.0;
                for (const auto& g : grids) mean += g[y][x][c];
                mean /= static_cast<double>(grids.size());
                for (std::size_t k = 0; k < grids.size(); ++k) {
                    const double d = grids[k][y][x][c] - mean;
                    out[k][y][x][c] = std::exp(alpha * d * d);
                }
            }
        }
    }
    return out;
}

inline Grid arw(const talign::Frame& reference, const std::vector<talign::Frame>& set, double alpha,
                double reference_weight) {
    const Grid r = to_grid(reference);
    const std::vector<Grid> gains = consistency(set, alpha);
    const int h = reference.height(), w = reference.width(), nc = reference.channels();
    Grid num(h, std::vector<std::vector<double>>(w, std::vector<double>(nc)));
    Grid den = num;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < nc; ++c) {
                num[y][x][c] = reference_weight * r[y][x][c];
                den[y][x][c] = reference_weight;
            }
    for (std::size_t k = 0; k < set.size(); ++k) {
        const Accuracy acc = accuracy(reference, set[k]);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < nc; ++c) {
                    num[y][x][c] += acc.reweighted[y][x][c] * gains[k][y][x][c];
                    den[y][x][c] += gains[k][y][x][c];
                }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < nc; ++c) num[y][x][c] /= den[y][x][c];
    return num;
}

inline double max_abs_diff(const Grid& g, const talign::Frame& f) {
    double worst = 0.0;
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            for (int c = 0; c < f.channels(); ++c) worst = std::max(worst, std::abs(g[y][x][c] - f.at(c, x, y)));
    return worst;
}

}  // namespace oracle
