#include "trace/window_weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace trace {

WindowWeights WindowWeights::uniform(int windows) {
    WindowWeights w;
    w.eta.assign(static_cast<std::size_t>(windows), 1.0 / windows);
    w.c_tilde.assign(static_cast<std::size_t>(windows), 0.0);
    w.beta = 0.0;
    return w;
}

std::vector<double> conditional_entropy_per_window(std::span<const TrajectoryView> trajectories,
                                                   std::span<const int> labels) {
    if (trajectories.empty()) {
        throw std::invalid_argument("conditional_entropy_per_window: empty data");
    }
    if (trajectories.size() != labels.size()) {
        throw std::invalid_argument("conditional_entropy_per_window: label count mismatch");
    }
    const int H = trajectories.front().windows;
    const int K = trajectories.front().behaviors;
    const double n = static_cast<double>(trajectories.size());
    std::vector<double> out(static_cast<std::size_t>(H), 0.0);
    for (int h = 0; h < H; ++h) {
        // state code -> (count, positives)
        std::map<std::uint64_t, std::pair<double, double>> table;
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            const auto& v = trajectories[i];
            if (v.windows != H || v.behaviors != K || v.mask[static_cast<std::size_t>(h)] == 0) {
                throw std::invalid_argument("conditional_entropy_per_window: trajectories must be fully observed");
            }
            std::uint64_t code = 0;
            for (int k = 0; k < K; ++k) code |= static_cast<std::uint64_t>(v.state(h, k)) << k;
            auto& cell = table[code];
            cell.first += 1.0;
            cell.second += labels[i] != 0 ? 1.0 : 0.0;
        }
        double entropy = 0.0;
        for (const auto& [code, cell] : table) {
            const double p1 = cell.second / cell.first;
            double hs = 0.0;
            if (p1 > 0.0) hs -= p1 * std::log(p1);
            if (p1 < 1.0) hs -= (1.0 - p1) * std::log(1.0 - p1);
            entropy += (cell.first / n) * hs;
        }
        out[static_cast<std::size_t>(h)] = entropy;
    }
    return out;
}

WindowWeights compute_window_weights(std::span<const double> entropies, double beta) {
    if (entropies.empty()) {
        throw std::invalid_argument("compute_window_weights: no windows");
    }
    const int H = static_cast<int>(entropies.size());
    const double max_entropy = *std::max_element(entropies.begin(), entropies.end());
    WindowWeights w;
    w.beta = beta;
    w.c_tilde.resize(entropies.size());
    w.eta.resize(entropies.size());
    for (std::size_t i = 0; i < entropies.size(); ++i) {
        if (!std::isfinite(entropies[i]) || entropies[i] < 0.0) {
            throw std::invalid_argument("compute_window_weights: entropies must be finite and non-negative");
        }
        w.c_tilde[i] = max_entropy > 0.0 ? entropies[i] / max_entropy : 0.0;
    }
    double total = 0.0;
    for (int h = 1; h <= H; ++h) {
        const auto i = static_cast<std::size_t>(h - 1);
        w.eta[i] = std::exp(-static_cast<double>(h) / H - beta * w.c_tilde[i]) / static_cast<double>(H - h + 1);
        total += w.eta[i];
    }
    for (auto& e : w.eta) e /= total;
    return w;
}

void save_window_weights(const std::filesystem::path& path, const WindowWeights& w) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("window weights: cannot write " + path.string());
    char buf[128];
    std::snprintf(buf, sizeof buf, "# beta=%.17g\n", w.beta);
    out << buf << "# h c_tilde eta\n";
    for (int h = 0; h < w.windows(); ++h) {
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", h + 1, w.c_tilde[static_cast<std::size_t>(h)],
                      w.eta[static_cast<std::size_t>(h)]);
        out << buf;
    }
}

WindowWeights load_window_weights(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("window weights: cannot open " + path.string());
    WindowWeights w;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# beta=", 0) == 0) {
            w.beta = std::stod(line.substr(7));
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        int h = 0;
        double c = 0.0, e = 0.0;
        if (!(row >> h >> c >> e) || h != w.windows() + 1) {
            throw std::runtime_error("window weights: malformed line '" + line + "'");
        }
        w.c_tilde.push_back(c);
        w.eta.push_back(e);
    }
    if (w.eta.empty()) throw std::runtime_error("window weights: no windows in " + path.string());
    return w;
}

}  // namespace trace
