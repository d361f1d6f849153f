#pragma once

#include <algorithm>
#include <vector>

#include "slidereg/image.hpp"

namespace slidereg {

struct ComponentLabels {
    std::vector<int> labels; // -1 background, else component id in scan order
    std::vector<size_t> areas;
    int count = 0;
};

// 4-connected components, ids assigned in raster-scan order of first contact.
inline ComponentLabels label_components(const Mask& m) {
    ComponentLabels out;
    out.labels.assign(static_cast<size_t>(m.width) * m.height, -1);
    std::vector<size_t> stack;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            size_t idx = static_cast<size_t>(y) * m.width + x;
            if (!m.bits[idx] || out.labels[idx] >= 0) continue;
            int id = out.count++;
            size_t area = 0;
            stack.push_back(idx);
            out.labels[idx] = id;
            while (!stack.empty()) {
                size_t cur = stack.back();
                stack.pop_back();
                ++area;
                int cx = static_cast<int>(cur % m.width);
                int cy = static_cast<int>(cur / m.width);
                const int nx[4] = {cx - 1, cx + 1, cx, cx};
                const int ny[4] = {cy, cy, cy - 1, cy + 1};
                for (int i = 0; i < 4; ++i) {
                    if (nx[i] < 0 || nx[i] >= m.width || ny[i] < 0 || ny[i] >= m.height) continue;
                    size_t nidx = static_cast<size_t>(ny[i]) * m.width + nx[i];
                    if (m.bits[nidx] && out.labels[nidx] < 0) {
                        out.labels[nidx] = id;
                        stack.push_back(nidx);
                    }
                }
            }
            out.areas.push_back(area);
        }
    }
    return out;
}

// Keeps the large-area group of components: areas sorted descending, split at
// the largest adjacent gap. A zero maximum gap (all areas equal) keeps
// everything. If the kept group is smaller than min_keep, the next-largest
// components are added until min_keep is reached.
inline Mask largest_gap_select(const Mask& m, int min_keep = 1) {
    require(min_keep >= 1, errc::argument, "min_keep must be >= 1");
    ComponentLabels comp = label_components(m);
    if (comp.count == 0) fail(errc::empty_mask, "largest_gap_select on an empty mask");

    std::vector<int> order(static_cast<size_t>(comp.count));
    for (int i = 0; i < comp.count; ++i) order[static_cast<size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return comp.areas[static_cast<size_t>(a)] > comp.areas[static_cast<size_t>(b)]; });

    int keep = comp.count;
    if (comp.count > 1) {
        size_t best_gap = 0;
        int split = comp.count; // split after index `split-1`
        for (int i = 0; i + 1 < comp.count; ++i) {
            size_t gap = comp.areas[static_cast<size_t>(order[static_cast<size_t>(i)])] -
                         comp.areas[static_cast<size_t>(order[static_cast<size_t>(i + 1)])];
            if (gap > best_gap) {
                best_gap = gap;
                split = i + 1;
            }
        }
        keep = (best_gap == 0) ? comp.count : split;
    }
    keep = std::min(std::max(keep, min_keep), comp.count);

    std::vector<char> selected(static_cast<size_t>(comp.count), 0);
    for (int i = 0; i < keep; ++i) selected[static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;

    Mask out(m.width, m.height);
    for (size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = (comp.labels[i] >= 0 && selected[static_cast<size_t>(comp.labels[i])]) ? 1 : 0;
    return out;
}

} // namespace slidereg
