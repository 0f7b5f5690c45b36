#include "consonance/voice_leading.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace consonance {

namespace {

constexpr int kMax = kPitchClasses;

// Minimum-cost perfect assignment on an n x n integer matrix (1-based
// potentials formulation of the Hungarian method).
int min_assignment(const std::array<std::array<int, kMax>, kMax>& cost, int n) {
  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  std::array<int, kMax + 1> u{}, v{}, match{}, way{};
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::array<int, kMax + 1> minv;
    std::array<bool, kMax + 1> used{};
    minv.fill(kInf);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      int delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const int cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  int total = 0;
  for (int j = 1; j <= n; ++j) total += cost[match[j] - 1][j - 1];
  return total;
}

}  // namespace

int min_voice_leading(PitchClassSet x, PitchClassSet y) {
  const std::vector<int> a = x.members();
  const std::vector<int> b = y.members();
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());

  std::array<int, kMax> mu_a, mu_b;
  mu_a.fill(kPitchClasses);
  mu_b.fill(kPitchClasses);
  std::array<std::array<int, kMax>, kMax> d{};
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      d[i][j] = pc_distance(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
      mu_a[i] = std::min(mu_a[i], d[i][j]);
      mu_b[j] = std::min(mu_b[j], d[i][j]);
    }
  }

  int base = 0;
  for (int i = 0; i < m; ++i) base += mu_a[i];
  for (int j = 0; j < n; ++j) base += mu_b[j];

  const int k = std::max(m, n);
  std::array<std::array<int, kMax>, kMax> reduced{};
  bool any_negative = false;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      reduced[i][j] = std::min(0, d[i][j] - mu_a[i] - mu_b[j]);
      any_negative |= reduced[i][j] < 0;
    }
  }
  if (!any_negative) return base;
  return base + min_assignment(reduced, k);
}

}  // namespace consonance
