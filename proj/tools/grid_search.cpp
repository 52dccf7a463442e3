// Exhaustive order-up-to search on the 1W3S supply chain. The printed optimum
// is the value frozen in default_order_up_to_levels().
#include <cstdio>
#include <cstdlib>

#include "ohio/policies.hpp"

int main(int argc, char** argv) {
  const int episodes = argc > 1 ? std::atoi(argv[1]) : 20;
  std::vector<double> candidates;
  for (int s = 5; s <= 20; ++s) candidates.push_back(s);
  const auto r = ohio::order_up_to_grid_search(ohio::SupplyChainConfig::one_warehouse_three_stores(), candidates, episodes, 0);
  std::printf("evaluated %zu level vectors\nbest levels:", r.evaluated);
  for (Eigen::Index i = 0; i < r.best_levels.size(); ++i) std::printf(" %g", r.best_levels(i));
  std::printf("\nmean episode reward: %.17g\n", r.best_mean);
}
