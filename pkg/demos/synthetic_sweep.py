"""Generate a small synthetic city, build the three indexes and sweep sigma and k."""
import sys

from sstruss.baselines import build_baseline_index
from sstruss.bench import Grid, run_grid, to_csv
from sstruss.datagen import GenConfig, gen_network
from sstruss.index import IndexConfig, build_index
from sstruss.metrics import RoadDistanceCache


def main(n: int = 2000):
    net = gen_network(GenConfig(n_road=n, n_users=n, extent=20.0 * (n / 10_000) ** 0.5, rng_seed=1))
    cache = RoadDistanceCache(net.road)
    cfg = IndexConfig()
    indexes = {
        "engine": build_index(net, cfg, cache),
        "sindex": build_baseline_index(net, "social", cfg, cache),
        "rindex": build_baseline_index(net, "spatial", cfg, cache),
    }
    grid = Grid(sweeps={"sigma": [0.5, 1, 2, 3, 5], "k": [2, 3, 5, 7, 10]})
    sys.stdout.write(to_csv(run_grid(net, indexes, grid, cache=cache)))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 2000)
