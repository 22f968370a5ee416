"""Regenerate the pinned value-network parameters shipped with the package."""

import time

from followahead.dataset import generate_dataset
from followahead.qnet import TrainConfig, default_params_path, save_params, train


def main():
    t0 = time.perf_counter()
    data = generate_dataset(200_000, seed=0)
    res = train(data, TrainConfig(seed=0))
    save_params(res.params, default_params_path())
    print(f"loss {res.loss_history[0]:.4f} -> {res.loss_history[-100:].mean():.4f} "
          f"in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
