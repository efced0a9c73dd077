#!/usr/bin/env python3
"""Trap-resistance experiment: crawl-policy share of a self-similar host.

Simulates 1,000 leases against two hosts. Host "trap.com" mints
self-similar /page/N URLs; host "normal.com" mints fresh dissimilar paths.
Reports the trap host's share of leases and the mean weight of its queued
URLs for several p_min values, with host-uniform selection on and a
naive single-queue baseline for contrast.

Usage: python scripts/trap_resistance_sim.py [--leases 1000] [--seeds 5]
"""

from __future__ import annotations

import argparse
import random
import statistics

from uiharvest.frontier import Frontier, FrontierConfig, normalize_url


def run_policy(p_min: float, leases: int, seed: int) -> tuple[float, float]:
    frontier = Frontier(FrontierConfig(p_min=p_min), random.Random(seed))
    counters = {"trap.com": 100, "normal.com": 100}
    for i in range(8):
        frontier.enqueue(normalize_url(f"http://trap.com/page/{i}"))
        frontier.enqueue(normalize_url(f"http://normal.com/u{i}"))
    trap = 0
    for _ in range(leases):
        record = frontier.next_url()
        frontier.mark_visited(record.url)
        host = record.host
        for _ in range(2):
            counters[host] += 1
            if host == "trap.com":
                frontier.enqueue(normalize_url(f"http://trap.com/page/{counters[host]}"))
            else:
                frontier.enqueue(normalize_url(f"http://normal.com/u{counters[host]}"))
        if host == "trap.com":
            trap += 1
    trap_weights = [
        r.weight
        for r in (frontier.record(u) for u in list(frontier._records))
        if r is not None and r.state == "queued" and r.host == "trap.com"
    ]
    return trap / leases, statistics.fmean(trap_weights) if trap_weights else 0.0


def run_naive_baseline(leases: int, seed: int) -> float:
    """Single FIFO queue, no host uniformity: the trap wins by volume."""
    rng = random.Random(seed)
    queue = []
    counters = {"trap.com": 100, "normal.com": 100}
    for i in range(8):
        queue.append(("trap.com", f"/page/{i}"))
        queue.append(("normal.com", f"/u{i}"))
    trap = 0
    for _ in range(leases):
        host, _path = queue.pop(0)
        if host == "trap.com":
            trap += 1
            for _ in range(3):  # traps mint links faster
                counters[host] += 1
                queue.append((host, f"/page/{counters[host]}"))
        else:
            counters[host] += 1
            queue.append((host, f"/u{counters[host]}"))
        rng.random()
    return trap / leases


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--leases", type=int, default=1000)
    parser.add_argument("--seeds", type=int, default=5)
    args = parser.parse_args()

    print(f"{'policy':<28} {'p_min':>6} {'trap share':>11} {'queued trap weight':>19}")
    for p_min in (0.01, 0.05, 0.20):
        shares, weights = [], []
        for seed in range(args.seeds):
            share, weight = run_policy(p_min, args.leases, seed)
            shares.append(share)
            weights.append(weight)
        print(
            f"{'host-uniform + similarity':<28} {p_min:>6.2f} "
            f"{statistics.fmean(shares):>10.3f} {statistics.fmean(weights):>19.3f}"
        )
    naive = statistics.fmean(
        run_naive_baseline(args.leases, seed) for seed in range(args.seeds)
    )
    print(f"{'naive FIFO baseline':<28} {'-':>6} {naive:>10.3f} {'-':>19}")


if __name__ == "__main__":
    main()
