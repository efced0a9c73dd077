"""uiharvest command line: seed, serve, work, analyze, resample, subset, pairs, stats.

Exit codes: 0 success, 1 domain error, 2 usage error. Every subcommand
accepts ``--json`` for machine-readable output.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from pathlib import Path

from . import __version__
from .analysis import DEFAULT_CLASSES, composition_stats, quality_report
from .config import ToolConfig, load_config
from .coordinator import CoordinatorServer, CrawlCoordinator
from .devices import load_profiles, profiles_by_name
from .errors import SnapshotError, UiharvestError
from .frontier import Frontier, FrontierConfig
from .pairgen import PairCorpus, generate_pairs, store_image_loader
from .resampler import (
    build_frequency_table,
    change_ratio_report,
    default_defect_filter,
    resample_split,
)
from .store import DatasetStore
from .worker import CaptureBudget, ProbeScripts, WorkerClient


def _emit(payload: dict, as_json: bool, lines: list[str] | None = None) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in lines or [json.dumps(payload)]:
            print(line)


def _read_seed_file(path: str) -> list[str]:
    urls = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            urls.append(line)
    return urls


def _frontier_from_config(cfg: ToolConfig) -> Frontier:
    seeds = _read_seed_file(cfg.seed_file) if cfg.seed_file else []
    return Frontier(
        FrontierConfig(
            p_min=cfg.p_min,
            max_queued_per_host=cfg.max_queued_per_host,
            seed_urls=seeds,
        )
    )


def cmd_seed(args, cfg: ToolConfig) -> int:
    seed_file = args.seeds or cfg.seed_file
    snapshot = args.snapshot or cfg.snapshot_path
    if not seed_file or not snapshot:
        raise UiharvestError("seed needs --seeds and --snapshot (or config values)")
    frontier = Frontier(
        FrontierConfig(
            p_min=cfg.p_min,
            max_queued_per_host=cfg.max_queued_per_host,
            seed_urls=_read_seed_file(seed_file),
        )
    )
    coordinator = CrawlCoordinator(frontier, snapshot_path=snapshot)
    coordinator.snapshot_state()
    counts = frontier.counts()
    _emit(
        {"queued": counts["queued"], "rejected_seeds": frontier.rejected_seeds,
         "snapshot": str(snapshot)},
        args.json,
        [f"seeded {counts['queued']} URLs into {snapshot} "
         f"({frontier.rejected_seeds} rejected)"],
    )
    return 0


def cmd_serve(args, cfg: ToolConfig) -> int:
    snapshot = args.snapshot or cfg.snapshot_path
    frontier_cfg = FrontierConfig(p_min=cfg.p_min, max_queued_per_host=cfg.max_queued_per_host)
    coordinator = None
    if snapshot and Path(snapshot).exists():
        try:
            coordinator = CrawlCoordinator.restore(
                snapshot, frontier_cfg, lease_ttl_secs=cfg.lease_ttl_secs
            )
        except SnapshotError:
            coordinator = None
    if coordinator is None:
        coordinator = CrawlCoordinator(
            _frontier_from_config(cfg),
            lease_ttl_secs=cfg.lease_ttl_secs,
            snapshot_path=snapshot,
        )
    server = CoordinatorServer(coordinator, cfg.coordinator_host, args.port or cfg.coordinator_port)
    print(f"coordinator listening on {server.address}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        if snapshot:
            coordinator.snapshot_state(snapshot)
    return 0


def cmd_work(args, cfg: ToolConfig) -> int:
    from .cdp import CdpSession  # deferred: needs websockets only here

    coordinator_url = args.coordinator or cfg.coordinator_address
    endpoint = args.browser_endpoint or cfg.browser_endpoint
    profiles = (
        profiles_by_name(load_profiles(args.profiles or cfg.profiles_file))
        if (args.profiles or cfg.profiles_file)
        else profiles_by_name()
    )
    probes = None
    probes_dir = args.probes or cfg.probes_dir
    if probes_dir:
        probes = ProbeScripts.load_dir(probes_dir)
    budget = CaptureBudget(
        total_secs=float(args.budget_secs or cfg.budget_total_secs),
        per_device_nav_secs=cfg.per_device_nav_secs,
    )
    store = DatasetStore(args.dataset or cfg.dataset_root, salt=cfg.salt)
    worker = WorkerClient(
        coordinator_url,
        lambda: CdpSession(endpoint),
        store,
        worker_id=args.worker_id,
        budget=budget,
        profiles=profiles,
        probes=probes,
    )
    done = worker.run(max_leases=args.max_leases)
    _emit({"leases_completed": done}, args.json, [f"completed {done} leases"])
    return 0


def _open_store(args, cfg: ToolConfig) -> DatasetStore:
    root = args.dataset or cfg.dataset_root
    return DatasetStore(root, salt=cfg.salt, create=False)


def cmd_analyze(args, cfg: ToolConfig) -> int:
    store = _open_store(args, cfg)
    corpus = list(store.iter_samples(args.split))
    report = quality_report(corpus)
    stats = composition_stats(corpus)
    payload = {
        "quality": report.to_json(),
        "composition": {
            "screens": stats.screens,
            "avg_elements": stats.avg_elements,
            "avg_visible": stats.avg_visible,
            "avg_clickable": stats.avg_clickable,
            "class_counts": dict(stats.class_counts.most_common()),
        },
    }
    Path(args.report).write_text(json.dumps(payload, indent=2, sort_keys=True))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            rows = payload["quality"]["per_screen"]
            writer.writerow(rows[0].keys())
            for row in rows:
                writer.writerow(row.values())
    _emit(
        payload["composition"],
        args.json,
        [
            f"analyzed {stats.screens} screens -> {args.report}",
            f"avg elements {stats.avg_elements:.1f}, visible {stats.avg_visible:.1f}, "
            f"clickable {stats.avg_clickable:.1f}",
        ],
    )
    return 0


def cmd_resample(args, cfg: ToolConfig) -> int:
    store = _open_store(args, cfg)
    samples = list(store.iter_samples(args.split))
    table = build_frequency_table(samples, classes=DEFAULT_CLASSES)
    rng = random.Random(args.seed)
    exclude = None if args.no_defect_filter else default_defect_filter
    chosen = resample_split(args.n, table, samples, rng, exclude=exclude)
    payload = {"name": args.name, "seed": args.seed, "sample_ids": chosen}
    Path(args.out).write_text(json.dumps(payload, indent=2))
    if args.ratio_report:
        eligible = table.labeled_ids()
        baseline = random.Random(args.seed).sample(sorted(eligible), len(chosen))
        ratios = change_ratio_report(baseline, chosen, table)
        Path(args.ratio_report).write_text(json.dumps(ratios.to_json(), indent=2))
        csv_path = Path(args.ratio_report).with_suffix(".csv")
        with open(csv_path, "w", newline="") as fh:
            csv.writer(fh).writerows(ratios.to_csv_rows())
    _emit(
        {"selected": len(chosen), "out": str(args.out)},
        args.json,
        [f"resampled {len(chosen)} samples -> {args.out}"],
    )
    return 0


def cmd_subset(args, cfg: ToolConfig) -> int:
    store = _open_store(args, cfg)
    chosen = store.make_subset(args.name, args.n, random.Random(args.seed))
    if args.out:
        Path(args.out).write_text(
            json.dumps({"name": args.name, "sample_ids": chosen}, indent=2)
        )
    _emit(
        {"name": args.name, "selected": len(chosen)},
        args.json,
        [f"subset {args.name}: {len(chosen)} train samples"],
    )
    return 0


def cmd_pairs(args, cfg: ToolConfig) -> int:
    store = _open_store(args, cfg)
    profiles = (
        profiles_by_name(load_profiles(args.profiles))
        if args.profiles
        else profiles_by_name()
    )
    corpus = PairCorpus(
        store.iter_samples(args.split), store_image_loader(store), profiles
    )
    result = generate_pairs(
        corpus,
        args.count,
        random.Random(args.seed),
        filter_near_duplicates=(args.split == "test"),
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        for pair in result.pairs:
            fh.write(json.dumps(pair.to_json()) + "\n")
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    _emit(
        {"pairs": len(result.pairs), "warnings": result.warnings, "out": str(args.out)},
        args.json,
        [f"wrote {len(result.pairs)} pairs -> {args.out}"],
    )
    return 0


def cmd_stats(args, cfg: ToolConfig) -> int:
    store = _open_store(args, cfg)
    payload = store.stats()
    _emit(
        payload,
        args.json,
        [
            f"samples: {payload['samples']} "
            f"(train {payload['per_split']['train']}, val {payload['per_split']['val']}, "
            f"test {payload['per_split']['test']}), domains: {payload['domains']}"
        ],
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uiharvest",
        description="Crawl web UIs and build screenshot+metadata datasets.",
    )
    parser.add_argument("--version", action="version", version=f"uiharvest {__version__}")
    parser.add_argument("-c", "--config", help="TOML config path (or $UIHARVEST_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = add("seed", cmd_seed, help="load a seed URL list into a coordinator snapshot")
    p.add_argument("--seeds", help="text file with one URL per line")
    p.add_argument("--snapshot", help="coordinator snapshot to write")

    p = add("serve", cmd_serve, help="run the crawl coordinator")
    p.add_argument("--snapshot", help="state snapshot to restore/persist")
    p.add_argument("--port", type=int, help="listen port (overrides config)")

    p = add("work", cmd_work, help="run one crawl worker")
    p.add_argument("--coordinator", help="coordinator base URL")
    p.add_argument("--browser-endpoint", help="browser remote-debugging URL")
    p.add_argument("--profiles", help="device profile JSON file")
    p.add_argument("--probes", help="directory with the three probe scripts")
    p.add_argument("--budget-secs", type=float, help="per-URL time budget")
    p.add_argument("--dataset", help="dataset root to write samples into")
    p.add_argument("--worker-id", default="worker-1")
    p.add_argument("--max-leases", type=int, default=None)

    p = add("analyze", cmd_analyze, help="composition and quality reports")
    p.add_argument("--dataset", help="dataset root")
    p.add_argument("--report", required=True, help="output JSON path")
    p.add_argument("--csv", help="optional per-screen CSV path")
    p.add_argument("--split", default=None, choices=("train", "val", "test"))

    p = add("resample", cmd_resample, help="class-balanced subset of a split")
    p.add_argument("--dataset", help="dataset root")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="subset JSON path")
    p.add_argument("--name", default="resampled")
    p.add_argument("--split", default="train", choices=("train", "val", "test"))
    p.add_argument("--no-defect-filter", action="store_true")
    p.add_argument("--ratio-report", help="write change-ratio JSON (+ .csv) here")

    p = add("subset", cmd_subset, help="uniform random subset of the train split")
    p.add_argument("--dataset", help="dataset root")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", required=True)
    p.add_argument("--out", help="optional subset JSON path")

    p = add("pairs", cmd_pairs, help="generate same/different screen pairs")
    p.add_argument("--dataset", help="dataset root")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSONL path")
    p.add_argument("--profiles", help="device profile JSON file")

    p = add("stats", cmd_stats, help="dataset counters")
    p.add_argument("--dataset", help="dataset root")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.fn(args, cfg)
    except UiharvestError as exc:
        if getattr(args, "json", False):
            print(json.dumps({"error": str(exc)}), file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
