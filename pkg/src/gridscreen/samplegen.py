"""Labeled-corpus generation: perturb loads, solve full OPF, extract features.

Congestion labels are never persisted; they are recomputed from the stored
flows for whatever loading threshold is requested, so one dataset serves
every threshold without skew.

Randomness is counter-based (Philox keyed by run seed and sample index), so
sample i is reproducible in isolation and generation parallelizes without
changing the result.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dcopf import full_monitored_set, solve_opf
from .netcase import BUS_TYPE_GENERATOR, BUS_TYPE_LOAD, BUS_TYPE_SLACK, Network, to_graph

NODE_FEATURE_WIDTH = 7
EDGE_FEATURE_WIDTH = 2

_MASK64 = (1 << 64) - 1
_MAX_REDRAWS_PER_SAMPLE = 1000


def derive_seed(seed: int, index: int) -> int:
    """128-bit Philox key: run seed in the high word, sample index in the low."""
    return ((seed & _MASK64) << 64) | (index & _MASK64)


def _generator(key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key))


def perturb_load(base_mw: np.ndarray, magnitude: float, rng_seed: int) -> np.ndarray:
    """Scale each bus load by an independent Uniform(1-m, 1+m) factor."""
    if not 0 <= magnitude < 1:
        raise ValueError(f"magnitude must be in [0, 1), got {magnitude}")
    base = np.asarray(base_mw, dtype=float)
    return base * _generator(rng_seed).uniform(1 - magnitude, 1 + magnitude, base.size)


def extract_features(network: Network, load_mw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-bus and per-branch feature matrices.

    Node columns: load MW, summed max generation, summed min generation,
    incident-branch count, and a one-hot bus type (load, generator, slack).
    Edge columns: reactance pu, rating MW.  Rows follow internal order.
    """
    load = np.asarray(load_mw, dtype=float)
    if load.shape != (network.num_buses,):
        raise ValueError(f"load length {load.size} != number of buses {network.num_buses}")
    topo = to_graph(network)
    node = np.zeros((network.num_buses, NODE_FEATURE_WIDTH))
    node[:, 0] = load
    for gen in network.generators:
        bi = network.bus_index[gen.bus]
        node[bi, 1] += gen.p_max_mw
        node[bi, 2] += gen.p_min_mw
    node[:, 3] = topo.degree
    onehot_col = {BUS_TYPE_LOAD: 4, BUS_TYPE_GENERATOR: 5, BUS_TYPE_SLACK: 6}
    for bi, bus in enumerate(network.buses):
        node[bi, onehot_col[bus.bus_type]] = 1.0
    edge = np.column_stack([network.branch_reactance(), network.branch_rating()])
    return node, edge


def label_sample(flows_mw: np.ndarray, network: Network, threshold: float) -> np.ndarray:
    """Binary per-branch labels: 1 where |flow| >= threshold * rating (inclusive)."""
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    flows = np.asarray(flows_mw, dtype=float)
    if flows.shape != (network.num_branches,):
        raise ValueError(f"flows length {flows.size} != number of branches {network.num_branches}")
    return (np.abs(flows) >= threshold * network.branch_rating()).astype(int)


@dataclass
class Sample:
    sample_id: int
    load_mw: np.ndarray
    node_features: np.ndarray
    edge_features: np.ndarray
    flows_mw: np.ndarray
    objective: float
    solve_seconds: float


@dataclass
class Dataset:
    network_fingerprint: str
    seed: int
    magnitude: float
    count: int
    base_mva: float
    redraws: int = 0
    samples: list[Sample] = field(default_factory=list)


def _generate_one(network: Network, magnitude: float, seed: int, index: int) -> tuple[Sample, int]:
    """Draw loads for one sample, redrawing from the same stream until feasible."""
    base = network.base_load()
    gen = _generator(derive_seed(seed, index))
    monitored = full_monitored_set(network)
    redraws = 0
    while True:
        load = base * gen.uniform(1 - magnitude, 1 + magnitude, base.size)
        t0 = time.perf_counter()
        sol = solve_opf(network, load, monitored)
        elapsed = time.perf_counter() - t0
        if sol.status == "optimal":
            node, edge = extract_features(network, load)
            return Sample(
                sample_id=index,
                load_mw=load,
                node_features=node,
                edge_features=edge,
                flows_mw=sol.flows,
                objective=sol.objective,
                solve_seconds=elapsed,
            ), redraws
        redraws += 1
        if redraws >= _MAX_REDRAWS_PER_SAMPLE:
            raise RuntimeError(f"sample {index}: no feasible load after {redraws} redraws")


def generate_dataset(
    network: Network,
    count: int,
    magnitude: float,
    seed: int,
    threads: int = 1,
) -> Dataset:
    """Solve full OPF for `count` perturbed load profiles.

    Infeasible draws are discarded and redrawn (the total is recorded in the
    dataset metadata).  Fails fast if the unperturbed base case is already
    infeasible.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not 0 <= magnitude < 1:
        raise ValueError(f"magnitude must be in [0, 1), got {magnitude}")
    base_sol = solve_opf(network, network.base_load(), full_monitored_set(network))
    if base_sol.status != "optimal":
        raise RuntimeError(f"base-case OPF is {base_sol.status}; cannot generate samples")

    dataset = Dataset(
        network_fingerprint=network.fingerprint(),
        seed=seed,
        magnitude=magnitude,
        count=count,
        base_mva=network.base_mva,
    )
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                _generate_one,
                [network] * count, [magnitude] * count, [seed] * count, range(count),
                chunksize=max(1, count // (8 * threads)),
            ))
    else:
        results = [_generate_one(network, magnitude, seed, i) for i in range(count)]
    for sample, redraws in results:
        dataset.samples.append(sample)
        dataset.redraws += redraws
    return dataset


def split_dataset(dataset: Dataset, ratios: tuple[float, float, float], seed: int) -> tuple[list[Sample], list[Sample], list[Sample]]:
    """Deterministic shuffle then contiguous split; floor sizes, remainder to train."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    n = len(dataset.samples)
    n_val = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_val - n_test
    if n_train < 1 or n_val < 1 or n_test < 1:
        raise ValueError(f"{n} samples too few for non-empty splits at ratios {ratios}")
    order = _generator(derive_seed(seed, 0)).permutation(n)
    shuffled = [dataset.samples[i] for i in order]
    return (
        shuffled[:n_train],
        shuffled[n_train:n_train + n_val],
        shuffled[n_train + n_val:],
    )


@dataclass
class Normalizer:
    """Per-column z-score statistics, fitted on the training split only."""

    node_mean: np.ndarray
    node_std: np.ndarray
    edge_mean: np.ndarray
    edge_std: np.ndarray

    STD_FLOOR = 1e-8

    def apply_node(self, features: np.ndarray) -> np.ndarray:
        return (features - self.node_mean) / self.node_std

    def apply_edge(self, features: np.ndarray) -> np.ndarray:
        return (features - self.edge_mean) / self.edge_std

    def to_dict(self) -> dict:
        return {
            "node_mean": self.node_mean.tolist(),
            "node_std": self.node_std.tolist(),
            "edge_mean": self.edge_mean.tolist(),
            "edge_std": self.edge_std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(
            node_mean=np.asarray(d["node_mean"], dtype=float),
            node_std=np.asarray(d["node_std"], dtype=float),
            edge_mean=np.asarray(d["edge_mean"], dtype=float),
            edge_std=np.asarray(d["edge_std"], dtype=float),
        )


def fit_normalizer(train: list[Sample]) -> Normalizer:
    if not train:
        raise ValueError("cannot fit a normalizer on an empty split")
    node = np.vstack([s.node_features for s in train])
    edge = np.vstack([s.edge_features for s in train])
    return Normalizer(
        node_mean=node.mean(axis=0),
        node_std=np.maximum(node.std(axis=0), Normalizer.STD_FLOOR),
        edge_mean=edge.mean(axis=0),
        edge_std=np.maximum(edge.std(axis=0), Normalizer.STD_FLOOR),
    )


def apply_normalizer(normalizer: Normalizer, node_features: np.ndarray, edge_features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return normalizer.apply_node(node_features), normalizer.apply_edge(edge_features)


# ---------------------------------------------------------------------------
# JSON Lines persistence
# ---------------------------------------------------------------------------

DATASET_FORMAT_VERSION = 1


def write_dataset(dataset: Dataset, path) -> None:
    """One header line, then one JSON object per sample (format_version 1)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = {
            "format_version": DATASET_FORMAT_VERSION,
            "network_fingerprint": dataset.network_fingerprint,
            "seed": dataset.seed,
            "magnitude": dataset.magnitude,
            "count": dataset.count,
            "base_mva": dataset.base_mva,
            "redraws": dataset.redraws,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for s in dataset.samples:
            row = {
                "sample_id": s.sample_id,
                "load_mw": s.load_mw.tolist(),
                "node_features": s.node_features.tolist(),
                "edge_features": s.edge_features.tolist(),
                "flows_mw": s.flows_mw.tolist(),
                "objective": s.objective,
                "solve_seconds": s.solve_seconds,
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise ValueError(f"{path}: empty dataset file")
        header = json.loads(header_line)
        version = header.get("format_version")
        if version != DATASET_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported dataset format_version {version!r}")
        dataset = Dataset(
            network_fingerprint=header["network_fingerprint"],
            seed=header["seed"],
            magnitude=header["magnitude"],
            count=header["count"],
            base_mva=header["base_mva"],
            redraws=header.get("redraws", 0),
        )
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            dataset.samples.append(Sample(
                sample_id=row["sample_id"],
                load_mw=np.asarray(row["load_mw"], dtype=float),
                node_features=np.asarray(row["node_features"], dtype=float),
                edge_features=np.asarray(row["edge_features"], dtype=float),
                flows_mw=np.asarray(row["flows_mw"], dtype=float),
                objective=row["objective"],
                solve_seconds=row["solve_seconds"],
            ))
    if len(dataset.samples) != dataset.count:
        raise ValueError(f"{path}: header count {dataset.count} != {len(dataset.samples)} sample lines")
    return dataset
