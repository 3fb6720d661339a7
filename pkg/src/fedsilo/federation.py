"""Weighted-average federated training over disjoint shards of one table.

Each round: broadcast the global weights, let every site run the local
optimizer on its own shard from that starting point, then average the
local results weighted by shard size. Sites never exchange raw data, only
weight vectors. With privacy enabled, every site draws one objective
perturbation per run (not per round) and keeps minimizing that same
perturbed objective across rounds; the global weights stay unperturbed
averages of the sites' releases.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset
from .errors import DivergenceError, ValidationError
from .models import LossKind, objective
from .optimizer import OptimizerConfig, has_converged, minimize
from .privacy import (
    PerturbationVector,
    PrivacyParams,
    make_perturbation,
    validate_preconditions,
)
from .seeding import derive_rng, derive_seed, seed_sequence


@dataclass(frozen=True)
class PartitionStrategy:
    """iid: near-equal shards. skewed: power-law shard sizes (Pareto draws
    with exponent alpha), each shard at least max(2, 1% of n)."""

    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in ("iid", "skewed"):
            raise ValidationError("kind", f"unknown partition kind {self.kind!r}")
        if self.kind == "iid":
            if self.alpha is not None:
                raise ValidationError("alpha", "iid partition takes no alpha")
        elif self.alpha is None or not (np.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValidationError("alpha", f"alpha must be > 0, got {self.alpha}")

    @staticmethod
    def iid_equal() -> "PartitionStrategy":
        return PartitionStrategy("iid")

    @staticmethod
    def size_skewed(alpha: float = 1.5) -> "PartitionStrategy":
        return PartitionStrategy("skewed", alpha)

    @staticmethod
    def parse(text: str, alpha: float | None = None) -> "PartitionStrategy":
        key = text.strip().lower()
        if key == "iid":
            return PartitionStrategy.iid_equal()
        if key == "skewed":
            return PartitionStrategy.size_skewed(1.5 if alpha is None else alpha)
        raise ValidationError("partition", f"unknown partition {text!r}; use iid or skewed")

    @property
    def label(self) -> str:
        if self.kind == "iid":
            return "iid"
        return f"skewed(alpha={self.alpha!r})"


@dataclass(frozen=True)
class FederationConfig:
    num_sites: int = 10
    rounds: int = 10
    partition: PartitionStrategy = PartitionStrategy.iid_equal()
    optimizer: OptimizerConfig = OptimizerConfig()
    privacy: PrivacyParams | None = None
    master_seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.num_sites, (int, np.integer)) and self.num_sites >= 1):
            raise ValidationError(
                "num_sites", f"num_sites must be >= 1, got {self.num_sites}"
            )
        if not (isinstance(self.rounds, (int, np.integer)) and self.rounds >= 1):
            raise ValidationError("rounds", f"rounds must be >= 1, got {self.rounds}")
        if not isinstance(self.master_seed, (int, np.integer)) or self.master_seed < 0:
            raise ValidationError(
                "master_seed", f"master_seed must be a non-negative int, got {self.master_seed}"
            )


@dataclass(frozen=True)
class Site:
    index: int
    shard: Dataset
    perturbation: PerturbationVector | None = None


@dataclass(frozen=True)
class SiteUpdate:
    """What crosses the wire after a local round: weights and count only."""

    site: int
    weights: np.ndarray
    sample_count: int
    local_loss: float


@dataclass(frozen=True)
class RoundLog:
    round_index: int
    weights: np.ndarray
    global_loss: float
    site_losses: tuple[float, ...]


def partition_indices(n: int, cfg: FederationConfig) -> list[np.ndarray]:
    """Assign row indices to shards; each shard keeps source order."""
    if n < cfg.num_sites:
        raise ValidationError(
            "num_sites", f"cannot split {n} examples across {cfg.num_sites} sites"
        )
    rng = derive_rng(cfg.master_seed, "partition")
    perm = rng.permutation(n)
    strat = cfg.partition
    if strat.kind == "iid":
        base, extra = divmod(n, cfg.num_sites)
        sizes = [base + (1 if i < extra else 0) for i in range(cfg.num_sites)]
    else:
        minimum = max(2, n // 100)
        if minimum * cfg.num_sites > n:
            raise ValidationError(
                "num_sites",
                f"{n} examples cannot give {cfg.num_sites} shards of >= {minimum}",
            )
        draws = rng.pareto(strat.alpha, cfg.num_sites) + 1.0
        spare = n - minimum * cfg.num_sites
        raw = spare * draws / draws.sum()
        extra = np.floor(raw).astype(int)
        # distribute the rounding leftover by largest fractional remainder
        leftover = spare - int(extra.sum())
        order = np.argsort(-(raw - extra), kind="stable")
        extra[order[:leftover]] += 1
        sizes = [minimum + int(e) for e in extra]
    out = []
    start = 0
    for size in sizes:
        out.append(np.sort(perm[start : start + size]))
        start += size
    return out


def partition(data: Dataset, cfg: FederationConfig) -> list[Dataset]:
    return [data.subset(idx) for idx in partition_indices(len(data), cfg)]


def local_train(
    site: Site,
    global_w: np.ndarray,
    kind: LossKind,
    lam: float,
    cfg: OptimizerConfig,
) -> SiteUpdate:
    """One site's local round, starting from the broadcast weights."""
    try:
        result = minimize(site.shard, kind, lam, site.perturbation, global_w, cfg)
    except DivergenceError as exc:
        raise DivergenceError(
            f"site {site.index}: {exc}", epoch=exc.epoch, site=site.index
        ) from exc
    if result.loss_history:
        local_loss = result.loss_history[-1]
    else:
        local_loss = objective(global_w, site.shard, kind, lam, site.perturbation)
    return SiteUpdate(
        site=site.index,
        weights=result.weights,
        sample_count=len(site.shard),
        local_loss=local_loss,
    )


def aggregate(updates: list[SiteUpdate]) -> np.ndarray:
    """Sample-count-weighted average, reduced in site-index order."""
    if not updates:
        raise ValidationError("updates", "aggregate needs at least one update")
    ordered = sorted(updates, key=lambda u: u.site)
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.site == cur.site:
            raise ValidationError("updates", f"duplicate site index {cur.site}")
    dim = ordered[0].weights.shape[0]
    total = 0
    for u in ordered:
        if u.weights.ndim != 1 or u.weights.shape[0] != dim:
            raise ValidationError(
                "updates", f"site {u.site}: weights have dim {u.weights.shape}, expected ({dim},)"
            )
        if u.sample_count < 1:
            raise ValidationError(
                "updates", f"site {u.site}: sample_count must be >= 1, got {u.sample_count}"
            )
        total += u.sample_count
    out = np.zeros(dim)
    for u in ordered:
        out += (u.sample_count / total) * u.weights
    return out


def run_federation(
    data: Dataset,
    kind: LossKind,
    lam: float,
    cfg: FederationConfig,
) -> tuple[np.ndarray, list[RoundLog]]:
    """Run the full protocol; returns final weights and per-round logs.

    The logged global_loss is the unperturbed objective on the full input
    table; site_losses are the (perturbed, when DP is on) local objectives
    each site actually minimized. The run stops early when the global loss
    meets the optimizer's tolerance, so len(logs) < rounds means the
    convergence stop fired.
    """
    if not (np.isfinite(lam) and lam > 0.0):
        raise ValidationError("lam", f"lam must be > 0, got {lam}")
    shards = partition(data, cfg)
    sites: list[Site] = []
    for index, shard in enumerate(shards):
        perturbation = None
        if cfg.privacy is not None:
            validate_preconditions(shard, cfg.privacy, kind).raise_if_failed()
            perturbation = make_perturbation(
                cfg.privacy,
                kind,
                n=len(shard),
                dim=data.dim,
                seed=seed_sequence(cfg.master_seed, "noise", index),
            )
        sites.append(Site(index=index, shard=shard, perturbation=perturbation))

    w = np.zeros(data.dim)
    logs: list[RoundLog] = []
    global_losses: list[float] = []
    for round_index in range(1, cfg.rounds + 1):
        updates = []
        for site in sites:
            local_cfg = replace(
                cfg.optimizer,
                seed=derive_seed(
                    cfg.master_seed, "local-opt", cfg.optimizer.seed,
                    site.index, round_index,
                ),
            )
            updates.append(local_train(site, w, kind, lam, local_cfg))
        w = aggregate(updates)
        global_loss = objective(w, data, kind, lam, None)
        snapshot = w.copy()
        snapshot.flags.writeable = False
        logs.append(
            RoundLog(
                round_index=round_index,
                weights=snapshot,
                global_loss=global_loss,
                site_losses=tuple(u.local_loss for u in updates),
            )
        )
        global_losses.append(global_loss)
        if has_converged(global_losses, cfg.optimizer.tolerance):
            break
    w.flags.writeable = False
    return w, logs
