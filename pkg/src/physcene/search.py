"""Test-time optimization: best-of-K selection and CMA-ES refinement.

The scalar objective for both is ``iou_full_sequence - epe_full_sequence``
(IoU in [0,1] minus EPE in pixels, literally; ``epe_scale=True`` divides the
EPE by the image diagonal instead, default off).

CMA-ES is the standard (mu/mu_w, lambda) strategy: rank-mu weighted
recombination, rank-one plus rank-mu covariance update, and cumulative
step-size adaptation, with hyperparameters as the usual functions of the
problem dimension. The search runs in a normalized [0,1]^d box: every
non-frozen slot of ``flatten_parameters(init)`` is mapped through its
sampling range (extended, if needed, to contain the init value). Sampled
points are clipped to the box, un-flattened (which re-normalizes the
quaternion), validated, and scored; invalid or diverging candidates score
-inf. Deterministic given the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, SceneError, TagError
from .metrics import EvalReport, ReferenceArtifacts, evaluate, score_renders, worst_case_report
from .scene import (
    ParamVector,
    SceneConfig,
    extract_answer,
    flatten_parameters,
    parse_config,
    unflatten_parameters,
    validate,
)

EIGENVALUE_FLOOR = 1e-12
DEFAULT_SIGMA0 = 0.15


# ---------------------------------------------------------------------------
# fitness


def report_fitness(report: EvalReport, epe_scale: bool = False, image_diag: float = math.hypot(480, 320)) -> float:
    epe = report.epe_full_sequence / image_diag if epe_scale else report.epe_full_sequence
    return report.iou_full_sequence - epe


def fitness(config: SceneConfig, ref: ReferenceArtifacts, epe_scale: bool = False) -> float:
    """iou_full - epe_full for a simulable config, -inf for one that is not."""
    try:
        _, iou_full, _, epe_full = score_renders(config, ref)
    except SceneError:
        return float("-inf")
    diag = math.hypot(*ref.image_size)
    return iou_full - (epe_full / diag if epe_scale else epe_full)


# ---------------------------------------------------------------------------
# best-of-K


@dataclass(frozen=True)
class CandidateScore:
    index: int
    iou_full: float
    epe_full: float
    fitness: float
    soft_weight: float | None = None


@dataclass(frozen=True)
class BestOfKResult:
    best_index: int
    scores: tuple[CandidateScore, ...]

    @property
    def best_at_1(self) -> float:
        """Mean fitness over all candidates (the average-sample protocol)."""
        return float(np.mean([s.fitness for s in self.scores]))

    @property
    def best_at_k(self) -> float:
        """Max fitness (the pick-the-best protocol)."""
        return max(s.fitness for s in self.scores)

    @property
    def best(self) -> CandidateScore:
        return self.scores[self.best_index]


def score_candidate_text(text: str, ref: ReferenceArtifacts) -> EvalReport:
    """Wire-format candidate -> report; malformed candidates get the worst case."""
    try:
        _, answer = extract_answer(text)
        config = parse_config(answer)
    except (TagError, SceneError):
        return worst_case_report(ref)
    return evaluate(config, ref)


def best_of_k(candidate_texts, ref: ReferenceArtifacts, epe_scale: bool = False) -> BestOfKResult:
    """Score each candidate text and pick the argmax (ties: lowest index)."""
    if not candidate_texts:
        raise DomainError("need at least one candidate")
    scores = []
    for i, text in enumerate(candidate_texts):
        report = score_candidate_text(text, ref)
        scores.append(
            CandidateScore(
                index=i,
                iou_full=report.iou_full_sequence,
                epe_full=report.epe_full_sequence,
                fitness=report_fitness(report, epe_scale),
            )
        )
    best_index = max(range(len(scores)), key=lambda i: (scores[i].fitness, -i))
    return BestOfKResult(best_index=best_index, scores=tuple(scores))


# ---------------------------------------------------------------------------
# soft preference weighting and the PRO loss


def soft_preference_weights(scores, tau: float) -> np.ndarray:
    """Softmax of scores/tau with max subtraction; adding a constant is a no-op."""
    if tau <= 0.0:
        raise DomainError("tau must be positive")
    s = np.asarray(scores, dtype=np.float64)
    if s.size < 2:
        raise DomainError("need at least two scores")
    z = s / tau
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


def pro_loss(rewards, weights) -> float:
    """Reward-weighted cross-entropy: -sum_i w_i * log softmax(rewards)_i."""
    r = np.asarray(rewards, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if r.shape != w.shape:
        raise DomainError("rewards and weights must have equal length")
    if abs(float(w.sum()) - 1.0) > 1e-6:
        raise DomainError("weights must sum to 1")
    z = r - r.max()
    log_softmax = z - math.log(float(np.exp(z).sum()))
    return float(-(w * log_softmax).sum())


# ---------------------------------------------------------------------------
# CMA-ES


@dataclass(frozen=True)
class CmaEsState:
    mean: np.ndarray
    covariance: np.ndarray
    sigma: float
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int
    popsize: int
    frozen_mask: np.ndarray


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float  # best-ever, non-decreasing
    mean_fitness: float
    sigma: float

    def to_record(self) -> str:
        return (
            f"generation={self.generation} best_fitness={self.best_fitness!r} "
            f"mean_fitness={self.mean_fitness!r} sigma={self.sigma!r}"
        )


class CmaEs:
    """(mu/mu_w, lambda) CMA-ES maximizer over [0,1]^d with clip-to-box."""

    def __init__(self, x0, sigma0: float, popsize: int, rng: np.random.Generator, frozen_mask=None):
        x0 = np.asarray(x0, dtype=np.float64)
        d = x0.size
        if d == 0:
            raise DomainError("no free parameters to search")
        if popsize < 2:
            raise DomainError("population size must be at least 2")
        self.dim = d
        self.popsize = popsize
        self.rng = rng
        self.mean = x0.copy()
        self.sigma = float(sigma0)
        self.frozen_mask = (
            np.zeros(d, dtype=bool) if frozen_mask is None else np.asarray(frozen_mask, dtype=bool)
        )

        mu = popsize // 2
        raw = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        self.weights = raw / raw.sum()
        self.mu = mu
        self.mu_eff = 1.0 / float((self.weights ** 2).sum())

        self.c_sigma = (self.mu_eff + 2.0) / (d + self.mu_eff + 5.0)
        self.d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((self.mu_eff - 1.0) / (d + 1.0)) - 1.0) + self.c_sigma
        self.c_c = (4.0 + self.mu_eff / d) / (d + 4.0 + 2.0 * self.mu_eff / d)
        self.c_1 = 2.0 / ((d + 1.3) ** 2 + self.mu_eff)
        self.c_mu = min(
            1.0 - self.c_1,
            2.0 * (self.mu_eff - 2.0 + 1.0 / self.mu_eff) / ((d + 2.0) ** 2 + self.mu_eff),
        )
        self.chi_n = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))

        self.p_sigma = np.zeros(d)
        self.p_c = np.zeros(d)
        self.C = np.eye(d)
        self.generation = 0
        self._decompose()

    def _decompose(self) -> None:
        self.C = (self.C + self.C.T) / 2.0
        eigvals, eigvecs = np.linalg.eigh(self.C)
        eigvals = np.maximum(eigvals, EIGENVALUE_FLOOR)
        assert eigvals.min() >= EIGENVALUE_FLOOR  # PD floor contract
        self.C = (eigvecs * eigvals) @ eigvecs.T
        self._B = eigvecs
        self._D = np.sqrt(eigvals)

    @property
    def state(self) -> CmaEsState:
        return CmaEsState(
            mean=self.mean.copy(),
            covariance=self.C.copy(),
            sigma=self.sigma,
            p_sigma=self.p_sigma.copy(),
            p_c=self.p_c.copy(),
            generation=self.generation,
            popsize=self.popsize,
            frozen_mask=self.frozen_mask.copy(),
        )

    def ask(self) -> np.ndarray:
        z = self.rng.standard_normal((self.popsize, self.dim))
        y = z @ (self._B * self._D).T
        x = self.mean[None, :] + self.sigma * y
        return np.clip(x, 0.0, 1.0)

    def tell(self, xs: np.ndarray, fitnesses) -> None:
        """Rank by fitness (descending; ties by sample index) and update."""
        xs = np.asarray(xs, dtype=np.float64)
        fit = np.asarray(fitnesses, dtype=np.float64)
        order = sorted(range(len(fit)), key=lambda i: (-fit[i], i))
        elite = xs[order[: self.mu]]

        old_mean = self.mean
        self.mean = self.weights @ elite
        delta = (self.mean - old_mean) / self.sigma

        inv_sqrt = (self._B / self._D) @ self._B.T
        self.p_sigma = (1.0 - self.c_sigma) * self.p_sigma + math.sqrt(
            self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff
        ) * (inv_sqrt @ delta)
        self.generation += 1
        expected = math.sqrt(1.0 - (1.0 - self.c_sigma) ** (2.0 * self.generation))
        h_sigma = float(np.linalg.norm(self.p_sigma)) / expected < (1.4 + 2.0 / (self.dim + 1.0)) * self.chi_n
        self.p_c = (1.0 - self.c_c) * self.p_c + (
            math.sqrt(self.c_c * (2.0 - self.c_c) * self.mu_eff) * delta if h_sigma else 0.0
        )

        y_elite = (elite - old_mean[None, :]) / self.sigma
        rank_mu = (self.weights[:, None] * y_elite).T @ y_elite
        correction = (1.0 - h_sigma) * self.c_c * (2.0 - self.c_c)
        self.C = (
            (1.0 - self.c_1 - self.c_mu) * self.C
            + self.c_1 * (np.outer(self.p_c, self.p_c) + correction * self.C)
            + self.c_mu * rank_mu
        )
        self.sigma *= math.exp(
            (self.c_sigma / self.d_sigma) * (float(np.linalg.norm(self.p_sigma)) / self.chi_n - 1.0)
        )
        self._decompose()


def _slot_box(vector: ParamVector, ranges):
    """Per-free-slot (lo, width) covering both the range and the init value."""
    from .datagen import SamplingRanges, slot_bounds

    if ranges is None:
        ranges = SamplingRanges()
    bounds = slot_bounds(vector.layout, ranges)
    free = np.nonzero(~vector.frozen_mask)[0]
    lows, widths = [], []
    for idx in free:
        lo, hi = bounds[idx]
        v = float(vector.values[idx])
        lo, hi = min(lo, v), max(hi, v)
        lows.append(lo)
        widths.append(max(hi - lo, 1e-9))
    return free, np.asarray(lows), np.asarray(widths)


def cmaes_search(
    init: SceneConfig,
    ref: ReferenceArtifacts,
    popsize: int = 128,
    generations: int = 100,
    seed: int = 0,
    sigma0: float = DEFAULT_SIGMA0,
    ranges=None,
    frozen_mask=None,
    epe_scale: bool = False,
    on_generation=None,
) -> tuple[SceneConfig, list[GenerationStats]]:
    """Refine a config against reference renders; returns (best config, log).

    Object shapes and names are structural (carried by the layout, not the
    vector), so they are preserved for every seed. ``frozen_mask`` may pin
    additional slots of ``flatten_parameters(init)``.
    """
    violations = validate(init)
    if violations:
        raise ConfigError(f"init config invalid: {violations[0].path}: {violations[0].rule}")
    vector = flatten_parameters(init)
    if frozen_mask is not None:
        vector.frozen_mask = np.asarray(frozen_mask, dtype=bool)
    free, lows, widths = _slot_box(vector, ranges)

    x0 = (vector.values[free] - lows) / widths
    rng = np.random.default_rng(seed)
    es = CmaEs(np.clip(x0, 0.0, 1.0), sigma0, popsize, rng, frozen_mask=vector.frozen_mask)

    def to_config(x_norm: np.ndarray) -> SceneConfig:
        values = vector.values.copy()
        values[free] = lows + x_norm * widths
        return unflatten_parameters(ParamVector(values, vector.layout, vector.frozen_mask))

    best_config = init
    best_fit = fitness(init, ref, epe_scale)
    log: list[GenerationStats] = []
    for gen in range(generations):
        xs = es.ask()
        fits = np.empty(len(xs))
        for i, x in enumerate(xs):
            cfg = to_config(x)
            fits[i] = fitness(cfg, ref, epe_scale)
            if fits[i] > best_fit:
                best_fit = float(fits[i])
                best_config = cfg
        es.tell(xs, fits)
        stats = GenerationStats(
            generation=gen,
            best_fitness=best_fit,
            mean_fitness=float(np.mean(fits)),
            sigma=es.sigma,
        )
        log.append(stats)
        if on_generation is not None:
            on_generation(stats)
    return best_config, log
