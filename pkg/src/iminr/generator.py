"""Conditional GMM stage: length intervals, EM fitting, and novel sampling.

For every action class the training sequence lengths are covered by greedily
grown intervals, each holding a minimum population; a diagonal-covariance
Gaussian mixture is then fitted per (action, interval) to reparameterized
draws of the sequence codes. Sampling a new motion picks the mixture for the
requested (action, length), draws a new sequence code, and decodes it with
the optimized action-code mean.

Component collapse (a mixture component sitting on top of a single training
representation, which would replay training data) is detected by a distance
threshold and handled by refitting with fresh initializations, then by
reducing the component count.
"""

import json
from dataclasses import dataclass

import numpy as np

from .codes import compose_code, sample_code
from .decoder import temporal_embedding
from .errors import (
    DegenerateData,
    FormatVersionMismatch,
    InsufficientData,
    IoError,
    LengthOutOfRange,
)
from .kinematics import MotionSequence
from .seeding import stream

GMM_INDEX_VERSION = 1

_LL_SLACK = 1e-8  # numerical slack for the EM monotonicity assertion
_VAR_FLOOR = 1e-10


@dataclass(frozen=True, order=True)
class LengthInterval:
    """Inclusive sequence-length bounds."""

    t_left: int
    t_right: int

    def __post_init__(self):
        if self.t_left > self.t_right:
            raise ValueError(f"empty interval [{self.t_left}, {self.t_right}]")

    def contains(self, length: int) -> bool:
        return self.t_left <= length <= self.t_right

    @property
    def width(self) -> int:
        return self.t_right - self.t_left


@dataclass
class GaussianMixture:
    """Diagonal-covariance mixture: weights (K,), means (K, S), variances (K, S)."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        k = self.weights.shape[0]
        if self.means.shape[0] != k or self.variances.shape != self.means.shape:
            raise ValueError("component count disagrees between fields")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")
        if np.any(self.variances <= 0):
            raise ValueError("variances must be strictly positive")

    @property
    def component_count(self) -> int:
        return self.weights.shape[0]

    def log_likelihood(self, x) -> float:
        return float(np.sum(_logsumexp(self._log_joint(x), axis=1)))

    def _log_joint(self, x) -> np.ndarray:
        """log(weight_k) + log N(x_n; mean_k, var_k), shape (N, K)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        const = -0.5 * np.sum(np.log(2.0 * np.pi * self.variances), axis=1)
        sq = (
            (x**2) @ (0.5 / self.variances).T
            - x @ (self.means / self.variances).T
            + 0.5 * np.sum(self.means**2 / self.variances, axis=1)
        )
        return np.log(self.weights) + const - sq

    def sample(self, rng) -> np.ndarray:
        k = rng.choice(self.component_count, p=self.weights)
        return self.means[k] + np.sqrt(self.variances[k]) * rng.normal(size=self.means.shape[1])


def _logsumexp(a, axis):
    peak = np.max(a, axis=axis, keepdims=True)
    return (peak + np.log(np.sum(np.exp(a - peak), axis=axis, keepdims=True))).squeeze(axis)


@dataclass
class BetaSampleSet:
    """Reparameterized draws of one sequence's code, tagged for conditioning."""

    sequence_id: str
    action: int
    length: int
    samples: np.ndarray  # (draws, S)


def collect_beta_samples(codebook, dataset, draws: int = 50, rng=None) -> list:
    """Draw ``draws`` reparameterized samples per training sequence code."""
    rng = rng if rng is not None else stream(0, "beta-samples")
    out = []
    for seq in dataset.sequences:
        code = codebook.sequence_code(seq.id)
        noise = rng.normal(size=(draws, code.dim))
        samples = np.stack([sample_code(code, n) for n in noise])
        out.append(BetaSampleSet(seq.id, seq.action, seq.length, samples))
    return out


def fit_intervals(lengths, d_min: int = 10, p_min: int = 8, d_overlap: int = 2) -> list:
    """Greedy left-to-right interval cover of a length multiset.

    Intervals start d_min - d_overlap wide and grow rightward until they hold
    at least p_min lengths (capped at max(lengths)); consecutive intervals
    share d_overlap of range. The final interval, which may run out of data
    on the right, is repaired by extending leftward until populated.
    """
    lengths = np.asarray(sorted(lengths), dtype=np.int64)
    if d_overlap < 0 or d_min <= d_overlap:
        raise ValueError("need d_min > d_overlap >= 0")
    if p_min < 1:
        raise ValueError("p_min must be >= 1")
    if lengths.size < p_min:
        raise InsufficientData(f"{lengths.size} lengths cannot populate p_min={p_min}")

    def population(lo, hi):
        return int(np.count_nonzero((lengths >= lo) & (lengths <= hi)))

    t_max = int(lengths[-1])
    intervals = []
    t_left = int(lengths[0])
    while True:
        t_right = t_left + d_min - d_overlap
        p = population(t_left, t_right)
        while p < p_min and t_right < t_max:
            t_right += 1
            p = population(t_left, t_right)
        intervals.append(LengthInterval(t_left, t_right))
        if t_right >= t_max:
            break
        t_left = t_right - d_overlap
    last = intervals[-1]
    t_left, t_right = last.t_left, last.t_right
    p = population(t_left, t_right)
    while p < p_min and t_left > 0:
        t_left -= 1
        p = population(t_left, t_right)
    intervals[-1] = LengthInterval(t_left, t_right)
    return intervals


def em_fit(samples, k: int, rng, max_iter: int = 500, tol: float = 1e-6):
    """Fit a diagonal GMM by EM; returns (mixture, per-iteration log-likelihoods).

    The log-likelihood is asserted non-decreasing at every iteration (within
    numerical slack); iteration stops when the gain falls below ``tol``.
    """
    x = np.asarray(samples, dtype=np.float64)
    n, dim = x.shape
    if k < 1 or k > n:
        raise InsufficientData(f"cannot fit {k} components to {n} samples")
    picks = rng.choice(n, size=k, replace=False)
    means = x[picks].copy()
    variances = np.tile(np.maximum(x.var(axis=0), _VAR_FLOOR), (k, 1))
    weights = np.full(k, 1.0 / k)
    gmm = GaussianMixture(weights, means, variances)

    history = []
    prev = -np.inf
    for _ in range(max_iter):
        log_joint = gmm._log_joint(x)
        log_norm = _logsumexp(log_joint, axis=1)
        ll = float(np.sum(log_norm))
        assert ll >= prev - _LL_SLACK * max(1.0, abs(prev)), "EM log-likelihood decreased"
        history.append(ll)
        if ll - prev < tol:
            break
        prev = ll
        resp = np.exp(log_joint - log_norm[:, None])
        nk = resp.sum(axis=0) + 1e-300
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        variances = np.maximum((resp.T @ (x**2)) / nk[:, None] - means**2, _VAR_FLOOR)
        weights = weights / weights.sum()
        gmm = GaussianMixture(weights, means, variances)
    return gmm, history


def detect_collapse(gmm: GaussianMixture, samples, threshold_ratio: float = 0.1) -> bool:
    """True when any component mean sits within ratio * mean(|sample|) of a sample."""
    x = np.asarray(samples, dtype=np.float64)
    threshold = threshold_ratio * float(np.mean(np.linalg.norm(x, axis=1)))
    for mean in gmm.means:
        dists = np.linalg.norm(x - mean, axis=1)
        if np.any(dists < threshold):
            return True
    return False


def fit_gmm(
    samples,
    k_init: int = 15,
    collapse_threshold_ratio: float = 0.1,
    max_retries: int = 100,
    rng=None,
    max_iter: int = 500,
    tol: float = 1e-6,
) -> GaussianMixture:
    """EM fitting with collapse detection, random restarts, and K backoff.

    Tries up to ``max_retries`` random initializations per component count; on
    persistent collapse the component count is decremented down to 1. Raises
    DegenerateData when even a single component collapses, which happens when
    the samples carry essentially no spread.
    """
    x = np.asarray(samples, dtype=np.float64)
    rng = rng if rng is not None else stream(0, "gmm-fit")
    k = min(int(k_init), x.shape[0])
    while k >= 1:
        for _ in range(max_retries):
            gmm, _ = em_fit(x, k, rng, max_iter=max_iter, tol=tol)
            if not detect_collapse(gmm, x, collapse_threshold_ratio):
                return gmm
        k -= 1
    raise DegenerateData(
        "all component counts down to K=1 produced collapsed mixtures; "
        "samples are too concentrated"
    )


@dataclass
class ConditionalGmmIndex:
    """Per-action interval lists with one fitted mixture per interval."""

    entries: dict  # action -> list[(LengthInterval, GaussianMixture)]

    def intervals(self, action: int) -> list:
        return [interval for interval, _ in self.entries.get(action, [])]

    def lookup(self, action: int, length: int):
        """The mixture whose interval contains the length; smallest width wins."""
        candidates = [
            (interval, gmm)
            for interval, gmm in self.entries.get(action, [])
            if interval.contains(length)
        ]
        if not candidates:
            raise LengthOutOfRange(
                f"length {length} is outside every interval of action {action}"
            )
        return min(candidates, key=lambda pair: (pair[0].width, pair[0].t_left))


def fit_conditional_gmm_index(
    sample_sets,
    d_min: int = 10,
    p_min: int = 8,
    d_overlap: int = 2,
    k_init: int = 15,
    collapse_threshold_ratio: float = 0.1,
    max_retries: int = 100,
    seed: int = 0,
    threads: int = 1,
) -> ConditionalGmmIndex:
    """Fit one mixture per (action, length interval) from tagged beta draws."""
    by_action = {}
    for s in sample_sets:
        by_action.setdefault(s.action, []).append(s)

    jobs = []
    for action in sorted(by_action):
        sets = by_action[action]
        intervals = fit_intervals(
            [s.length for s in sets], d_min=d_min, p_min=p_min, d_overlap=d_overlap
        )
        for pos, interval in enumerate(intervals):
            members = [s.samples for s in sets if interval.contains(s.length)]
            stacked = np.concatenate(members, axis=0)
            jobs.append((action, pos, interval, stacked))

    def fit_one(job):
        action, pos, interval, stacked = job
        rng = stream(seed, "gmm", action, pos)
        return fit_gmm(
            stacked,
            k_init=k_init,
            collapse_threshold_ratio=collapse_threshold_ratio,
            max_retries=max_retries,
            rng=rng,
        )

    if threads > 1 and len(jobs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            fitted = list(pool.map(fit_one, jobs))
    else:
        fitted = [fit_one(job) for job in jobs]

    entries = {}
    for (action, _, interval, _), gmm in zip(jobs, fitted):
        entries.setdefault(action, []).append((interval, gmm))
    return ConditionalGmmIndex(entries)


def sample_beta(index: ConditionalGmmIndex, action: int, target_length: int, rng) -> np.ndarray:
    """Draw a new sequence code for (action, target_length)."""
    _, gmm = index.lookup(action, target_length)
    return gmm.sample(rng)


def generate_motion(
    decoder,
    codebook,
    index: ConditionalGmmIndex,
    action: int,
    target_length: int,
    rng,
    embedding,
    motion_id: str = None,
) -> MotionSequence:
    """Decode a novel motion of exactly target_length frames for an action.

    The sequence code is drawn from the conditional mixture; the action code
    is the optimized mean (deterministic at generation time). Frames are
    decoded at absolute times 0 .. target_length-1.
    """
    if target_length < 1:
        raise LengthOutOfRange("target length must be >= 1")
    beta_new = sample_beta(index, action, target_length, rng)
    alpha = codebook.action_codes[action].mean
    code = compose_code(alpha, beta_new, codebook.composition)
    taus = temporal_embedding(np.arange(target_length, dtype=np.float64), embedding)
    rows = np.concatenate([np.tile(code, (target_length, 1)), taus], axis=1)
    frames = decoder.forward(rows)
    if motion_id is None:
        motion_id = f"gen-a{action}-t{target_length}"
    return MotionSequence(motion_id, action, frames)


def reconstruct_motion(decoder, codebook, sequence_id: str, length: int, embedding) -> MotionSequence:
    """Decode a training sequence from its optimized code means."""
    beta = codebook.sequence_code(sequence_id)
    action = None
    # the caller knows the action; look it up from the codebook pairing below
    raise NotImplementedError


def save_gmm_index(index: ConditionalGmmIndex, path):
    """Structured-text index: schema version plus per-(action, interval) arrays."""
    payload = {
        "version": GMM_INDEX_VERSION,
        "actions": {
            str(action): [
                {
                    "t_left": interval.t_left,
                    "t_right": interval.t_right,
                    "weights": gmm.weights.tolist(),
                    "means": gmm.means.tolist(),
                    "variances": gmm.variances.tolist(),
                }
                for interval, gmm in pairs
            ]
            for action, pairs in sorted(index.entries.items())
        },
    }
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write GMM index {path}: {exc}") from None


def load_gmm_index(path) -> ConditionalGmmIndex:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read GMM index {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatVersionMismatch(f"corrupt GMM index: {exc}") from None
    if not isinstance(payload, dict) or payload.get("version") != GMM_INDEX_VERSION:
        raise FormatVersionMismatch(
            f"unsupported GMM index version {payload.get('version')!r}"
        )
    entries = {}
    for action_str, items in payload["actions"].items():
        pairs = []
        for item in items:
            pairs.append(
                (
                    LengthInterval(int(item["t_left"]), int(item["t_right"])),
                    GaussianMixture(
                        np.asarray(item["weights"]),
                        np.asarray(item["means"]),
                        np.asarray(item["variances"]),
                    ),
                )
            )
        entries[int(action_str)] = pairs
    return ConditionalGmmIndex(entries)
