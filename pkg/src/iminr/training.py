"""Training: reconstruction + KL objective, alternating updates, checkpoints.

One training iteration touches a mini-batch of sequences twice. Step 1
updates the batch's sequence codes and the action codes of their classes
against a frozen decoder; step 2 updates the decoder against frozen codes.
Each step draws fresh reparameterization noise and a fresh temporal
mini-batch of absolute frame indices per sequence, so the same code always
reconstructs frame t through the embedding of the same absolute t.

All randomness inside an epoch comes from a stream derived from
``(seed, "train-epoch", epoch)``; a run resumed from a checkpoint therefore
replays an uninterrupted run exactly.
"""

import io
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .codes import (
    CodeBook,
    VariationalCode,
    compose_code,
    compose_code_backward,
    kl_divergence,
    kl_divergence_gradients,
    sample_code,
    sample_code_backward,
)
from .decoder import (
    AdamState,
    MlpDecoder,
    TemporalEmbeddingConfig,
    adam_step,
    build_decoder,
    temporal_embedding,
)
from .errors import (
    EmptyDataset,
    EmptyTimeSubset,
    FormatVersionMismatch,
    IoError,
    TopologyMismatch,
    UnknownSequence,
)
from .kinematics import SkeletonTopology, fk_backward, fk_positions
from .seeding import stream, stream_digest

CHECKPOINT_MAGIC = b"IMINR1"
CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    kl_weight: float = 1e-5
    lr_decoder: float = 1e-3
    lr_codes: float = 1e-3
    epochs: int = 10000
    temporal_minibatch_size: int = 5
    batch_size: int = 32
    composition: str = "concat"
    init_logvar: float = 1.0
    seed: int = 0
    root_loss_weight: float = 1.0

    def __post_init__(self):
        for name in ("lr_decoder", "lr_codes", "epochs", "temporal_minibatch_size", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.kl_weight < 0 or self.root_loss_weight < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.composition not in ("concat", "add"):
            raise ValueError(f"unknown composition mode {self.composition!r}")


@dataclass
class DecoderArchitecture:
    """Decoder layout; the published default reproduces 1,399,147 parameters."""

    hidden_sizes: tuple = (1000, 500, 500, 200, 100)
    tau_dim: int = 256
    tau_base: float = 10000.0
    alpha_dim: int = 128
    beta_dim: int = 128

    def __post_init__(self):
        self.hidden_sizes = tuple(int(s) for s in self.hidden_sizes)

    def code_dim(self, composition: str) -> int:
        if composition == "concat":
            return self.alpha_dim + self.beta_dim
        if self.alpha_dim != self.beta_dim:
            raise ValueError("additive composition needs alpha_dim == beta_dim")
        return self.beta_dim

    def input_dim(self, composition: str) -> int:
        return self.code_dim(composition) + self.tau_dim

    def embedding(self) -> TemporalEmbeddingConfig:
        return TemporalEmbeddingConfig(dim=self.tau_dim, base=self.tau_base)


@dataclass
class ReconstructionResult:
    loss: float
    code_grad: np.ndarray
    param_grads: list


def reconstruction_loss(
    seq,
    code_sample,
    dec: MlpDecoder,
    topo: SkeletonTopology,
    time_subset,
    embedding: TemporalEmbeddingConfig,
    root_loss_weight: float = 1.0,
    target_positions=None,
) -> ReconstructionResult:
    """Pose-parameter + joint-position error, averaged over the time subset.

    Per selected frame t the loss adds the squared error of the rotation
    parameters, the squared root-translation error scaled by
    ``root_loss_weight``, and the squared error of all joint world positions
    obtained through forward kinematics. Returns the loss together with its
    exact gradients w.r.t. the composed code and all decoder parameters.
    """
    t = np.asarray(time_subset, dtype=np.int64)
    if t.size == 0:
        raise EmptyTimeSubset("time_subset must contain at least one frame index")
    if np.any(t < 0) or np.any(t >= seq.length):
        raise EmptyTimeSubset(f"time indices out of range for length {seq.length}")
    p = topo.joint_count
    if seq.frames.shape[1] != topo.pose_dim:
        raise TopologyMismatch("sequence pose dimension disagrees with topology")

    targets = seq.frames[t]
    taus = temporal_embedding(t.astype(np.float64), embedding)
    code_sample = np.asarray(code_sample, dtype=np.float64)
    rows = np.concatenate([np.tile(code_sample, (t.size, 1)), taus], axis=1)
    out, cache = dec.forward(rows, want_cache=True)

    diff = out - targets
    rot = diff[:, : 6 * p]
    root = diff[:, 6 * p :]
    pos_hat, fk_cache = fk_positions(out, topo)
    if target_positions is None:
        target_positions = fk_positions(targets, topo)[0]
    dpos = pos_hat - target_positions

    m = float(t.size)
    loss = (
        np.sum(rot**2) + root_loss_weight * np.sum(root**2) + np.sum(dpos**2)
    ) / m

    grad_out = np.empty_like(diff)
    grad_out[:, : 6 * p] = (2.0 / m) * rot
    grad_out[:, 6 * p :] = (2.0 * root_loss_weight / m) * root
    grad_out += fk_backward((2.0 / m) * dpos, fk_cache, topo)

    param_grads, grad_rows = dec.backward(cache, grad_out)
    code_grad = grad_rows[:, : code_sample.size].sum(axis=0)
    return ReconstructionResult(float(loss), code_grad, param_grads)


def total_loss(seq, codebook: CodeBook, dec, cfg: TrainConfig, rng, topo, embedding) -> float:
    """Per-sequence objective over all frames: reconstruction + kl_weight * KL.

    Draws one reparameterized sample for the action code and one for the
    sequence code; the KL term covers the composed code, i.e. KL(alpha) +
    KL(beta) thanks to the block-diagonal covariance.
    """
    beta = codebook.sequence_code(seq.id)
    if seq.action not in codebook.action_codes:
        raise UnknownSequence(f"no action code for class {seq.action}")
    alpha = codebook.action_codes[seq.action]
    a = sample_code(alpha, rng.normal(size=alpha.dim))
    b = sample_code(beta, rng.normal(size=beta.dim))
    code = compose_code(a, b, codebook.composition)
    rec = reconstruction_loss(
        seq, code, dec, topo, np.arange(seq.length), embedding, cfg.root_loss_weight
    )
    kl = kl_divergence(alpha) + kl_divergence(beta)
    return rec.loss + cfg.kl_weight * kl


@dataclass
class EpochStats:
    epoch: int
    rec_loss: float
    kl_loss: float
    total_loss: float


class Trainer:
    """Mutable training state with the two alternating update steps exposed."""

    def __init__(self, dataset, cfg: TrainConfig, arch: DecoderArchitecture):
        if not dataset.sequences:
            raise EmptyDataset("cannot train on an empty dataset")
        self.dataset = dataset
        self.cfg = cfg
        self.arch = arch
        self.topo = dataset.topology
        self.embedding = arch.embedding()
        self.sequences = list(dataset.sequences)
        self.ids = [s.id for s in self.sequences]
        actions = sorted({s.action for s in self.sequences})
        self.decoder = build_decoder(
            arch.hidden_sizes,
            arch.input_dim(cfg.composition),
            self.topo.pose_dim,
            seed=stream(cfg.seed, "decoder-init").integers(0, 2**63),
        )
        self.codebook = CodeBook.initialize(
            self.ids,
            actions,
            beta_dim=arch.beta_dim,
            alpha_dim=arch.alpha_dim,
            composition=cfg.composition,
            init_logvar=cfg.init_logvar,
        )
        self.decoder_adam = AdamState(self.decoder.parameters(), lr=cfg.lr_decoder)
        self.code_adams = {}
        for sid in self.ids:
            c = self.codebook.sequence_codes[sid]
            self.code_adams["seq", sid] = AdamState([c.mean, c.log_variance], lr=cfg.lr_codes)
        for z in actions:
            c = self.codebook.action_codes[z]
            self.code_adams["act", z] = AdamState([c.mean, c.log_variance], lr=cfg.lr_codes)
        self.epoch = 0
        self._target_positions = {}

    # -- helpers ---------------------------------------------------------

    def _targets_for(self, seq):
        cached = self._target_positions.get(seq.id)
        if cached is None:
            cached = fk_positions(seq.frames, self.topo)[0]
            self._target_positions[seq.id] = cached
        return cached

    def _draw_batch_randomness(self, batch, rng):
        """Noise and temporal subsets, drawn in fixed batch order."""
        draws = []
        tmb = self.cfg.temporal_minibatch_size
        for seq in batch:
            eps_a = rng.normal(size=self.arch.alpha_dim)
            eps_b = rng.normal(size=self.arch.beta_dim)
            m = min(tmb, seq.length)
            t = np.sort(rng.choice(seq.length, size=m, replace=False))
            draws.append((eps_a, eps_b, t))
        return draws

    def _batch_pass(self, batch, draws, want_params: bool, want_codes: bool):
        """One batched forward/backward over every (sequence, frame) row.

        Row gradients are scaled by 1/M_i so that summing a sequence's rows
        yields the gradient of its frame-averaged loss; decoder gradients
        are then divided by the batch size to form the batch mean.
        """
        p = self.topo.joint_count
        cfg = self.cfg
        mode = self.codebook.composition
        rows = []
        spans = []
        codes = []
        start = 0
        for seq, (eps_a, eps_b, t) in zip(batch, draws):
            alpha = self.codebook.action_codes[seq.action]
            beta = self.codebook.sequence_codes[seq.id]
            a = sample_code(alpha, eps_a)
            b = sample_code(beta, eps_b)
            code = compose_code(a, b, mode)
            codes.append(code)
            taus = temporal_embedding(t.astype(np.float64), self.embedding)
            rows.append(np.concatenate([np.tile(code, (t.size, 1)), taus], axis=1))
            spans.append((start, start + t.size))
            start += t.size
        x = np.concatenate(rows, axis=0)
        out, cache = self.decoder.forward(x, want_cache=True)

        targets = np.concatenate([seq.frames[d[2]] for seq, d in zip(batch, draws)], axis=0)
        target_pos = np.concatenate(
            [self._targets_for(seq)[d[2]] for seq, d in zip(batch, draws)], axis=0
        )
        diff = out - targets
        pos_hat, fk_cache = fk_positions(out, self.topo)
        dpos = pos_hat - target_pos

        scale = np.empty(x.shape[0])
        rec_losses = []
        for (s, e), seq in zip(spans, batch):
            m = float(e - s)
            scale[s:e] = 1.0 / m
            rec = (
                np.sum(diff[s:e, : 6 * p] ** 2)
                + cfg.root_loss_weight * np.sum(diff[s:e, 6 * p :] ** 2)
                + np.sum(dpos[s:e] ** 2)
            ) / m
            rec_losses.append(float(rec))

        grad_out = np.empty_like(diff)
        grad_out[:, : 6 * p] = 2.0 * diff[:, : 6 * p]
        grad_out[:, 6 * p :] = 2.0 * cfg.root_loss_weight * diff[:, 6 * p :]
        grad_out += fk_backward(2.0 * dpos, fk_cache, self.topo)
        grad_out *= scale[:, None]

        param_grads, grad_rows = self.decoder.backward(cache, grad_out)
        if want_params:
            inv_b = 1.0 / len(batch)
            param_grads = [g * inv_b for g in param_grads]
        else:
            param_grads = None

        code_grads = None
        if want_codes:
            code_dim = codes[0].size
            code_grads = [grad_rows[s:e, :code_dim].sum(axis=0) for (s, e) in spans]
        return rec_losses, param_grads, code_grads

    # -- the two alternating steps ---------------------------------------

    def code_step(self, batch, rng):
        """Update batch sequence codes and their action codes; decoder frozen."""
        cfg = self.cfg
        draws = self._draw_batch_randomness(batch, rng)
        rec_losses, _, code_grads = self._batch_pass(
            batch, draws, want_params=False, want_codes=True
        )
        alpha_acc = {}
        for seq, (eps_a, eps_b, _), g_code in zip(batch, draws, code_grads):
            g_alpha, g_beta = compose_code_backward(
                g_code, self.codebook.composition, self.arch.alpha_dim
            )
            beta = self.codebook.sequence_codes[seq.id]
            d_mean, d_lv = sample_code_backward(beta, eps_b, g_beta)
            kl_mean, kl_lv = kl_divergence_gradients(beta)
            adam_step(
                self.code_adams["seq", seq.id],
                [beta.mean, beta.log_variance],
                [d_mean + cfg.kl_weight * kl_mean, d_lv + cfg.kl_weight * kl_lv],
            )
            alpha = self.codebook.action_codes[seq.action]
            da_mean, da_lv = sample_code_backward(alpha, eps_a, g_alpha)
            ka_mean, ka_lv = kl_divergence_gradients(alpha)
            acc = alpha_acc.setdefault(
                seq.action, [np.zeros(self.arch.alpha_dim), np.zeros(self.arch.alpha_dim), 0]
            )
            acc[0] += da_mean + cfg.kl_weight * ka_mean
            acc[1] += da_lv + cfg.kl_weight * ka_lv
            acc[2] += 1
        for z in sorted(alpha_acc):
            g_mean, g_lv, n = alpha_acc[z]
            alpha = self.codebook.action_codes[z]
            adam_step(
                self.code_adams["act", z],
                [alpha.mean, alpha.log_variance],
                [g_mean / n, g_lv / n],
            )
        return rec_losses

    def decoder_step(self, batch, rng):
        """Update decoder parameters; all codes frozen. Returns loss stats."""
        draws = self._draw_batch_randomness(batch, rng)
        rec_losses, param_grads, _ = self._batch_pass(
            batch, draws, want_params=True, want_codes=False
        )
        adam_step(self.decoder_adam, self.decoder.parameters(), param_grads)
        kls = []
        for seq in batch:
            kls.append(
                kl_divergence(self.codebook.action_codes[seq.action])
                + kl_divergence(self.codebook.sequence_codes[seq.id])
            )
        return rec_losses, kls

    def run_epoch(self) -> EpochStats:
        cfg = self.cfg
        rng = stream(cfg.seed, "train-epoch", self.epoch)
        order = rng.permutation(len(self.sequences))
        rec_sum = kl_sum = 0.0
        count = 0
        for lo in range(0, order.size, cfg.batch_size):
            batch = [self.sequences[i] for i in order[lo : lo + cfg.batch_size]]
            self.code_step(batch, rng)
            rec_losses, kls = self.decoder_step(batch, rng)
            rec_sum += float(np.sum(rec_losses))
            kl_sum += float(np.sum(kls))
            count += len(batch)
        self.epoch += 1
        rec = rec_sum / count
        kl = kl_sum / count
        return EpochStats(self.epoch, rec, kl, rec + cfg.kl_weight * kl)

    def to_checkpoint(self) -> "Checkpoint":
        return Checkpoint(
            train_config=self.cfg,
            architecture=self.arch,
            epoch=self.epoch,
            decoder=self.decoder,
            codebook=self.codebook,
            decoder_adam=self.decoder_adam,
            code_adams=self.code_adams,
            sequence_meta={s.id: (s.action, s.length) for s in self.sequences},
            rng_digest=stream_digest(self.cfg.seed, "train-epoch", self.epoch),
        )

    @classmethod
    def from_checkpoint(cls, dataset, ckpt: "Checkpoint") -> "Trainer":
        trainer = cls(dataset, ckpt.train_config, ckpt.architecture)
        if set(trainer.ids) != set(ckpt.codebook.sequence_codes):
            raise UnknownSequence("dataset sequence ids disagree with the checkpoint")
        trainer.decoder = ckpt.decoder
        trainer.codebook = ckpt.codebook
        trainer.decoder_adam = ckpt.decoder_adam
        trainer.code_adams = ckpt.code_adams
        trainer.epoch = ckpt.epoch
        return trainer


@dataclass
class TrainResult:
    decoder: MlpDecoder
    codebook: CodeBook
    history: list
    checkpoint: "Checkpoint"


def train(dataset, cfg: TrainConfig, arch: DecoderArchitecture = None, resume_from=None) -> TrainResult:
    """Run the alternating scheme for cfg.epochs epochs (possibly resuming)."""
    if resume_from is not None:
        trainer = Trainer.from_checkpoint(dataset, resume_from)
        if cfg is None:
            cfg = resume_from.train_config
        trainer.cfg = cfg
    else:
        trainer = Trainer(dataset, cfg, arch or DecoderArchitecture())
    history = []
    while trainer.epoch < cfg.epochs:
        history.append(trainer.run_epoch())
    return TrainResult(trainer.decoder, trainer.codebook, history, trainer.to_checkpoint())


# -- checkpoint persistence ------------------------------------------------


@dataclass
class Checkpoint:
    train_config: TrainConfig
    architecture: DecoderArchitecture
    epoch: int
    decoder: MlpDecoder
    codebook: CodeBook
    decoder_adam: AdamState
    code_adams: dict
    sequence_meta: dict  # id -> (action, length)
    rng_digest: str


def _adam_meta(state: AdamState) -> dict:
    return {
        "lr": state.lr,
        "beta1": state.beta1,
        "beta2": state.beta2,
        "eps": state.eps,
        "step": state.step_count,
    }


def _restore_adam(meta: dict, params) -> AdamState:
    state = AdamState(params, lr=meta["lr"], beta1=meta["beta1"], beta2=meta["beta2"], eps=meta["eps"])
    state.step_count = meta["step"]
    return state


def _checkpoint_tensors(ckpt: Checkpoint):
    """Declared tensor order: decoder params, decoder Adam, codes, code Adam."""
    tensors = []

    def add(name, arr):
        tensors.append((name, np.asarray(arr, dtype=np.float64)))

    for i, w in enumerate(ckpt.decoder.weights):
        add(f"decoder/weight{i}", w)
    for i, b in enumerate(ckpt.decoder.biases):
        add(f"decoder/bias{i}", b)
    for i, m in enumerate(ckpt.decoder_adam.m):
        add(f"adam/decoder/m{i}", m)
    for i, v in enumerate(ckpt.decoder_adam.v):
        add(f"adam/decoder/v{i}", v)
    for sid in sorted(ckpt.codebook.sequence_codes):
        c = ckpt.codebook.sequence_codes[sid]
        add(f"seq/{sid}/mean", c.mean)
        add(f"seq/{sid}/logvar", c.log_variance)
        st = ckpt.code_adams["seq", sid]
        add(f"adam/seq/{sid}/m0", st.m[0])
        add(f"adam/seq/{sid}/m1", st.m[1])
        add(f"adam/seq/{sid}/v0", st.v[0])
        add(f"adam/seq/{sid}/v1", st.v[1])
    for z in sorted(ckpt.codebook.action_codes):
        c = ckpt.codebook.action_codes[z]
        add(f"act/{z}/mean", c.mean)
        add(f"act/{z}/logvar", c.log_variance)
        st = ckpt.code_adams["act", z]
        add(f"adam/act/{z}/m0", st.m[0])
        add(f"adam/act/{z}/m1", st.m[1])
        add(f"adam/act/{z}/v0", st.v[0])
        add(f"adam/act/{z}/v1", st.v[1])
    return tensors


def save_checkpoint(ckpt: Checkpoint, path):
    tensors = _checkpoint_tensors(ckpt)
    header = {
        "version": CHECKPOINT_VERSION,
        "train_config": asdict(ckpt.train_config),
        "architecture": asdict(ckpt.architecture),
        "epoch": ckpt.epoch,
        "rng_digest": ckpt.rng_digest,
        "composition": ckpt.codebook.composition,
        "adam": {
            "decoder": _adam_meta(ckpt.decoder_adam),
            "seq": {sid: _adam_meta(ckpt.code_adams["seq", sid]) for sid in sorted(ckpt.codebook.sequence_codes)},
            "act": {str(z): _adam_meta(ckpt.code_adams["act", z]) for z in sorted(ckpt.codebook.action_codes)},
        },
        "sequences": {
            sid: {"action": int(a), "length": int(t)}
            for sid, (a, t) in sorted(ckpt.sequence_meta.items())
        },
        "tensors": [{"name": name, "shape": list(arr.shape)} for name, arr in tensors],
    }
    blob = io.BytesIO()
    blob.write(CHECKPOINT_MAGIC)
    blob.write(CHECKPOINT_VERSION.to_bytes(4, "little"))
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob.write(len(header_bytes).to_bytes(8, "little"))
    blob.write(header_bytes)
    for _, arr in tensors:
        blob.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    try:
        with open(path, "wb") as fh:
            fh.write(blob.getvalue())
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from None


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read checkpoint {path}: {exc}") from None
    view = memoryview(raw)
    if len(raw) < 18 or bytes(view[:6]) != CHECKPOINT_MAGIC:
        raise FormatVersionMismatch("not a checkpoint file (bad magic)")
    version = int.from_bytes(view[6:10], "little")
    if version != CHECKPOINT_VERSION:
        raise FormatVersionMismatch(f"unsupported checkpoint version {version}")
    header_len = int.from_bytes(view[10:18], "little")
    if len(raw) < 18 + header_len:
        raise FormatVersionMismatch("truncated checkpoint header")
    try:
        header = json.loads(bytes(view[18 : 18 + header_len]).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatVersionMismatch(f"corrupt checkpoint header: {exc}") from None

    offset = 18 + header_len
    arrays = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(raw):
            raise FormatVersionMismatch(f"truncated tensor payload at {entry['name']}")
        arrays[entry["name"]] = (
            np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
            .astype(np.float64)
            .reshape(shape)
        )
        offset += nbytes
    if offset != len(raw):
        raise FormatVersionMismatch("trailing bytes after declared tensors")

    cfg = TrainConfig(**header["train_config"])
    arch_kwargs = dict(header["architecture"])
    arch_kwargs["hidden_sizes"] = tuple(arch_kwargs["hidden_sizes"])
    arch = DecoderArchitecture(**arch_kwargs)

    n_layers = len(arch.hidden_sizes) + 1
    weights = [arrays[f"decoder/weight{i}"] for i in range(n_layers)]
    biases = [arrays[f"decoder/bias{i}"] for i in range(n_layers)]
    decoder = MlpDecoder(
        weights, biases, arch.input_dim(cfg.composition), weights[-1].shape[1]
    )
    decoder_adam = _restore_adam(header["adam"]["decoder"], decoder.parameters())
    decoder_adam.m = [arrays[f"adam/decoder/m{i}"].copy() for i in range(2 * n_layers)]
    decoder_adam.v = [arrays[f"adam/decoder/v{i}"].copy() for i in range(2 * n_layers)]

    sequence_codes = {}
    code_adams = {}
    for sid in header["adam"]["seq"]:
        code = VariationalCode(arrays[f"seq/{sid}/mean"].copy(), arrays[f"seq/{sid}/logvar"].copy())
        sequence_codes[sid] = code
        st = _restore_adam(header["adam"]["seq"][sid], [code.mean, code.log_variance])
        st.m = [arrays[f"adam/seq/{sid}/m0"].copy(), arrays[f"adam/seq/{sid}/m1"].copy()]
        st.v = [arrays[f"adam/seq/{sid}/v0"].copy(), arrays[f"adam/seq/{sid}/v1"].copy()]
        code_adams["seq", sid] = st
    action_codes = {}
    for zs in header["adam"]["act"]:
        z = int(zs)
        code = VariationalCode(arrays[f"act/{z}/mean"].copy(), arrays[f"act/{z}/logvar"].copy())
        action_codes[z] = code
        st = _restore_adam(header["adam"]["act"][zs], [code.mean, code.log_variance])
        st.m = [arrays[f"adam/act/{z}/m0"].copy(), arrays[f"adam/act/{z}/m1"].copy()]
        st.v = [arrays[f"adam/act/{z}/v0"].copy(), arrays[f"adam/act/{z}/v1"].copy()]
        code_adams["act", z] = st

    codebook = CodeBook(sequence_codes, action_codes, header["composition"])
    sequence_meta = {
        sid: (meta["action"], meta["length"]) for sid, meta in header["sequences"].items()
    }
    return Checkpoint(
        train_config=cfg,
        architecture=arch,
        epoch=header["epoch"],
        decoder=decoder,
        codebook=codebook,
        decoder_adam=decoder_adam,
        code_adams=code_adams,
        sequence_meta=sequence_meta,
        rng_digest=header["rng_digest"],
    )
