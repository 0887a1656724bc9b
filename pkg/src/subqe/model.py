"""Hybrid BiLSTM+CNN quality classifier, its LSTM-only and CNN-only variants,
the classification and band-scoring losses, and a deterministic trainer.

Word embeddings are computed outside the network and stay frozen; sequences
are zero-padded to 25 tokens with zero vectors for out-of-vocabulary words.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .embeddings import EmbeddingTable
from .errors import NonFiniteLoss, ShapeMismatch
from .labeler import PROVENANCE_LABELS, LabeledPair, QeLabel
from .subtitles import BilingualPair, tokenize

CHECKPOINT_VERSION = 1
SEQ_LEN = 25

#: class index convention shared with the metrics module
CLASS_INDEX = {QeLabel.GOOD: 0, QeLabel.LOOSE: 1, QeLabel.BAD: 2}
INDEX_CLASS = {i: l for l, i in CLASS_INDEX.items()}


class Architecture(str, Enum):
    HYBRID = "hybrid"
    LSTM_ONLY = "lstm"
    CNN_ONLY = "cnn"


class Head(str, Enum):
    CLASSIFICATION = "classification"
    SCORING = "scoring"


@dataclass(frozen=True)
class ScoringBands:
    """Per-label (lower, upper) score bands partitioning [0, 1]."""

    bad: tuple[float, float] = (0.0, 0.35)
    loose: tuple[float, float] = (0.35, 0.65)
    good: tuple[float, float] = (0.65, 1.0)

    def bounds(self, label: QeLabel) -> tuple[float, float]:
        return {QeLabel.BAD: self.bad, QeLabel.LOOSE: self.loose,
                QeLabel.GOOD: self.good}[label]


@dataclass
class ModelConfig:
    embed_dim: int = 300
    seq_len: int = SEQ_LEN
    lstm_hidden: int = 32
    conv_channels: tuple[int, int] = (32, 32)
    kernel_width: int = 3
    fc_width: int = 64
    dropout_p: float = 0.3
    n_classes: int = 3
    architecture: Architecture = Architecture.HYBRID
    head: Head = Head.CLASSIFICATION
    masked_pooling: bool = True

    def __post_init__(self):
        if self.seq_len != SEQ_LEN:
            raise ValueError(f"seq_len is fixed at {SEQ_LEN}")
        self.architecture = Architecture(self.architecture)
        self.head = Head(self.head)


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 256  # production-scale runs use 8192
    max_epochs: int = 200
    loss_drop_threshold: float = 1e-3
    lr_drops: int = 2
    seed: int = 0


class _Encoder(nn.Module):
    """Two stacked bidirectional LSTM layers; per-step outputs concatenated."""

    def __init__(self, embed_dim: int, hidden: int):
        super().__init__()
        self.lstm1 = nn.LSTM(embed_dim, hidden, bidirectional=True, batch_first=True)
        self.lstm2 = nn.LSTM(2 * hidden, hidden, bidirectional=True, batch_first=True)

    def forward(self, x):
        out1, _ = self.lstm1(x)
        out2, _ = self.lstm2(out1)
        return torch.cat([out1, out2], dim=-1)  # (B, T, 4h)


class _ConvModule(nn.Module):
    """Conv1d -> BatchNorm -> ReLU -> max-pool stride 2, with position masking."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int):
        super().__init__()
        self.conv = nn.Conv1d(in_channels, out_channels, kernel, padding=kernel // 2)
        self.bn = nn.BatchNorm1d(out_channels)

    def forward(self, x, mask):
        # x: (B, C, T); mask: (B, T) with 1 on true-token positions
        x = F.relu(self.bn(self.conv(x)))
        x = F.max_pool1d(x, 2)
        mask = F.max_pool1d(mask.unsqueeze(1), 2).squeeze(1)
        return x * mask.unsqueeze(1), mask


class QeModel(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c = config
        out_dim = c.n_classes if c.head is Head.CLASSIFICATION else 1
        enc_dim = 4 * c.lstm_hidden

        if c.architecture in (Architecture.HYBRID, Architecture.LSTM_ONLY):
            self.src_encoder = _Encoder(c.embed_dim, c.lstm_hidden)
            self.tgt_encoder = _Encoder(c.embed_dim, c.lstm_hidden)

        if c.architecture is Architecture.HYBRID:
            self.convs = nn.ModuleList([
                _ConvModule(enc_dim, c.conv_channels[0], c.kernel_width),
                _ConvModule(c.conv_channels[0], c.conv_channels[1], c.kernel_width),
            ])
            flat = c.conv_channels[1] * (2 * c.seq_len // 4)
        elif c.architecture is Architecture.CNN_ONLY:
            # raw embedded sequences fused on the feature axis so kernels see
            # both sides of each position
            ch = (c.conv_channels[0], c.conv_channels[1], c.conv_channels[1])
            self.convs = nn.ModuleList([
                _ConvModule(2 * c.embed_dim, ch[0], c.kernel_width),
                _ConvModule(ch[0], ch[1], c.kernel_width),
                _ConvModule(ch[1], ch[2], c.kernel_width),
            ])
            flat = ch[2] * (c.seq_len // 8)
        else:
            self.convs = None
            flat = enc_dim * 2 * c.seq_len

        self.dropout = nn.Dropout(c.dropout_p)
        self.fc = nn.Linear(flat, c.fc_width)
        self.out = nn.Linear(c.fc_width, out_dim)

    def _mask(self, src_len, tgt_len, device):
        pos = torch.arange(SEQ_LEN, device=device)
        src_mask = (pos.unsqueeze(0) < src_len.unsqueeze(1)).float()
        tgt_mask = (pos.unsqueeze(0) < tgt_len.unsqueeze(1)).float()
        return torch.cat([src_mask, tgt_mask], dim=1)  # (B, 50)

    def encode_pair(self, src_emb, tgt_emb):
        """Sequence-axis concatenation of the two encoded sides: (B, 50, 4h)."""
        if src_emb.shape[1] != SEQ_LEN or tgt_emb.shape[1] != SEQ_LEN:
            raise ShapeMismatch(f"expected sequence length {SEQ_LEN}")
        return torch.cat([self.src_encoder(src_emb), self.tgt_encoder(tgt_emb)], dim=1)

    def _features(self, src_emb, tgt_emb, src_len, tgt_len):
        c = self.config
        mask = self._mask(src_len, tgt_len, src_emb.device)
        if not c.masked_pooling:
            mask = torch.ones_like(mask)
        if c.architecture is Architecture.HYBRID:
            x = self.encode_pair(src_emb, tgt_emb)
            x = (x * mask.unsqueeze(-1)).transpose(1, 2)
            for conv in self.convs:
                x, mask = conv(x, mask)
            flat = x.flatten(1)
        elif c.architecture is Architecture.CNN_ONLY:
            x = torch.cat([src_emb, tgt_emb], dim=-1)  # (B, 25, 2E)
            mask = torch.maximum(mask[:, :SEQ_LEN], mask[:, SEQ_LEN:])
            x = (x * mask.unsqueeze(-1)).transpose(1, 2)
            for conv in self.convs:
                x, mask = conv(x, mask)
            flat = x.flatten(1)
        else:
            x = self.encode_pair(src_emb, tgt_emb)
            flat = (x * mask.unsqueeze(-1)).flatten(1)
        return F.relu(self.fc(self.dropout(flat)))

    def forward(self, src_emb, tgt_emb, src_len, tgt_len):
        hidden = self._features(src_emb, tgt_emb, src_len, tgt_len)
        out = self.out(hidden)
        if self.config.head is Head.SCORING:
            return torch.sigmoid(out).squeeze(-1)
        return out

    def penultimate(self, src_emb, tgt_emb, src_len, tgt_len):
        """Input vector to the output layer, for external visualization."""
        return self._features(src_emb, tgt_emb, src_len, tgt_len)


def loss_classification(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(logits, labels)


def loss_scoring(scores: torch.Tensor, labels: torch.Tensor,
                 bands: ScoringBands = ScoringBands()) -> torch.Tensor:
    """Band penalty: min(0, s - lower)^2 + max(0, s - upper)^2, batch mean."""
    bounds = torch.tensor(
        [bands.bounds(INDEX_CLASS[i]) for i in range(3)],
        dtype=scores.dtype, device=scores.device,
    )
    lower = bounds[labels, 0]
    upper = bounds[labels, 1]
    return (torch.clamp(scores - lower, max=0.0) ** 2
            + torch.clamp(scores - upper, min=0.0) ** 2).mean()


def predict_scoring(score: float, bands: ScoringBands = ScoringBands()) -> QeLabel:
    if score < bands.loose[0]:
        return QeLabel.BAD
    if score < bands.good[0]:
        return QeLabel.LOOSE
    return QeLabel.GOOD


def embed_tokens(tokens: list[str], table: EmbeddingTable) -> np.ndarray:
    """(25, dim) matrix: zero vectors for OOV tokens and padding."""
    out = np.zeros((SEQ_LEN, table.dim), dtype=np.float32)
    for i, tok in enumerate(tokens[:SEQ_LEN]):
        vec = table.get(tok)
        if vec is not None:
            out[i] = vec
    return out


def encode_dataset(
    labeled: list[LabeledPair],
    src_table: EmbeddingTable,
    tgt_table: EmbeddingTable,
):
    """Precompute embedded tensors and label indices for a labeled dataset."""
    src = np.zeros((len(labeled), SEQ_LEN, src_table.dim), dtype=np.float32)
    tgt = np.zeros((len(labeled), SEQ_LEN, tgt_table.dim), dtype=np.float32)
    src_len = np.zeros(len(labeled), dtype=np.int64)
    tgt_len = np.zeros(len(labeled), dtype=np.int64)
    labels = np.zeros(len(labeled), dtype=np.int64)
    for i, lp in enumerate(labeled):
        s_toks = tokenize(lp.pair.source_text)
        t_toks = tokenize(lp.pair.target_text)
        src[i] = embed_tokens(s_toks, src_table)
        tgt[i] = embed_tokens(t_toks, tgt_table)
        src_len[i] = len(s_toks)
        tgt_len[i] = len(t_toks)
        labels[i] = CLASS_INDEX[lp.label]
    return (torch.from_numpy(src), torch.from_numpy(tgt),
            torch.from_numpy(src_len), torch.from_numpy(tgt_len),
            torch.from_numpy(labels))


@dataclass
class EpochLog:
    epoch: int
    loss: float
    lr: float
    seconds: float


@dataclass
class TrainResult:
    model: QeModel
    log: list[EpochLog] = field(default_factory=list)

    @property
    def lr_trajectory(self) -> list[float]:
        out = []
        for entry in self.log:
            if not out or out[-1] != entry.lr:
                out.append(entry.lr)
        return out


def build_model(config: ModelConfig, seed: int = 0) -> QeModel:
    torch.manual_seed(seed)
    return QeModel(config)


def train(
    model: QeModel,
    data,
    config: TrainConfig = TrainConfig(),
    bands: ScoringBands = ScoringBands(),
) -> TrainResult:
    """Adam training with the plateau-triggered lr schedule.

    After each epoch the relative loss drop (L_prev - L) / L_prev is compared
    to the threshold; below it the lr is divided by 10, and the third trigger
    stops training. Fully deterministic given the seed and thread count.
    """
    torch.set_num_threads(1)
    src, tgt, src_len, tgt_len, labels = data
    n = src.shape[0]
    opt = torch.optim.Adam(model.parameters(), lr=config.lr,
                           betas=(0.9, 0.999), eps=1e-8)
    gen = torch.Generator().manual_seed(config.seed)
    result = TrainResult(model=model)
    lr = config.lr
    prev_loss = None
    drops = 0
    for epoch in range(1, config.max_epochs + 1):
        t0 = time.monotonic()
        model.train()
        perm = torch.randperm(n, generator=gen)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            opt.zero_grad()
            out = model(src[idx], tgt[idx], src_len[idx], tgt_len[idx])
            if model.config.head is Head.CLASSIFICATION:
                loss = loss_classification(out, labels[idx])
            else:
                loss = loss_scoring(out, labels[idx], bands)
            if not torch.isfinite(loss):
                raise NonFiniteLoss(f"epoch {epoch}: loss {loss.item()}")
            loss.backward()
            opt.step()
            total += loss.item() * idx.numel()
        epoch_loss = total / n
        result.log.append(EpochLog(epoch, epoch_loss, lr, time.monotonic() - t0))
        if prev_loss is not None:
            rel_drop = (prev_loss - epoch_loss) / prev_loss if prev_loss > 0 else 0.0
            if rel_drop < config.loss_drop_threshold:
                drops += 1
                if drops > config.lr_drops:
                    break
                lr = lr * 0.1
                for group in opt.param_groups:
                    group["lr"] = lr
        prev_loss = epoch_loss
    return result


@torch.no_grad()
def predict_batch(model: QeModel, data, bands: ScoringBands = ScoringBands()):
    """Labels (and probabilities or scores) for an encoded dataset, eval mode."""
    model.eval()
    src, tgt, src_len, tgt_len, _ = data
    outputs = []
    for start in range(0, src.shape[0], 1024):
        sl = slice(start, start + 1024)
        outputs.append(model(src[sl], tgt[sl], src_len[sl], tgt_len[sl]))
    out = torch.cat(outputs)
    if model.config.head is Head.SCORING:
        labels = [predict_scoring(float(s), bands) for s in out]
        return labels, out.numpy()
    probs = F.softmax(out, dim=-1).numpy()
    labels = []
    for p in probs:
        best = p.max()
        # ties break toward Bad, then Loose
        if p[CLASS_INDEX[QeLabel.BAD]] >= best:
            labels.append(QeLabel.BAD)
        elif p[CLASS_INDEX[QeLabel.LOOSE]] >= best:
            labels.append(QeLabel.LOOSE)
        else:
            labels.append(QeLabel.GOOD)
    return labels, probs


def predict(model: QeModel, pair: BilingualPair, src_table: EmbeddingTable,
            tgt_table: EmbeddingTable, bands: ScoringBands = ScoringBands()):
    """(label, probabilities-or-score) for one pair."""
    lp = _unlabeled(pair)
    data = encode_dataset([lp], src_table, tgt_table)
    labels, values = predict_batch(model, data, bands)
    return labels[0], values[0]


@torch.no_grad()
def penultimate_activations(model: QeModel, pair: BilingualPair,
                            src_table: EmbeddingTable,
                            tgt_table: EmbeddingTable) -> np.ndarray:
    model.eval()
    data = encode_dataset([_unlabeled(pair)], src_table, tgt_table)
    src, tgt, src_len, tgt_len, _ = data
    return model.penultimate(src, tgt, src_len, tgt_len)[0].numpy()


def _unlabeled(pair: BilingualPair) -> LabeledPair:
    label = PROVENANCE_LABELS.get(pair.provenance, QeLabel.GOOD)
    return LabeledPair(pair, label)


def save_checkpoint(result: TrainResult, path, optimizer_state=None) -> None:
    c = result.model.config
    torch.save(
        {
            "version": CHECKPOINT_VERSION,
            "config": {
                "embed_dim": c.embed_dim,
                "seq_len": c.seq_len,
                "lstm_hidden": c.lstm_hidden,
                "conv_channels": tuple(c.conv_channels),
                "kernel_width": c.kernel_width,
                "fc_width": c.fc_width,
                "dropout_p": c.dropout_p,
                "n_classes": c.n_classes,
                "architecture": c.architecture.value,
                "head": c.head.value,
                "masked_pooling": c.masked_pooling,
            },
            "state_dict": result.model.state_dict(),
            "optimizer_state": optimizer_state,
            # wall-clock times stay out of the checkpoint so identical runs
            # produce identical bytes
            "log": [(e.epoch, e.loss, e.lr) for e in result.log],
        },
        path,
    )


def load_checkpoint(path) -> TrainResult:
    blob = torch.load(path, weights_only=False)
    if blob["version"] != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {blob['version']}")
    cfg = dict(blob["config"])
    cfg["conv_channels"] = tuple(cfg["conv_channels"])
    config = ModelConfig(**cfg)
    model = QeModel(config)
    model.load_state_dict(blob["state_dict"])
    model.eval()
    result = TrainResult(model=model)
    result.log = [EpochLog(epoch, loss, lr, 0.0) for epoch, loss, lr in blob["log"]]
    return result
