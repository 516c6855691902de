"""Model and training hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..corpus import N_CLASSES


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int
    d_model: int
    n_heads: int
    d_ff: int
    max_len: int
    vocab_size: int
    n_classes: int = N_CLASSES
    dropout_rate: float = 0.1
    dtype: str = "float64"  # float32 available as a speed/size trade-off

    def __post_init__(self):
        if self.n_layers < 0:
            raise ValueError("n_layers must be >= 0")
        if self.d_model < 1 or self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be a positive multiple of n_heads")
        if self.d_ff < 1:
            raise ValueError("d_ff must be >= 1")
        if self.max_len < 2:
            raise ValueError("max_len must be >= 2")
        if self.vocab_size < len_reserved():
            raise ValueError("vocab_size smaller than the reserved token set")
        if self.n_classes != N_CLASSES:
            raise ValueError(f"n_classes must be {N_CLASSES}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be 'float64' or 'float32'")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    def with_vocab_size(self, vocab_size: int) -> "ModelConfig":
        return replace(self, vocab_size=vocab_size)


def len_reserved() -> int:
    from ..context import RESERVED_TOKENS
    return len(RESERVED_TOKENS)


def desk_config(vocab_size: int, max_len: int = 64,
                dropout_rate: float = 0.1) -> ModelConfig:
    """Small preset for desk-scale experiments and CI."""
    return ModelConfig(n_layers=2, d_model=64, n_heads=4, d_ff=256,
                       max_len=max_len, vocab_size=vocab_size,
                       dropout_rate=dropout_rate)


def paper_scale_config(vocab_size: int) -> ModelConfig:
    """Full-scale preset (12 blocks, 768 hidden units, 12 heads, 128 tokens).

    Documented for completeness; far too slow for CI on CPU.
    """
    return ModelConfig(n_layers=12, d_model=768, n_heads=12, d_ff=3072,
                       max_len=128, vocab_size=vocab_size)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3
    learning_rate: float = 5e-5
    batch_size: int = 32
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    grad_clip_norm: float = 1.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        # learning_rate 0 is allowed: it is the contractual no-op update.
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("momentum decay rates must lie in [0, 1)")
        if self.grad_clip_norm < 0:
            raise ValueError("grad_clip_norm must be >= 0 (0 disables clipping)")


def desk_train_config(**overrides) -> TrainConfig:
    """Training defaults that suit the desk preset trained from scratch."""
    base = dict(epochs=30, learning_rate=1e-3, batch_size=32, seed=0)
    base.update(overrides)
    return TrainConfig(**base)


def paper_scale_train_config(**overrides) -> TrainConfig:
    """The fine-tuning recipe at paper scale: 3 epochs, learning rate 5e-5."""
    base = dict(epochs=3, learning_rate=5e-5, batch_size=32, seed=0)
    base.update(overrides)
    return TrainConfig(**base)
