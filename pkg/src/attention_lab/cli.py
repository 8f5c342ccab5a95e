"""
Command-line entry point

    python -m attention_lab cost --L 500 --D 768
    python -m attention_lab bench --config desk.cfg --batches 100
    python -m attention_lab train --variants ours --steps 200
    python -m attention_lab analyze --weights runs/weights_ours.npz

Settings are layered defaults < ATTENTION_LAB_* environment < config file <
flags. Config files are flat key=value lines with # comments.
"""

import argparse
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values, load_dotenv

from . import __version__
from .attention import VARIANTS, AttentionConfig, check_variant, write_pattern_csv
from .benchmark import cost_table, format_cost_table, run_benchmark_suite, write_bench_csv
from .errors import AttentionLabError, ConfigParseError, UnknownVariantError
from .models import AttentionEncoder
from .pretraining import (
    SyntheticAudioGenerator,
    TrainConfig,
    classify_heads,
    flatten_attention,
    pattern_report,
    pca_project,
    train,
    write_embedding_csv,
    write_loss_csv,
)
from .seeding import derive_seed

SUBCOMMANDS = ("cost", "bench", "train", "analyze")
ENV_PREFIX = "ATTENTION_LAB_"
MANIFEST_NAME = "manifest.cfg"

# Subcommands that run every variant unless told otherwise
_ALL_VARIANT_SUBCOMMANDS = ("cost", "bench")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str = ""
    variants: Tuple[str, ...] = ()
    L: int = 128
    D: int = 64
    H: int = 12
    C: int = 32
    N: int = 16
    U: float = 0.75
    m: int = 2
    layers: int = 6
    proportional_heads: bool = False
    steps: int = 200
    batch_size: int = 8
    learning_rate: float = 1e-3
    mask_ratio: float = 0.15
    mask_width: int = 3
    momentum: float = 0.9
    batches: int = 100
    repetitions: int = 5
    pca_dim: int = 2
    weights: str = ""
    output_dir: str = "runs"
    seed: int = 0
    verbose: bool = True

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigParseError(f"must be one of {', '.join(SUBCOMMANDS)}, got '{self.subcommand}'",
                                   key="subcommand")
        for variant in self.variants:
            try:
                check_variant(variant)
            except UnknownVariantError as e:
                raise ConfigParseError(str(e), key="variants") from e
        if not self.variants:
            default = VARIANTS if self.subcommand in _ALL_VARIANT_SUBCOMMANDS else ("ours",)
            object.__setattr__(self, "variants", default)

    def attention_config(self, variant: Optional[str] = None, layers: Optional[int] = None) -> AttentionConfig:
        return AttentionConfig(L=self.L, D=self.D, H=self.H, variant=variant or self.variants[0],
                               C=self.C, N=self.N, U=self.U, m=self.m,
                               layers=self.layers if layers is None else layers,
                               proportional_heads=self.proportional_heads)

    def train_config(self) -> TrainConfig:
        return TrainConfig(steps=self.steps, batch_size=self.batch_size, learning_rate=self.learning_rate,
                           mask_ratio=self.mask_ratio, mask_width=self.mask_width, momentum=self.momentum,
                           seed=self.seed)

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_KEY_ALIASES = {"variant": "variants"}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _convert(key: str, raw: Optional[str]):
    if raw is None:
        raise ConfigParseError("missing value", key=key)
    kind = _FIELD_TYPES[key]
    text = str(raw).strip()
    try:
        if key == "variants":
            return tuple(v.strip() for v in text.split(",") if v.strip())
        if kind in (int, "int"):
            return int(text)
        if kind in (float, "float"):
            return float(text)
        if kind in (bool, "bool"):
            return _parse_bool(text)
        return text
    except ValueError as e:
        raise ConfigParseError(f"invalid value '{raw}' ({e})", key=key) from e


def _apply(values: Dict[str, object], layer: Mapping[str, Optional[str]], source: str) -> None:
    for raw_key, raw in layer.items():
        key = _KEY_ALIASES.get(raw_key.strip(), raw_key.strip())
        if key not in _FIELD_TYPES:
            raise ConfigParseError(f"unknown key in {source}", key=raw_key)
        values[key] = _convert(key, raw)


def _environment_layer(env: Mapping[str, str]) -> Dict[str, str]:
    layer = {}
    for name, value in env.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):]
            layer[key if key in _FIELD_TYPES else key.lower()] = value
    return layer


def parse_config(path: Optional[Path] = None,
                 flags: Optional[Mapping[str, object]] = None,
                 env: Optional[Mapping[str, str]] = None) -> RunConfig:
    """
    Build a validated RunConfig

    Args:
        path: optional key=value config file
        flags: command-line overrides (None values are ignored)
        env: environment to read ATTENTION_LAB_* keys from (os.environ by default)

    Raises:
        ConfigParseError naming the offending key
    """
    values: Dict[str, object] = {}
    _apply(values, _environment_layer(os.environ if env is None else env), "environment")

    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigParseError(f"config file not found: {path}", key="config")
        _apply(values, dotenv_values(path), str(path))

    if flags:
        _apply(values, {k: str(v) for k, v in flags.items() if v is not None}, "flags")

    return RunConfig(**values)


def write_manifest(cfg: RunConfig, directory: Path) -> Path:
    """Echo the config as a loadable key=value file headed by the version"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [f"# attention_lab {__version__}"]
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(value)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{f.name}={value}")
    path = directory / MANIFEST_NAME
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _run_cost(cfg: RunConfig) -> None:
    table = cost_table(cfg.L, cfg.D, cfg.H, cfg.C, cfg.N, variants=cfg.variants)
    print(format_cost_table(table, (cfg.L, cfg.D, cfg.H, cfg.C, cfg.N)))
    table.to_csv(cfg.output_path / "cost.csv", index=False)


def _run_bench(cfg: RunConfig) -> None:
    records = run_benchmark_suite(cfg.variants, cfg.attention_config(layers=1), cfg.batches,
                                  cfg.repetitions, cfg.seed, verbose=cfg.verbose)
    write_bench_csv(records, cfg.output_path / "bench.csv")


def _reference_sequence(cfg: RunConfig) -> np.ndarray:
    return SyntheticAudioGenerator(cfg.D, cfg.L, seed=derive_seed(cfg.seed, "reference")).sequence()


def _run_train(cfg: RunConfig) -> None:
    reference = _reference_sequence(cfg)
    for variant in cfg.variants:
        data = SyntheticAudioGenerator(cfg.D, cfg.L, seed=derive_seed(cfg.seed, "data"))
        result = train(variant, cfg.train_config(), data, cfg.attention_config(variant), verbose=cfg.verbose)
        write_loss_csv(result.losses, cfg.output_path / f"loss_{variant}.csv")
        np.savez(cfg.output_path / f"weights_{variant}.npz", **result.weights)
        np.savez(cfg.output_path / f"attention_{variant}.npz", maps=result.model.attention_maps(reference))
        if cfg.verbose and result.losses:
            print(f"💾 {variant}: loss {result.losses[0]:.4f} -> {result.losses[-1]:.4f}")


def _first_layer_maps(cfg: RunConfig, variant: str) -> np.ndarray:
    """
    First-layer maps on the reference sequence

    A weights file either holds saved maps (`attention_*.npz`) or encoder
    parameters (`weights_*.npz`), which are loaded into a fresh encoder.
    Without a file the freshly initialised encoder is used as is.
    """
    model = AttentionEncoder(cfg.attention_config(variant), seed=derive_seed(cfg.seed, "model"))
    if cfg.weights:
        with np.load(cfg.weights) as saved:
            if "maps" in saved.files:
                maps = saved["maps"]
                return maps[0] if maps.ndim == 4 else maps
            state = {name: saved[name] for name in saved.files}
        try:
            model.load_state_dict(state)
        except KeyError as e:
            raise ConfigParseError(f"{cfg.weights} holds neither attention maps nor {variant} weights ({e})",
                                   key="weights") from e
    return model.attention_maps(_reference_sequence(cfg))[0]


def _run_analyze(cfg: RunConfig) -> None:
    if cfg.weights and len(cfg.variants) != 1:
        raise ConfigParseError("a weights file needs exactly one variant", key="weights")
    for variant in cfg.variants:
        maps = _first_layer_maps(cfg, variant)
        labels = classify_heads(maps)
        projection = pca_project(flatten_attention(maps), cfg.pca_dim, seed=cfg.seed)
        write_embedding_csv(projection.projected, cfg.output_path / f"embedding_{variant}.csv")
        for head, weights in enumerate(maps, start=1):
            write_pattern_csv(weights, cfg.output_path / f"pattern_{variant}_h{head}.csv")
        report = pattern_report(labels, title=f"Attention patterns: {variant}")
        (cfg.output_path / f"patterns_{variant}.txt").write_text(report, encoding="utf-8")
        print(report)


_DISPATCH = {"cost": _run_cost, "bench": _run_bench, "train": _run_train, "analyze": _run_analyze}


def run(cfg: RunConfig) -> int:
    """Dispatch one subcommand; returns the process exit status"""
    try:
        cfg.output_path.mkdir(parents=True, exist_ok=True)
        write_manifest(cfg, cfg.output_path)
        if cfg.verbose:
            print(f"🚀 attention_lab {cfg.subcommand} -> {cfg.output_path}")
        _DISPATCH[cfg.subcommand](cfg)
    except (AttentionLabError, OSError) as e:
        print(f"❌ {cfg.subcommand} failed: {e}", file=sys.stderr)
        return 1
    if cfg.verbose:
        print(f"✅ {cfg.subcommand} done")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attention_lab",
                                     description="Attention variants for self-supervised audio transformers")
    parser.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS, help="what to run")
    parser.add_argument("--config", type=Path, help="key=value config file")
    parser.add_argument("--quiet", action="store_true", help="no progress lines")
    for f in fields(RunConfig):
        if f.name in ("subcommand", "verbose"):
            continue
        option = f"--{f.name.replace('_', '-')}"
        aliases = ["--variant"] if f.name == "variants" else []
        parser.add_argument(option, *aliases, dest=f.name, default=None, metavar=f.name.upper(),
                            help="comma-separated variant tags" if f.name == "variants" else None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    flags = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    flags["subcommand"] = args.subcommand
    flags["verbose"] = False if args.quiet else None
    try:
        cfg = parse_config(args.config, flags)
    except (AttentionLabError, OSError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
