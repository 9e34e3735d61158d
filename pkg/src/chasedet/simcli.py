"""Link-level Monte Carlo simulator and its command line front end.

Each block draws a payload, encodes, interleaves, and maps it onto U channel
uses of an n_streams MIMO channel, then runs iterative detection and
decoding and scores every iteration. Per-block randomness comes from
SeedSequence([seed, snr_index, block_index]), so results are reproducible
bit for bit regardless of worker count, and two detectors run with the same
seed see identical payloads, channels, and noise.

SNR is per-receive-antenna Es/N0 in dB: noise variance is
n_streams * 10**(-snr/10) with unit-energy streams and unit-variance
channel entries.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .channel import ChannelRealization, CorrelationModel, generate_channel, transmit, whiten
from .codec import SUPPORTED_RATES, CodeConfig, encode, make_interleaver, puncture
from .constellation import SUPPORTED_ORDERS, build_constellation, modulate
from .errors import ConfigError, NotPositiveDefiniteError, SingularMatrixError
from .idd import DETECTORS, IddConfig, run_idd, slot_bits, uses_for_block
from .reference import MAX_EXHAUSTIVE

log = logging.getLogger("chasedet.sim")

CSV_HEADER = (
    "snr_db,iteration,detector,blocks,block_errors,bit_errors,"
    "bler,ber,metric_count_mean,wall_time_s"
)
MAX_REDRAWS = 32


@dataclass
class SimConfig:
    detector: str = "lchase"
    mod: int = 16
    n_streams: int = 2
    n_rx: int = 2
    n_tx: int = 2
    corr_tx: float = 0.0
    corr_rx: float = 0.0
    rate: float = 0.5
    snr_db: tuple = (4.0, 6.0, 8.0, 10.0, 12.0)
    blocks: int = 100
    iterations: int = 3
    info_bits: int = 64
    seed: int = 12345
    out: str = "chasedet_results.csv"
    workers: int = 1
    timing: bool = False


@dataclass(frozen=True)
class SimRecord:
    snr_db: float
    iteration: int
    detector: str
    blocks: int
    block_errors: int
    bit_errors: int
    bler: float
    ber: float
    metric_count_mean: float
    wall_time_s: float

    def to_row(self) -> str:
        return ",".join(
            (
                f"{self.snr_db:.12g}",
                str(self.iteration),
                self.detector,
                str(self.blocks),
                str(self.block_errors),
                str(self.bit_errors),
                f"{self.bler:.12g}",
                f"{self.ber:.12g}",
                f"{self.metric_count_mean:.12g}",
                f"{self.wall_time_s:.12g}",
            )
        )


def parse_snr_grid(text: str) -> tuple:
    """SNR grid from 'start:step:stop' (inclusive), a comma list, or one value."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, step, stop = (float(p) for p in parts)
            if step == 0.0 or (stop - start) / step < 0.0:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(start + step * i for i in range(count))
        if "," in text:
            return tuple(float(p) for p in text.split(","))
        return (float(text),)
    except ValueError:
        raise ConfigError(f"cannot parse SNR grid {text!r}") from None


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


# Config file/flag keys and how they land in SimConfig. "corr" fans out to
# both correlation fields.
_KEY_FIELDS = {
    "detector": ("detector", str),
    "mod": ("mod", int),
    "streams": ("n_streams", int),
    "rx": ("n_rx", int),
    "tx": ("n_tx", int),
    "corr": (("corr_tx", "corr_rx"), float),
    "corr_tx": ("corr_tx", float),
    "corr_rx": ("corr_rx", float),
    "rate": ("rate", float),
    "snr": ("snr_db", parse_snr_grid),
    "blocks": ("blocks", int),
    "iters": ("iterations", int),
    "info_bits": ("info_bits", int),
    "seed": ("seed", int),
    "out": ("out", str),
    "workers": ("workers", int),
    "timing": ("timing", _parse_bool),
}


def _apply_key(values: dict, key: str, raw, where: str) -> None:
    if key not in _KEY_FIELDS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    dest, conv = _KEY_FIELDS[key]
    try:
        value = conv(raw) if isinstance(raw, str) else raw
    except ConfigError:
        raise
    except (ValueError, TypeError):
        raise ConfigError(f"{where}: invalid value for {key}: {raw!r}") from None
    for name in dest if isinstance(dest, tuple) else (dest,):
        values[name] = value


def load_config_file(path: str) -> list:
    """Parse a 'key = value' file into (lineno, key, raw_value) entries."""
    entries = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path} line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not key or not raw:
            raise ConfigError(f"{path} line {lineno}: expected 'key = value'")
        entries.append((lineno, key, raw))
    return entries


def validate_config(cfg: SimConfig) -> SimConfig:
    if cfg.detector not in DETECTORS:
        raise ConfigError(f"unknown detector {cfg.detector!r}")
    if cfg.mod not in SUPPORTED_ORDERS:
        raise ConfigError(f"mod must be one of {SUPPORTED_ORDERS}")
    if cfg.n_streams < 1:
        raise ConfigError("streams must be positive")
    if cfg.n_tx < cfg.n_streams or cfg.n_rx < cfg.n_streams:
        raise ConfigError("need tx >= streams and rx >= streams")
    if not (0.0 <= cfg.corr_tx < 1.0 and 0.0 <= cfg.corr_rx < 1.0):
        raise ConfigError("correlation must lie in [0, 1)")
    if cfg.rate not in SUPPORTED_RATES:
        raise ConfigError(f"rate must be one of {SUPPORTED_RATES}")
    if not cfg.snr_db:
        raise ConfigError("SNR grid is empty")
    if cfg.blocks < 1 or cfg.iterations < 1 or cfg.info_bits < 1:
        raise ConfigError("blocks, iters, and info_bits must be positive")
    if cfg.workers < 1:
        raise ConfigError("workers must be positive")
    if cfg.detector == "maxlog" and cfg.mod**cfg.n_streams > MAX_EXHAUSTIVE:
        raise ConfigError(
            f"maxlog needs mod**streams <= {MAX_EXHAUSTIVE}, "
            f"got {cfg.mod}**{cfg.n_streams}"
        )
    return cfg


def build_config(config_path: str | None, overrides: dict) -> SimConfig:
    """Defaults, then config file entries in order, then explicit flags."""
    values = asdict(SimConfig())
    if config_path is not None:
        for lineno, key, raw in load_config_file(config_path):
            _apply_key(values, key, raw, f"{config_path} line {lineno}")
    for key, value in overrides.items():
        if value is not None:
            _apply_key(values, key, value, f"flag --{key.replace('_', '-')}")
    return validate_config(SimConfig(**values))


@dataclass
class _Bundle:
    cfg: SimConfig
    constellation: object
    code: CodeConfig
    idd_cfg: IddConfig
    interleaver: object
    corr: CorrelationModel
    w: np.ndarray
    n_uses: int


def _build_bundle(cfg: SimConfig) -> _Bundle:
    c = build_constellation(cfg.mod)
    code = CodeConfig(cfg.info_bits, cfg.rate)
    idd_cfg = IddConfig(
        constellation=c,
        code=code,
        detector=cfg.detector,
        iterations=cfg.iterations,
        interleaver_seed=cfg.seed,
    )
    return _Bundle(
        cfg=cfg,
        constellation=c,
        code=code,
        idd_cfg=idd_cfg,
        interleaver=make_interleaver(code.transmitted_len, cfg.seed),
        corr=CorrelationModel(rho_tx=cfg.corr_tx, rho_rx=cfg.corr_rx),
        w=np.eye(cfg.n_tx, cfg.n_streams, dtype=complex),
        n_uses=uses_for_block(code, c, cfg.n_streams),
    )


def _run_block(bundle: _Bundle, point_idx: int, snr_db: float, block_idx: int):
    """One coded block: returns per-iteration error/bit/metric tallies."""
    cfg = bundle.cfg
    rng = np.random.default_rng(
        np.random.SeedSequence([cfg.seed, point_idx, block_idx])
    )
    sigma2 = cfg.n_streams * 10.0 ** (-snr_db / 10.0)
    c_nn = sigma2 * np.eye(cfg.n_rx)

    info = rng.integers(0, 2, cfg.info_bits, dtype=np.int8)
    tx_bits = puncture(encode(info, bundle.code), bundle.code)[
        bundle.interleaver.perm
    ]
    bits = slot_bits(tx_bits, bundle.constellation, cfg.n_streams)
    symbols = [modulate(bits[u], bundle.constellation) for u in range(bundle.n_uses)]

    redraws = 0
    while True:
        try:
            models = []
            for u in range(bundle.n_uses):
                hbar = generate_channel(cfg.n_rx, cfg.n_tx, bundle.corr, rng)
                ch = ChannelRealization(hbar, c_nn, bundle.w)
                y = transmit(ch, symbols[u], rng)
                models.append(whiten(y, ch))
            result = run_idd(models, info, bundle.idd_cfg)
            break
        except (SingularMatrixError, NotPositiveDefiniteError) as exc:
            redraws += 1
            if redraws > MAX_REDRAWS:
                raise
            log.warning(
                "redrawing channel for snr point %d block %d: %s",
                point_idx,
                block_idx,
                exc,
            )

    metrics = np.array(
        [s.metric_evals + s.boundary_evals for s in result.iter_stats], dtype=float
    )
    streams = np.array([s.streams for s in result.iter_stats], dtype=np.int64)
    return (
        result.iter_block_error.copy(),
        result.iter_bit_errors.copy(),
        metrics,
        streams,
        redraws,
    )


_WORKER_BUNDLE = None


def _init_worker(cfg: SimConfig) -> None:
    global _WORKER_BUNDLE
    _WORKER_BUNDLE = _build_bundle(cfg)


def _pool_block(args) -> tuple:
    point_idx, snr_db, block_idx = args
    return _run_block(_WORKER_BUNDLE, point_idx, snr_db, block_idx)


def simulate_point(
    bundle: _Bundle, point_idx: int, snr_db: float, pool=None
) -> list:
    """All blocks at one SNR point, reduced to per-iteration records."""
    cfg = bundle.cfg
    started = time.perf_counter()
    if pool is None:
        outcomes = [
            _run_block(bundle, point_idx, snr_db, b) for b in range(cfg.blocks)
        ]
    else:
        work = [(point_idx, snr_db, b) for b in range(cfg.blocks)]
        chunk = max(1, cfg.blocks // (cfg.workers * 8))
        outcomes = list(pool.map(_pool_block, work, chunksize=chunk))
    elapsed = time.perf_counter() - started if cfg.timing else 0.0

    flags = np.array([o[0] for o in outcomes])
    bits = np.array([o[1] for o in outcomes])
    metrics = np.array([o[2] for o in outcomes])
    streams = np.array([o[3] for o in outcomes])
    redraws = sum(o[4] for o in outcomes)
    if redraws:
        log.info("snr %.12g dB: %d channel redraws", snr_db, redraws)

    records = []
    for t in range(cfg.iterations):
        block_errors = int(flags[:, t].sum())
        bit_errors = int(bits[:, t].sum())
        records.append(
            SimRecord(
                snr_db=snr_db,
                iteration=t + 1,
                detector=cfg.detector,
                blocks=cfg.blocks,
                block_errors=block_errors,
                bit_errors=bit_errors,
                bler=block_errors / cfg.blocks,
                ber=bit_errors / (cfg.blocks * cfg.info_bits),
                metric_count_mean=float(metrics[:, t].sum() / streams[:, t].sum()),
                wall_time_s=elapsed,
            )
        )
    return records


def monte_carlo(cfg: SimConfig) -> list:
    """Sweep the SNR grid; returns SimRecords, grid-major, iteration-minor."""
    bundle = _build_bundle(cfg)
    records = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(
            max_workers=cfg.workers, initializer=_init_worker, initargs=(cfg,)
        ) as pool:
            for point_idx, snr_db in enumerate(cfg.snr_db):
                records.extend(simulate_point(bundle, point_idx, snr_db, pool))
    else:
        for point_idx, snr_db in enumerate(cfg.snr_db):
            records.extend(simulate_point(bundle, point_idx, snr_db))
    return records


def config_lines(cfg: SimConfig) -> list:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "snr_db":
            value = ",".join(f"{v:.12g}" for v in value)
        lines.append(f"{f.name} = {value}")
    return lines


def write_csv(records, path, header_comments=()) -> None:
    lines = [f"# {comment}" for comment in header_comments]
    lines.append(CSV_HEADER)
    lines.extend(record.to_row() for record in records)
    Path(path).write_text("\n".join(lines) + "\n")


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chasedet",
        description="Monte Carlo link simulation of iterative MIMO "
        "detection and decoding.",
    )
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--detector", choices=DETECTORS)
    parser.add_argument("--mod", type=int, choices=SUPPORTED_ORDERS)
    parser.add_argument("--streams", type=int, help="spatial streams")
    parser.add_argument("--rx", type=int, help="receive antennas")
    parser.add_argument("--tx", type=int, help="transmit antennas")
    parser.add_argument("--corr", type=float, help="tx and rx correlation")
    parser.add_argument("--corr-tx", type=float, dest="corr_tx")
    parser.add_argument("--corr-rx", type=float, dest="corr_rx")
    parser.add_argument("--rate", type=float, choices=SUPPORTED_RATES)
    parser.add_argument("--snr", help="grid 'start:step:stop', list, or value")
    parser.add_argument("--blocks", type=int, help="blocks per SNR point")
    parser.add_argument("--iters", type=int, help="detection iterations")
    parser.add_argument("--info-bits", type=int, dest="info_bits")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--workers", type=int, help="worker processes")
    parser.add_argument(
        "--timing",
        action="store_true",
        default=None,
        help="fill wall_time_s (that column is then machine dependent)",
    )
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = vars(_make_parser().parse_args(argv))
    config_path = args.pop("config")
    try:
        cfg = build_config(config_path, args)
        records = monte_carlo(cfg)
        write_csv(records, cfg.out, header_comments=config_lines(cfg))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    final = [r for r in records if r.iteration == cfg.iterations]
    for rec in final:
        print(
            f"snr {rec.snr_db:.12g} dB  iter {rec.iteration}  "
            f"bler {rec.bler:.4g}  ber {rec.ber:.4g}"
        )
    print(f"wrote {cfg.out} ({len(records)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
