"""End-to-end analysis runs that turn input files into artifact trees.

A run is described by one declarative config; its canonical JSON form
(minus the output directory) is hashed, and the hash plus the seed are
stamped into every artifact, so outputs can always be traced to the
exact settings that made them. Runs are deterministic: the same config,
seed and input produce byte-identical artifact trees.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    BinGrid,
    BinnedReturnPanel,
    CorrelationMatrix,
    bin_panel,
    correlation_to_json,
    daily_returns,
    panel_from_json,
    panel_to_json,
    parse_session,
    read_daily_csv,
    read_ticks_csv,
    write_matrix_csv,
    _write_csv,
)
from .embedding import (
    AnnealingSchedule,
    average_coords_across_days,
    average_correlations_across_days,
    chain_embed,
    map_to_json,
    mean_distance_from_center,
    to_distance,
    write_map_csv,
)
from .errors import ComoveError, EstimationWarning, InsufficientDataError, \
    ValidationError
from .estimators import (
    WindowSpec,
    average_pairwise_correlation,
    binwise_correlations,
    dispersion,
    hy_bin_matrices,
    normalize_panel,
    pearson_windowed,
    temporal_moments,
)
from .spectral import binwise_spectrum_series, clean_spectrum, eigendecompose

MODES = ("intraday-ticks", "intraday-binned", "daily")
ESTIMATORS = ("hayashi-yoshida", "pearson-binned", "pearson-daily")
DROP_POLICIES = ("drop-symbols", "skip-windows")

_DEFAULT_ESTIMATOR = {
    "intraday-ticks": "hayashi-yoshida",
    "intraday-binned": "pearson-binned",
    "daily": "pearson-daily",
}


@dataclass(frozen=True)
class PipelineConfig:
    """Declarative description of one analysis run.

    ``step`` of ``None`` means non-overlapping windows (step = window),
    ``estimator`` of ``None`` picks the mode's default, and
    ``penalty_weight`` of ``None`` lets the embedding chain scale its
    own anchor penalty per step.
    """

    mode: str
    input: str
    out: str
    session: str = "10:00-16:00"
    bin_width: int = 1800
    window: int = 20
    step: int | None = None
    estimator: str | None = None
    clean: bool = False
    seed: int = 0
    penalty_weight: float | None = None
    drop_policy: str = "drop-symbols"
    workers: int = 1
    n_dim: int = 2
    min_days: int = 2
    schedule: dict | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValidationError(
                f"mode must be one of {', '.join(MODES)}, got {self.mode!r}"
            )
        if not self.input:
            raise ValidationError("input path is required")
        if not self.out:
            raise ValidationError("output directory is required")
        if self.estimator is not None and self.estimator not in ESTIMATORS:
            raise ValidationError(
                f"estimator must be one of {', '.join(ESTIMATORS)}, "
                f"got {self.estimator!r}"
            )
        if self.drop_policy not in DROP_POLICIES:
            raise ValidationError(
                f"drop policy must be one of {', '.join(DROP_POLICIES)}, "
                f"got {self.drop_policy!r}"
            )
        if self.bin_width <= 0:
            raise ValidationError(f"bin width must be positive, got {self.bin_width}")
        if self.window < 2:
            raise ValidationError(f"window must be >= 2 days, got {self.window}")
        if self.step is not None and self.step < 1:
            raise ValidationError(f"step must be >= 1, got {self.step}")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        if self.n_dim < 1:
            raise ValidationError(f"n_dim must be >= 1, got {self.n_dim}")
        if self.min_days < 2:
            raise ValidationError(f"min_days must be >= 2, got {self.min_days}")
        parse_session(self.session)
        if self.schedule is not None:
            self.annealing_schedule()  # validate eagerly

    def resolved_estimator(self) -> str:
        est = self.estimator or _DEFAULT_ESTIMATOR[self.mode]
        if self.mode == "daily" and est != "pearson-daily":
            raise ValidationError(f"daily mode cannot use estimator {est!r}")
        if self.mode != "daily" and est == "pearson-daily":
            raise ValidationError(f"{self.mode} mode cannot use estimator {est!r}")
        if self.mode == "intraday-binned" and est == "hayashi-yoshida":
            raise ValidationError(
                "hayashi-yoshida needs raw ticks, not a binned panel"
            )
        return est

    def annealing_schedule(self) -> AnnealingSchedule:
        if self.schedule is None:
            return AnnealingSchedule()
        if not isinstance(self.schedule, dict):
            raise ValidationError("schedule must be a JSON object")
        try:
            return AnnealingSchedule(**self.schedule)
        except TypeError as exc:
            raise ValidationError(f"bad schedule settings: {exc}") from exc

    def config_hash(self) -> str:
        payload = asdict(self)
        del payload["out"]  # identical analyses may land in different trees
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def load_config(config_path: str | None = None,
                overrides: dict | None = None) -> PipelineConfig:
    """Build a config from an optional JSON file plus flag overrides.

    Override values of ``None`` are ignored, so untouched flags never
    shadow the file.
    """
    settings: dict = {}
    if config_path is not None:
        try:
            doc = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ValidationError(f"{config_path}: config must be a JSON object")
        settings.update(doc)
    for key, value in (overrides or {}).items():
        if value is not None:
            settings[key] = value
    known = set(PipelineConfig.__dataclass_fields__)
    unknown = sorted(set(settings) - known)
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    missing = [k for k in ("mode", "input", "out") if k not in settings]
    if missing:
        raise ValidationError(f"missing config keys: {', '.join(missing)}")
    try:
        return PipelineConfig(**settings)
    except TypeError as exc:
        raise ValidationError(f"bad config: {exc}") from exc


class _ArtifactWriter:
    """Writes artifacts under one root, stamping provenance everywhere."""

    def __init__(self, out_dir: Path, config_hash: str, seed: int) -> None:
        self.root = out_dir
        self.comments = (f"config_hash: {config_hash}", f"seed: {seed}")
        self.provenance = {
            "config_hash": config_hash,
            "seed": seed,
            "tool": f"comove {__version__}",
        }
        self.entries: list[dict] = []

    def _register(self, rel: str, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.entries.append({"path": rel, "sha256": digest})

    def _prepare(self, rel: str) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def csv(self, rel: str, header, rows, extra_comments=()) -> None:
        path = self._prepare(rel)
        _write_csv(path, [*self.comments, *extra_comments], header, rows)
        self._register(rel, path)

    def text(self, rel: str, text: str) -> None:
        path = self._prepare(rel)
        path.write_text(text + "\n")
        self._register(rel, path)

    def matrix(self, rel_base: str, corr: CorrelationMatrix) -> None:
        csv_path = self._prepare(rel_base + ".csv")
        write_matrix_csv(csv_path, corr.symbols, corr.values,
                         [*self.comments, f"estimator: {corr.estimator}"])
        self._register(rel_base + ".csv", csv_path)
        self.text(rel_base + ".json", correlation_to_json(corr, self.provenance))

    def embedding(self, rel_base: str, emap) -> None:
        csv_path = self._prepare(rel_base + ".csv")
        write_map_csv(csv_path, emap,
                      [*self.comments, f"stress: {emap.stress!r}"])
        self._register(rel_base + ".csv", csv_path)
        self.text(rel_base + ".json", map_to_json(emap, self.provenance))

    def manifest(self, config: PipelineConfig) -> dict:
        payload = asdict(config)
        del payload["out"]  # keep reruns into different trees byte-identical
        doc = {
            "config": payload,
            "config_hash": self.provenance["config_hash"],
            "seed": self.provenance["seed"],
            "tool": self.provenance["tool"],
            "artifacts": sorted(self.entries, key=lambda e: e["path"]),
        }
        path = self._prepare("manifest.json")
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        return doc


def _num(x: float) -> str:
    return "nan" if np.isnan(x) else repr(float(x))


def _common_clean(mats: list[CorrelationMatrix],
                  what: str) -> tuple[list[CorrelationMatrix], tuple[str, ...]]:
    """Restrict a family of matrices to symbols defined in all of them.

    Assets are dropped greedily by how many undefined pairs they carry
    anywhere in the family, until every remaining entry of every matrix
    is defined.
    """
    symbols = mats[0].symbols
    n = len(symbols)
    avail = np.ones((n, n), dtype=bool)
    for m in mats:
        if m.symbols != symbols:
            raise ValidationError(f"{what}: matrices cover different symbols")
        avail &= np.isfinite(m.values)
    keep = list(range(n))
    dropped: list[str] = []
    while keep:
        sub = avail[np.ix_(keep, keep)]
        bad = (~sub).sum(axis=1)
        if not bad.any():
            break
        worst = keep[int(np.argmax(bad))]
        dropped.append(symbols[worst])
        keep.remove(worst)
    if len(keep) < 2:
        raise InsufficientDataError(
            f"{what}: fewer than two assets defined in every matrix"
        )
    if dropped:
        warnings.warn(
            f"{what}: dropped {len(dropped)} assets with undefined entries: "
            + ", ".join(dropped[:5]) + ("..." if len(dropped) > 5 else ""),
            EstimationWarning,
            stacklevel=2,
        )
        idx = np.ix_(keep, keep)
        kept_symbols = tuple(symbols[i] for i in keep)
        mats = [
            CorrelationMatrix(kept_symbols, m.values[idx], m.estimator,
                              None if m.support is None else m.support[idx])
            for m in mats
        ]
    return mats, tuple(dropped)


def _bin_label(k: int, n_bins: int) -> str:
    width = max(2, len(str(n_bins - 1)))
    return f"bin_{k:0{width}d}"


def _write_chain(writer: _ArtifactWriter, rel_dir: str, labels, maps) -> None:
    for label, emap in zip(labels, maps):
        writer.embedding(f"{rel_dir}/{label}", emap)
    writer.csv(
        f"{rel_dir}/mean_distance.csv",
        ("step", "mean_distance"),
        ([label, _num(mean_distance_from_center(emap))]
         for label, emap in zip(labels, maps)),
    )


def run_intraday_pipeline(config: PipelineConfig) -> dict:
    """Binned-dispersion, spectrum, correlation and map artifacts.

    Consumes a tick CSV or a prebuilt panel JSON, and writes dispersion
    curves, per-bin top eigenvalues, per-bin average pairwise
    correlations with across-day bands, per-bin correlation matrices,
    and per-bin map chains. With the asynchronous estimator the maps
    come in two variants: coordinates averaged across days, and
    correlations averaged across days. Returns the manifest.
    """
    if config.mode not in ("intraday-ticks", "intraday-binned"):
        raise ValidationError(f"not an intraday mode: {config.mode}")
    estimator = config.resolved_estimator()
    schedule = config.annealing_schedule()
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = _ArtifactWriter(out_dir, config.config_hash(), config.seed)

    if config.mode == "intraday-ticks":
        ticks = read_ticks_csv(config.input)
        start_s, end_s = parse_session(config.session)
        grid = BinGrid.from_ticks(ticks, start_s, end_s, config.bin_width)
        panel = bin_panel(ticks, grid)
        writer.text("panel.json", panel_to_json(panel, writer.provenance))
    else:
        ticks = None
        try:
            panel = panel_from_json(Path(config.input).read_text())
        except OSError as exc:
            raise ValidationError(f"cannot read {config.input}: {exc}") from exc
        grid = panel.grid
    n_bins = grid.n_bins
    labels = [_bin_label(k, n_bins) for k in range(n_bins)]

    # (a) dispersion curves
    moments = temporal_moments(panel)
    disp = dispersion(panel)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        temporal_sigma = np.nanmean(moments.sigma, axis=0)
    mean_sigma_d = disp.mean_sigma()
    mean_abs_mu = disp.mean_abs_mu()
    writer.csv(
        "dispersion.csv",
        ("bin", "mean_sigma_d", "mean_abs_mu_d", "mean_temporal_sigma"),
        ([k, _num(mean_sigma_d[k]), _num(mean_abs_mu[k]), _num(temporal_sigma[k])]
         for k in range(n_bins)),
    )

    # per-bin correlation matrices under the chosen estimator
    if estimator == "hayashi-yoshida":
        day_mats = hy_bin_matrices(ticks, grid, config.workers)
        bin_mats = [
            average_correlations_across_days([day_mats[t][k]
                                              for t in range(grid.n_days)])
            for k in range(n_bins)
        ]
        day_curves = np.array([
            [average_pairwise_correlation(day_mats[t][k]) for k in range(n_bins)]
            for t in range(grid.n_days)
        ])
    else:
        norm = normalize_panel(panel, disp)
        bin_mats = binwise_correlations(norm, config.min_days)
        day_mats = None
        day_curves = None

    # (b) per-bin top eigenvalues over N
    n_top = 7
    spectrum = np.full((n_bins, n_top), np.nan)
    for k, corr in enumerate(bin_mats):
        try:
            cleaned, _ = corr.drop_undefined()
            spectrum[k] = binwise_spectrum_series([cleaned], n_top)[0]
        except ComoveError as exc:
            warnings.warn(f"bin {k}: no spectrum ({exc})", EstimationWarning,
                          stacklevel=2)
    writer.csv(
        "spectrum.csv",
        ("bin", *(f"lambda{i}_over_N" for i in range(1, n_top + 1))),
        ([k, *(_num(v) for v in spectrum[k])] for k in range(n_bins)),
    )

    # (c) per-bin average pairwise correlation, with across-day bands
    # when the days are resolved
    if day_curves is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            curve = np.nanmean(day_curves, axis=0)
            band = np.nanstd(day_curves, axis=0)
        if grid.n_days > 1:
            writer.csv(
                "mean_correlation.csv",
                ("bin", "mean_corr", "std_corr"),
                ([k, _num(curve[k]), _num(band[k])] for k in range(n_bins)),
            )
        else:
            writer.csv(
                "mean_correlation.csv",
                ("bin", "mean_corr"),
                ([k, _num(curve[k])] for k in range(n_bins)),
            )
    else:
        curve = np.array([average_pairwise_correlation(m) for m in bin_mats])
        writer.csv(
            "mean_correlation.csv",
            ("bin", "mean_corr"),
            ([k, _num(curve[k])] for k in range(n_bins)),
        )

    # (d) per-bin correlation matrices and map chains; bins with no
    # defined pair at all (for example a bin with no opening anchor)
    # are left out of the chain, keeping their labels elsewhere
    defined = [k for k in range(n_bins)
               if np.isfinite(bin_mats[k].offdiag()).any()]
    if not defined:
        raise InsufficientDataError("no bin has a single defined pair")
    if len(defined) < n_bins:
        warnings.warn(
            f"skipped {n_bins - len(defined)} bins with no defined pairs",
            EstimationWarning, stacklevel=2,
        )
    chain_labels = [labels[k] for k in defined]
    chain_mats, _ = _common_clean([bin_mats[k] for k in defined],
                                  "per-bin matrices")
    for label, corr in zip(chain_labels, chain_mats):
        writer.matrix(f"corr/{label}", corr)
    dists = [to_distance(m) for m in chain_mats]
    maps_avg_corr = chain_embed(dists, schedule, config.penalty_weight,
                                config.seed, config.n_dim)
    _write_chain(writer, "maps_avg_corr", chain_labels, maps_avg_corr)

    if day_mats is not None:
        flat = [day_mats[t][k] for t in range(grid.n_days) for k in defined]
        flat_clean, _ = _common_clean(flat, "per-day matrices")
        n_kept = len(defined)
        day_chains = []
        for t in range(grid.n_days):
            day_dists = [to_distance(m)
                         for m in flat_clean[t * n_kept:(t + 1) * n_kept]]
            day_chains.append(chain_embed(day_dists, schedule,
                                          config.penalty_weight, config.seed,
                                          config.n_dim))
        maps_avg_coords = [
            average_coords_across_days([day_chains[t][j]
                                        for t in range(grid.n_days)])
            for j in range(n_kept)
        ]
        _write_chain(writer, "maps_avg_coords", chain_labels, maps_avg_coords)

    return writer.manifest(config)


def run_daily_pipeline(config: PipelineConfig) -> dict:
    """Rolling-window correlation and map artifacts from daily closes.

    Windows advance by ``step`` days (the full width when unset). Under
    the default drop policy, symbols with undefined pairs in any window
    are removed everywhere so one chain covers all windows; the
    alternative skips offending windows whole. With ``clean``, each
    window's matrix has its noise band flattened before embedding.
    Returns the manifest.
    """
    if config.mode != "daily":
        raise ValidationError(f"not the daily mode: {config.mode}")
    config.resolved_estimator()
    schedule = config.annealing_schedule()
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = _ArtifactWriter(out_dir, config.config_hash(), config.seed)

    symbols, days, closes = read_daily_csv(config.input)
    panel = daily_returns(symbols, days, closes)
    window = WindowSpec(config.window,
                        config.window if config.step is None else config.step)
    wins = pearson_windowed(panel, window, config.min_days)

    if config.drop_policy == "skip-windows":
        kept = [w for w in wins if np.isfinite(w.corr.values).all()]
        skipped = len(wins) - len(kept)
        if skipped:
            warnings.warn(f"skipped {skipped} windows with undefined entries",
                          EstimationWarning, stacklevel=2)
        if not kept:
            raise InsufficientDataError("every window had undefined entries")
        mats = [w.corr for w in kept]
    else:
        mats, _ = _common_clean([w.corr for w in wins], "window matrices")
        kept = wins
    labels = [w.days[-1] for w in kept]

    if config.clean:
        q = mats[0].n_assets / config.window
        mats = [clean_spectrum(eigendecompose(m), q) for m in mats]

    for label, corr in zip(labels, mats):
        writer.matrix(f"corr/{label}", corr)
    dists = [to_distance(m) for m in mats]
    maps = chain_embed(dists, schedule, config.penalty_weight, config.seed,
                       config.n_dim)
    _write_chain(writer, "maps", labels, maps)
    return writer.manifest(config)


def run_pipeline(config: PipelineConfig) -> dict:
    """Dispatch a config to the matching pipeline."""
    if config.mode == "daily":
        return run_daily_pipeline(config)
    return run_intraday_pipeline(config)
