"""End-to-end orchestration: panels -> band coherence -> Rips persistence ->
landscapes -> per-band permutation tests, with every intermediate written to
disk and a hashed manifest written last."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import io
from .errors import ConfigError, DataError
from .homology import betti_curve, rips_persistence
from .inference import GroupSample, bonferroni, permutation_test
from .landscape import DEFAULT_GRID, DEFAULT_MAX_LEVELS, evaluate, landscape_from_diagram, mean_landscape
from .sim import (PRESET_IDS, RNG_ALGORITHM, Ar2Spec, MixingModel, TimeSeriesPanel, preset_model,
                  simulate_mixture)
from .spectral import (DEFAULT_BANDS, KERNELS, TRANSFORMS, band_coherence, coherence_to_distance,
                       smoothed_cross_spectrum)

log = logging.getLogger(__name__)

THREADS_ENV = "TDATS_THREADS"


@dataclass
class GroupConfig:
    name: str
    preset: str | None = None
    c: float = 1.0
    n_subjects: int = 1
    files: list[str] = field(default_factory=list)
    mixing: dict | None = None          # {"A": [[...]], "latent": {...} | [...], "c": ...}
    latent: dict | None = None


@dataclass
class PipelineConfig:
    groups: list[GroupConfig]
    SR: float = 100.0
    T: int = 4096
    seed: int = 0
    bands: dict[str, tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_BANDS))
    kernel: str = "rectangular"
    bandwidth: float | None = None
    demean: bool = False
    transform: str = "one_minus"
    max_dim: int = 2
    levels: int = DEFAULT_MAX_LEVELS
    grid: tuple[float, float, int] = DEFAULT_GRID
    B: int = 999
    alpha: float = 0.05
    test_seed: int = 0
    bonferroni: bool = False
    output: str = "tdats_out"
    save_panels: bool = False

    def validate(self):
        if not self.groups:
            raise ConfigError("config defines no groups")
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate group names in {names}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"unknown transform {self.transform!r}")
        if self.max_dim not in (1, 2, 3):
            raise ConfigError(f"max_dim must be 1, 2 or 3, got {self.max_dim}")
        for name, (lo, hi) in self.bands.items():
            if not 0 <= lo < hi:
                raise ConfigError(f"band {name!r} has invalid limits {lo}, {hi}")
        spans = sorted(self.bands.values())
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            if b0 < a1:
                log.warning("bands (%g, %g) and (%g, %g) overlap", a0, a1, b0, b1)
        for g in self.groups:
            sources = sum(x is not None and x != [] for x in (g.preset, g.files or None, g.mixing))
            if sources != 1:
                raise ConfigError(f"group {g.name!r} needs exactly one of preset, files, mixing")
            if g.preset is not None and str(g.preset) not in PRESET_IDS:
                raise ConfigError(f"group {g.name!r}: unknown preset {g.preset!r}")
            for f in g.files:
                if not Path(f).exists():
                    raise ConfigError(f"group {g.name!r}: input file {f} does not exist")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d["rng"] = RNG_ALGORITHM
        return d


def load_config(path=None, data: dict | None = None, **overrides) -> PipelineConfig:
    """Build a config from a YAML/JSON file or a dict, then apply ``overrides``."""
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: cannot parse config ({e})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a mapping")
        base = path.parent
    else:
        data = dict(data or {})
        base = Path(".")
    data = dict(data)
    data.update({k: v for k, v in overrides.items() if v is not None})

    groups = []
    raw_groups = data.pop("groups", None)
    if raw_groups is None and "preset" in data:
        raw_groups = {f"example-{data['preset']}": {"preset": data.pop("preset"), "c": data.pop("c", 1.0),
                                                     "n_subjects": data.pop("n_subjects", 1)}}
    for name, g in (raw_groups or {}).items():
        g = dict(g)
        files = [str(f if Path(f).is_absolute() else base / f) for f in g.pop("files", [])]
        try:
            groups.append(GroupConfig(name=str(name), files=files, **g))
        except TypeError as e:
            raise ConfigError(f"group {name!r}: {e}") from None

    landscape = data.pop("landscape", {}) or {}
    test = data.pop("test", {}) or {}
    if "bands" in data:
        data["bands"] = {str(k): (float(v[0]), float(v[1])) for k, v in data["bands"].items()}
    kwargs = dict(data)
    if "levels" in landscape:
        kwargs["levels"] = int(landscape["levels"])
    if "grid" in landscape:
        kwargs["grid"] = (float(landscape["grid"][0]), float(landscape["grid"][1]), int(landscape["grid"][2]))
    for key, dest in (("B", "B"), ("alpha", "alpha"), ("seed", "test_seed"), ("bonferroni", "bonferroni")):
        if key in test:
            kwargs[dest] = test[key]
    try:
        cfg = PipelineConfig(groups=groups, **kwargs)
    except TypeError as e:
        raise ConfigError(f"unknown config key: {e}") from None
    return cfg.validate()


def subject_seed(seed: int, group_index: int, subject: int) -> int:
    """Integer seed of one simulated subject, derived from the run seed."""
    return int(np.random.SeedSequence([seed, group_index, subject]).generate_state(1, dtype=np.uint32)[0])


def _group_model(g: GroupConfig) -> MixingModel:
    latent = Ar2Spec.from_dict(g.latent) if g.latent else None
    if g.preset is not None:
        return preset_model(str(g.preset), c=g.c, latent=latent)
    m = g.mixing
    A = np.asarray(m["A"], dtype=float)
    lat = m.get("latent", g.latent or {"M": 1.05, "psi": 0.1})
    specs = [Ar2Spec.from_dict(s) for s in lat] if isinstance(lat, list) else [Ar2Spec.from_dict(lat)] * A.shape[1]
    return MixingModel(A=A, latent_specs=specs, noise_sd=float(m.get("c", g.c)), name=g.name)


def group_panels(cfg: PipelineConfig, gi: int) -> tuple[list[tuple[str, TimeSeriesPanel, dict]], MixingModel | None]:
    """Subject panels of group ``gi`` with per-subject provenance, plus the generating model if simulated."""
    g = cfg.groups[gi]
    if g.files:
        return [(Path(f).stem, io.read_panel_csv(f, SR=cfg.SR), {"file": f}) for f in g.files], None
    model = _group_model(g)
    out = []
    for i in range(g.n_subjects):
        s = subject_seed(cfg.seed, gi, i)
        panel = simulate_mixture(model, T=cfg.T, SR=cfg.SR, seed=s)
        out.append((f"s{i:03d}", panel, {"seed": s}))
    return out, model


@dataclass
class SubjectResult:
    name: str
    diagrams: dict          # band -> PersistenceDiagram
    landscapes: dict        # (band, dim) -> PersistenceLandscape
    files: list


def analyze_panel(panel: TimeSeriesPanel, cfg: PipelineConfig, outdir: Path | None = None) -> SubjectResult:
    """Coherence, distance, diagram and landscapes for every band of one panel."""
    spec = smoothed_cross_spectrum(panel, kernel=cfg.kernel, bandwidth=cfg.bandwidth, demean=cfg.demean)
    diagrams, landscapes, files = {}, {}, []
    for band, lims in cfg.bands.items():
        C = band_coherence(spec, lims)
        D = coherence_to_distance(C, cfg.transform)
        pd = rips_persistence(D, cfg.max_dim)
        pd.meta.update(band=band, band_hz=list(lims))
        diagrams[band] = pd
        for k in range(cfg.max_dim):
            landscapes[band, k] = landscape_from_diagram(pd, k, max_levels=cfg.levels)
        if outdir is not None:
            bdir = outdir / band
            files += [
                io.write_matrix_csv(C.values, C.labels, bdir / "coherence.csv"),
                io.write_json({"labels": C.labels, "band": list(C.band), "SR": C.SR, **C.meta},
                              bdir / "coherence.json"),
                io.write_matrix_csv(D.values, D.labels, bdir / "distance.csv"),
                io.write_json({"labels": D.labels, **D.meta}, bdir / "distance.json"),
                io.write_json(pd.to_dict(), bdir / "diagram.json"),
                io.write_rows_csv(betti_curve(pd).to_csv_rows(), bdir / "betti.csv"),
            ]
            files += [io.write_json(landscapes[band, k].to_dict(), bdir / f"landscape_h{k}.json")
                      for k in range(cfg.max_dim)]
    return SubjectResult("", diagrams, landscapes, files)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer") from None


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and write all artifacts under ``cfg.output``.

    Returns the manifest (also written to ``manifest.json``), whose
    ``reports`` entry maps ``band -> dim -> report dict`` when two or more
    groups are configured (the first two are compared).
    """
    cfg.validate()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    files = [io.write_json(cfg.to_dict(), out / "config.json")]

    def work(args):
        gi, name, panel, prov = args
        sdir = out / cfg.groups[gi].name / name
        fs = []
        if cfg.save_panels:
            fs.append(io.write_panel_csv(panel, sdir / "panel.csv", sidecar=prov))
        else:
            fs.append(io.write_json(dict(prov, SR=panel.SR), sdir / "subject.json"))
        res = analyze_panel(panel, cfg, sdir)
        res.name = name
        res.files = fs + res.files
        return gi, res

    jobs = []
    for gi in range(len(cfg.groups)):
        subjects, model = group_panels(cfg, gi)
        jobs += [(gi, n, p, prov) for n, p, prov in subjects]
        if model is not None:
            files.append(io.write_json(model.to_dict(), out / cfg.groups[gi].name / "model.json"))
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        results = list(ex.map(work, jobs))

    per_group: dict[int, list[SubjectResult]] = {gi: [] for gi in range(len(cfg.groups))}
    for gi, res in results:
        per_group[gi].append(res)
        files += res.files

    for band in cfg.bands:
        for gi, g in enumerate(cfg.groups):
            for k in range(cfg.max_dim):
                mean = mean_landscape([r.landscapes[band, k] for r in per_group[gi]], cfg.grid)
                t = np.linspace(*cfg.grid[:2], cfg.grid[2])
                vals = evaluate(mean, cfg.grid)
                rows = [["t"] + [f"lambda_{j + 1}" for j in range(vals.shape[0])]]
                rows += [[io.fmt(x)] + [io.fmt(v) for v in col] for x, col in zip(t, vals.T)]
                files.append(io.write_rows_csv(rows, out / "summary" / band / f"{g.name}_mean_h{k}.csv"))

    reports: dict = {}
    if len(cfg.groups) >= 2:
        g1, g2 = cfg.groups[0], cfg.groups[1]
        for band in cfg.bands:
            reports[band] = {}
            for k in range(cfg.max_dim):
                s1 = GroupSample([r.landscapes[band, k] for r in per_group[0]], g1.name, band)
                s2 = GroupSample([r.landscapes[band, k] for r in per_group[1]], g2.name, band)
                rep = permutation_test(s1, s2, B=cfg.B, alpha=cfg.alpha, seed=cfg.test_seed, levels=cfg.levels)
                reports[band][k] = rep
        if cfg.bonferroni:
            for k in range(cfg.max_dim):
                adj = bonferroni({b: reports[b][k].p_value for b in cfg.bands})
                for b, p in adj.items():
                    reports[b][k].config["p_value_bonferroni"] = p
        for band, per_dim in reports.items():
            for k, rep in per_dim.items():
                files.append(io.write_json(rep.to_dict(include_null=False), out / "summary" / band / f"test_h{k}.json"))
                files.append(io.write_rows_csv([["null_statistic"]] + [[io.fmt(x)] for x in rep.null_sample],
                                               out / "summary" / band / f"null_h{k}.csv"))

    manifest = {
        "artifacts": [{"path": str(Path(f).relative_to(out)), "sha256": io.sha256(f)} for f in sorted(map(str, files))],
        "reports": {b: {str(k): r.to_dict(include_null=False) for k, r in d.items()} for b, d in reports.items()},
    }
    io.write_json(manifest, out / "manifest.json")
    return manifest
