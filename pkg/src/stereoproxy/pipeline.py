"""Dataset manifests, run configuration, and the frame-level pipeline.

The pipeline is two-staged: seed generation (match + filter) and consensus
distillation, plus evaluation over explicit dataset manifests. Frames are
embarrassingly parallel; every per-frame random stream is derived from the
global seed and the frame index (SHA-256 of "<seed>:<index>", first 8
bytes, little-endian), so outputs are byte-identical at any thread count.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import completion, consensus, matching, metrics, seeds as seeds_mod, sgm
from .raster_io import (
    Calibration,
    colorize,
    load_disparity_png,
    load_image,
    save_disparity_png,
    save_image,
    to_grayscale,
)


class ConfigError(ValueError):
    """Bad configuration or manifest; the CLI maps this to exit code 1."""


@dataclass
class Frame:
    name: str
    left: str
    right: str
    gt_all: str | None = None
    gt_noc: str | None = None
    focal: float | None = None
    baseline: float | None = None

    def calibration(self) -> Calibration | None:
        if self.focal is None or self.baseline is None:
            return None
        return Calibration(self.focal, self.baseline)


def load_manifest(path) -> list[Frame]:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(payload, dict) or "frames" not in payload:
        raise ConfigError(f"{path}: manifest needs a top-level 'frames' list")
    frames = []
    names = set()
    for i, entry in enumerate(payload["frames"]):
        if "left" not in entry or "right" not in entry:
            raise ConfigError(f"{path}: frame {i} needs 'left' and 'right' paths")
        name = entry.get("name") or Path(entry["left"]).stem
        if name in names:
            raise ConfigError(f"{path}: duplicate frame name {name!r}")
        names.add(name)
        frames.append(Frame(
            name=name,
            left=entry["left"],
            right=entry["right"],
            gt_all=entry.get("gt_all"),
            gt_noc=entry.get("gt_noc"),
            focal=entry.get("focal"),
            baseline=entry.get("baseline"),
        ))
    if not frames:
        raise ConfigError(f"{path}: manifest lists no frames")
    return frames


def save_manifest(frames: list[Frame], path) -> None:
    payload = {"frames": []}
    for f in frames:
        entry = {"name": f.name, "left": f.left, "right": f.right}
        for key in ("gt_all", "gt_noc", "focal", "baseline"):
            if getattr(f, key) is not None:
                entry[key] = getattr(f, key)
        payload["frames"].append(entry)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def generate_manifest(raw_root, exclude: list[str] | None = None) -> list[Frame]:
    """Build a manifest from the standard raw driving-dataset layout.

    Expects <root>/<date>/<drive>/image_02/data/*.png with the right view
    under image_03. Drives whose directory name appears in `exclude` are
    skipped (the caller supplies the exclusion list explicitly).
    """
    root = Path(raw_root)
    excluded = set(exclude or [])
    frames = []
    for left_path in sorted(root.glob("*/*/image_02/data/*.png")):
        drive = left_path.parents[2].name
        if drive in excluded:
            continue
        right_path = Path(str(left_path).replace("/image_02/", "/image_03/"))
        if not right_path.exists():
            continue
        frames.append(Frame(
            name=f"{drive}_{left_path.stem}",
            left=str(left_path),
            right=str(right_path),
        ))
    if not frames:
        raise ConfigError(f"no stereo pairs found under {raw_root}")
    return frames


# consensus sampling defaults per seed source when p_sample = auto
P_SAMPLE_CONFIDENCE = 1.0 / 20.0
P_SAMPLE_LRC = 1.0 / 200.0


@dataclass
class PipelineConfig:
    matcher: str = "sgm"            # bm | sgm
    cost: str = "census"            # census | sad
    window: int = 5
    d_max: int = 192
    subpixel: bool = True
    sgm_params: sgm.SgmParams = field(default_factory=sgm.SgmParams)
    filter_cfg: seeds_mod.FilterConfig = field(
        default_factory=lambda: seeds_mod.FilterConfig(target_density=0.12)
    )
    completer_cfg: completion.CompleterConfig = field(default_factory=completion.CompleterConfig)
    n: int = 50
    gamma: float = 3.0
    p_sample: float | None = None   # None = auto per filter mode
    flip_prob: float = 0.5
    gain_range: tuple = (0.8, 1.2)
    shift_range: tuple = (-0.1, 0.1)
    output_dir: str = "out"
    threads: int = 1
    seed: int = 0
    invalid_pred: str = "exclude"   # eval policy for invalid predicted pixels

    def validate(self) -> None:
        if self.matcher not in ("bm", "sgm"):
            raise ConfigError(f"matcher must be bm or sgm, got {self.matcher!r}")
        if self.cost not in ("census", "sad"):
            raise ConfigError(f"cost must be census or sad, got {self.cost!r}")
        if self.filter_cfg.mode == "confidence" and self.matcher != "bm":
            raise ConfigError("the confidence filter needs the bm matcher's volume")
        if self.window % 2 == 0 or not 3 <= self.window <= 9:
            raise ConfigError(f"matcher window must be odd and in [3, 9], got {self.window}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.d_max < 1:
            raise ConfigError("d_max must be >= 1")
        if self.invalid_pred not in ("error", "exclude"):
            raise ConfigError("invalid_pred must be error or exclude")

    def resolved_p_sample(self) -> float:
        if self.p_sample is not None:
            return self.p_sample
        return P_SAMPLE_CONFIDENCE if self.filter_cfg.mode == "confidence" else P_SAMPLE_LRC

    def consensus_cfg(self, rng_seed: int) -> consensus.ConsensusConfig:
        return consensus.ConsensusConfig(
            n=self.n,
            gamma=self.gamma,
            p_sample=self.resolved_p_sample(),
            flip_prob=self.flip_prob,
            gain_range=self.gain_range,
            shift_range=self.shift_range,
            rng_seed=rng_seed,
        )


_INI_LAYOUT = {
    "matcher": ("kind", "cost", "window", "d_max", "subpixel"),
    "sgm": ("p1", "p2", "paths"),
    "filter": ("mode", "pkr_min", "lrc_tau", "target_density"),
    "completer": ("mode", "sigma_spatial", "sigma_color", "k_neighbors", "command", "workdir"),
    "consensus": ("n", "gamma", "p_sample", "flip_prob", "gain_lo", "gain_hi", "shift_lo", "shift_hi"),
    "run": ("output_dir", "threads", "seed", "invalid_pred"),
}


def dump_config(cfg: PipelineConfig) -> str:
    """Every setting as key = value, sections per stage; parseable back."""
    fc, cc = cfg.filter_cfg, cfg.completer_cfg
    parser = configparser.ConfigParser()
    parser["matcher"] = {
        "kind": cfg.matcher,
        "cost": cfg.cost,
        "window": str(cfg.window),
        "d_max": str(cfg.d_max),
        "subpixel": str(cfg.subpixel).lower(),
    }
    parser["sgm"] = {
        "p1": repr(cfg.sgm_params.p1),
        "p2": repr(cfg.sgm_params.p2),
        "paths": str(cfg.sgm_params.paths),
    }
    parser["filter"] = {
        "mode": fc.mode,
        "pkr_min": repr(fc.pkr_min),
        "lrc_tau": repr(fc.lrc_tau),
        "target_density": "" if fc.target_density is None else repr(fc.target_density),
    }
    parser["completer"] = {
        "mode": cc.mode,
        "sigma_spatial": repr(cc.sigma_spatial),
        "sigma_color": repr(cc.sigma_color),
        "k_neighbors": str(cc.k_neighbors),
        "command": cc.command or "",
        "workdir": cc.workdir or "",
    }
    parser["consensus"] = {
        "n": str(cfg.n),
        "gamma": repr(cfg.gamma),
        "p_sample": "auto" if cfg.p_sample is None else repr(cfg.p_sample),
        "flip_prob": repr(cfg.flip_prob),
        "gain_lo": repr(cfg.gain_range[0]),
        "gain_hi": repr(cfg.gain_range[1]),
        "shift_lo": repr(cfg.shift_range[0]),
        "shift_hi": repr(cfg.shift_range[1]),
    }
    parser["run"] = {
        "output_dir": cfg.output_dir,
        "threads": str(cfg.threads),
        "seed": str(cfg.seed),
        "invalid_pred": cfg.invalid_pred,
    }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def load_config(path) -> PipelineConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path) as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    for section in parser.sections():
        if section not in _INI_LAYOUT:
            raise ConfigError(f"{path}: unknown config section [{section}]")
        for key in parser[section]:
            if key not in _INI_LAYOUT[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")

    cfg = PipelineConfig()

    def get(section, key, conv, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for {section}.{key}: {raw!r}") from exc

    def as_bool(raw):
        low = raw.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(raw)

    cfg.matcher = get("matcher", "kind", str, cfg.matcher)
    cfg.cost = get("matcher", "cost", str, cfg.cost)
    cfg.window = get("matcher", "window", int, cfg.window)
    cfg.d_max = get("matcher", "d_max", int, cfg.d_max)
    cfg.subpixel = get("matcher", "subpixel", as_bool, cfg.subpixel)
    try:
        cfg.sgm_params = sgm.SgmParams(
            p1=get("sgm", "p1", float, cfg.sgm_params.p1),
            p2=get("sgm", "p2", float, cfg.sgm_params.p2),
            paths=get("sgm", "paths", int, cfg.sgm_params.paths),
            tau_lrc=get("filter", "lrc_tau", float, cfg.sgm_params.tau_lrc),
        )
        cfg.filter_cfg = seeds_mod.FilterConfig(
            mode=get("filter", "mode", str, cfg.filter_cfg.mode),
            pkr_min=get("filter", "pkr_min", float, cfg.filter_cfg.pkr_min),
            lrc_tau=get("filter", "lrc_tau", float, cfg.filter_cfg.lrc_tau),
            target_density=get(
                "filter", "target_density",
                lambda raw: None if raw.strip() == "" else float(raw),
                cfg.filter_cfg.target_density,
            ),
        )
        cfg.completer_cfg = completion.CompleterConfig(
            mode=get("completer", "mode", str, "reference"),
            sigma_spatial=get("completer", "sigma_spatial", float, 14.0),
            sigma_color=get("completer", "sigma_color", float, 10.0),
            k_neighbors=get("completer", "k_neighbors", int, 32),
            command=get("completer", "command", lambda s: s or None, None),
            workdir=get("completer", "workdir", lambda s: s or None, None),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg.n = get("consensus", "n", int, cfg.n)
    cfg.gamma = get("consensus", "gamma", float, cfg.gamma)
    cfg.p_sample = get(
        "consensus", "p_sample",
        lambda raw: None if raw.strip() in ("", "auto") else float(raw),
        cfg.p_sample,
    )
    cfg.flip_prob = get("consensus", "flip_prob", float, cfg.flip_prob)
    cfg.gain_range = (
        get("consensus", "gain_lo", float, cfg.gain_range[0]),
        get("consensus", "gain_hi", float, cfg.gain_range[1]),
    )
    cfg.shift_range = (
        get("consensus", "shift_lo", float, cfg.shift_range[0]),
        get("consensus", "shift_hi", float, cfg.shift_range[1]),
    )
    cfg.output_dir = get("run", "output_dir", str, cfg.output_dir)
    cfg.threads = get("run", "threads", int, cfg.threads)
    cfg.seed = get("run", "seed", int, cfg.seed)
    cfg.invalid_pred = get("run", "invalid_pred", str, cfg.invalid_pred)
    cfg.validate()
    return cfg


def frame_seed(global_seed: int, index: int) -> int:
    """Per-frame RNG seed: first 8 bytes of SHA-256("<seed>:<index>")."""
    digest = hashlib.sha256(f"{global_seed}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


def _load_pair(frame: Frame) -> tuple[np.ndarray, np.ndarray]:
    left = load_image(frame.left)
    right = load_image(frame.right)
    if left.shape[:2] != right.shape[:2]:
        raise ValueError(f"{frame.name}: left/right dimensions differ")
    return left, right


def match_frame(left: np.ndarray, right: np.ndarray, cfg: PipelineConfig):
    """Core matcher: (left disparity, right disparity, confidence or None)."""
    gl = to_grayscale(left)
    gr = to_grayscale(right)
    if cfg.cost == "census":
        volume = matching.build_cost_volume(
            matching.census_transform(gl, cfg.window),
            matching.census_transform(gr, cfg.window),
            cfg.d_max,
        )
    else:
        volume = matching.build_cost_volume_sad(gl, gr, cfg.d_max, cfg.window)
    confidence = None
    if cfg.matcher == "bm":
        d_left = matching.wta(volume, cfg.subpixel)
        confidence = matching.confidence_pkr(volume, d_left)
        d_right = matching.right_disparity(volume, cfg.subpixel)
    else:
        aggregated = sgm.aggregate(volume, cfg.sgm_params)
        d_left = matching.wta(aggregated, cfg.subpixel)
        d_right = matching.right_disparity(aggregated, cfg.subpixel)
    return d_left, d_right, confidence


def filter_frame(left: np.ndarray, right: np.ndarray, cfg: PipelineConfig) -> seeds_mod.SeedSet:
    """Match then reduce to reliable sparse seeds per the configured filter."""
    d_left, d_right, confidence = match_frame(left, right, cfg)
    if cfg.filter_cfg.mode == "confidence":
        return seeds_mod.filter_confidence(d_left, confidence, d_right, cfg.filter_cfg)
    consistent = sgm.lrc_filter(d_left, d_right, cfg.filter_cfg.lrc_tau)
    return seeds_mod.filter_lrc(consistent)


def _run_frames(frames: list[Frame], worker, threads: int):
    """Run worker(index, frame) over all frames; returns (results, errors).

    Results and errors are reported in manifest order no matter the thread
    count. A failing frame never disturbs the others.
    """
    results: list = [None] * len(frames)
    errors: list = [None] * len(frames)

    def guarded(i):
        try:
            results[i] = worker(i, frames[i])
        except Exception as exc:   # isolate per-frame failures
            errors[i] = f"{frames[i].name}: {exc}"

    if threads <= 1:
        for i in range(len(frames)):
            guarded(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(guarded, range(len(frames))))
    return results, [e for e in errors if e is not None]


def run_match(frames: list[Frame], cfg: PipelineConfig, log=print) -> int:
    """Write left/right disparity PNGs per frame; returns failure count."""
    out = Path(cfg.output_dir)
    (out / "disp_left").mkdir(parents=True, exist_ok=True)
    (out / "disp_right").mkdir(parents=True, exist_ok=True)

    def worker(i, frame):
        left, right = _load_pair(frame)
        d_left, d_right, _ = match_frame(left, right, cfg)
        save_disparity_png(d_left, out / "disp_left" / f"{frame.name}.png")
        save_disparity_png(d_right, out / "disp_right" / f"{frame.name}.png")
        return frame.name

    results, errors = _run_frames(frames, worker, cfg.threads)
    for name in results:
        if name is not None:
            log(f"match {name}: ok")
    for message in errors:
        log(f"match FAILED {message}")
    return len(errors)


def run_filter(frames: list[Frame], cfg: PipelineConfig, log=print) -> int:
    """Write one seed text file per frame; logs density statistics."""
    out = Path(cfg.output_dir)
    (out / "seeds").mkdir(parents=True, exist_ok=True)

    def worker(i, frame):
        left, right = _load_pair(frame)
        seed_set = filter_frame(left, right, cfg)
        seeds_mod.save_seeds(seed_set, out / "seeds" / f"{frame.name}.txt")
        density = len(seed_set) / (seed_set.width * seed_set.height)
        return frame.name, len(seed_set), density

    results, errors = _run_frames(frames, worker, cfg.threads)
    for r in results:
        if r is not None:
            name, count, density = r
            log(f"filter {name}: {count} seeds, density {100 * density:.2f}%")
            if count == 0:
                log(f"filter {name}: WARNING empty seed set")
    for message in errors:
        log(f"filter FAILED {message}")
    return len(errors)


def _make_completer(cfg: PipelineConfig, frame_name: str):
    ccfg = cfg.completer_cfg
    if ccfg.mode == "external":
        base = Path(ccfg.workdir) if ccfg.workdir else Path(cfg.output_dir) / "completer_work"
        ccfg = completion.CompleterConfig(
            sigma_spatial=ccfg.sigma_spatial,
            sigma_color=ccfg.sigma_color,
            k_neighbors=ccfg.k_neighbors,
            mode="external",
            command=ccfg.command,
            workdir=str(base / frame_name),
        )
    return partial(completion.complete, cfg=ccfg)


def run_distill(frames: list[Frame], cfg: PipelineConfig, log=print) -> int:
    """Consensus-distill proxies from stored seeds; writes PNG + sidecar."""
    out = Path(cfg.output_dir)
    (out / "proxy").mkdir(parents=True, exist_ok=True)

    def worker(i, frame):
        left = load_image(frame.left)
        seed_set = seeds_mod.load_seeds(out / "seeds" / f"{frame.name}.txt")
        rng_seed = frame_seed(cfg.seed, i)
        proxy = consensus.distill(
            left, seed_set, _make_completer(cfg, frame.name), cfg.consensus_cfg(rng_seed)
        )
        save_disparity_png(proxy, out / "proxy" / f"{frame.name}.png")
        sidecar = (
            f"density_pct = {100 * proxy.density():.2f}\n"
            f"n = {cfg.n}\n"
            f"gamma = {cfg.gamma!r}\n"
            f"rng_seed = {rng_seed}\n"
        )
        (out / "proxy" / f"{frame.name}.txt").write_text(sidecar)
        return frame.name, proxy.density()

    results, errors = _run_frames(frames, worker, cfg.threads)
    for r in results:
        if r is not None:
            log(f"distill {r[0]}: density {100 * r[1]:.2f}%")
    for message in errors:
        log(f"distill FAILED {message}")
    return len(errors)


def run_holefill(pred_dir, out_dir, threads: int = 1, log=print) -> int:
    """Fill every disparity PNG in pred_dir to 100% density."""
    pred_dir = Path(pred_dir)
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    files = sorted(pred_dir.glob("*.png"))
    if not files:
        raise ConfigError(f"no disparity PNGs under {pred_dir}")
    pseudo = [Frame(name=f.stem, left=str(f), right=str(f)) for f in files]

    def worker(i, frame):
        disparity = load_disparity_png(frame.left)
        filled = sgm.hole_fill(disparity)
        if not filled.valid.all():
            raise RuntimeError("hole_fill left invalid pixels")
        save_disparity_png(filled, out_path / f"{frame.name}.png")
        return frame.name

    results, errors = _run_frames(pseudo, worker, threads)
    for name in results:
        if name is not None:
            log(f"holefill {name}: ok")
    for message in errors:
        log(f"holefill FAILED {message}")
    return len(errors)


def run_colorize(pred_dir, out_dir, d_max: float, log=print) -> int:
    """Render disparity PNGs to RGB visualizations."""
    pred_dir = Path(pred_dir)
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    files = sorted(pred_dir.glob("*.png"))
    if not files:
        raise ConfigError(f"no disparity PNGs under {pred_dir}")
    failures = 0
    for f in files:
        try:
            save_image(colorize(load_disparity_png(f), d_max), out_path / f.name)
            log(f"colorize {f.stem}: ok")
        except Exception as exc:
            failures += 1
            log(f"colorize FAILED {f.stem}: {exc}")
    return failures


def run_eval(frames: list[Frame], pred_dir, cfg: PipelineConfig, log=print) -> int:
    """Evaluate predictions against manifest ground truth.

    Emits one record per frame and region plus pixel-weighted aggregates;
    frames without ground truth are skipped and counted. Depth metrics are
    added when the frame carries calibration.
    """
    pred_dir = Path(pred_dir)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    def worker(i, frame):
        if frame.gt_all is None:
            return None
        pred = load_disparity_png(pred_dir / f"{frame.name}.png")
        gt_all = load_disparity_png(frame.gt_all)
        record = {"name": frame.name}
        record["all"] = metrics.frame_counts(pred, gt_all, None, cfg.invalid_pred)
        if frame.gt_noc is not None:
            gt_noc = load_disparity_png(frame.gt_noc)
            metrics.noc_mask_from_gt(gt_noc, gt_all)
            record["noc"] = metrics.frame_counts(pred, gt_noc, None, cfg.invalid_pred)
        calib = frame.calibration()
        if calib is not None:
            record["depth"] = metrics.depth_metrics(
                pred, gt_all, calib, None, invalid_pred=cfg.invalid_pred
            )
        return record

    results, errors = _run_frames(frames, worker, cfg.threads)
    skipped = sum(1 for frame in frames if frame.gt_all is None)

    lines = []
    totals = {"all": metrics.DisparityCounts(), "noc": metrics.DisparityCounts()}
    # raw sums for pixel-weighted depth aggregation, rebuilt from per-frame means
    depth_sums = {"se": 0.0, "sle": 0.0, "d1": 0.0, "d2": 0.0, "d3": 0.0, "n": 0}
    evaluated_frames = 0
    for record in results:
        if record is None:
            continue
        evaluated_frames += 1
        for region in ("all", "noc"):
            if region not in record:
                continue
            counts = record[region]
            totals[region].merge(counts)
            lines.append(metrics.format_report(
                _report_from_counts(counts), f"{record['name']}:{region}")
            )
        if "depth" in record:
            dm = record["depth"]
            depth_sums["se"] += dm.rmse**2 * dm.evaluated
            depth_sums["sle"] += dm.rmse_log**2 * dm.evaluated
            depth_sums["d1"] += dm.delta1 * dm.evaluated
            depth_sums["d2"] += dm.delta2 * dm.evaluated
            depth_sums["d3"] += dm.delta3 * dm.evaluated
            depth_sums["n"] += dm.evaluated
            lines.append(metrics.format_report(
                metrics.EvalReport(
                    rmse_m=dm.rmse, rmse_log=dm.rmse_log,
                    delta1=dm.delta1, delta2=dm.delta2, delta3=dm.delta3,
                ),
                f"{record['name']}:depth",
            ))
    for region in ("all", "noc"):
        if totals[region].eval_px > 0:
            lines.append(metrics.format_report(
                _report_from_counts(totals[region]), f"aggregate:{region} (pixel-weighted)")
            )
    if depth_sums["n"] > 0:
        n = depth_sums["n"]
        lines.append(metrics.format_report(
            metrics.EvalReport(
                rmse_m=float(np.sqrt(depth_sums["se"] / n)),
                rmse_log=float(np.sqrt(depth_sums["sle"] / n)),
                delta1=depth_sums["d1"] / n,
                delta2=depth_sums["d2"] / n,
                delta3=depth_sums["d3"] / n,
            ),
            "aggregate:depth (pixel-weighted)",
        ))
    report_text = "".join(lines)
    (out / "eval_report.txt").write_text(report_text)
    for chunk in report_text.splitlines():
        log(chunk)
    log(f"eval: {evaluated_frames} frames evaluated, {skipped} skipped without gt, "
        f"{len(errors)} failed")
    for message in errors:
        log(f"eval FAILED {message}")
    return len(errors)


def _report_from_counts(c: metrics.DisparityCounts) -> metrics.EvalReport:
    report = metrics.EvalReport(
        density_pct=100.0 * c.valid_px / c.total_px if c.total_px else None,
        overlap_pct=100.0 * c.overlap_px / c.gt_px if c.gt_px else None,
        valid_count=c.eval_px,
        correct_count=c.eval_px - c.d1_errors,
    )
    if c.eval_px:
        report.d1_pct = 100.0 * c.d1_errors / c.eval_px
        report.bad2_pct = 100.0 * c.bad2_errors / c.eval_px
        report.accuracy_pct = 100.0 - report.d1_pct
    if c.covered_px:
        report.epe = c.abs_err_sum / c.covered_px
    return report
