"""File formats: joint-spectrum CSV, metadata and report YAML, PPM heatmaps, sweep CSV."""
import io
import json
import math
from pathlib import Path

import numpy as np
import yaml

from .biphoton import JointSpectrumGrid

SWEEP_COLUMNS = ("xi_deg", "r", "metric", "entropy_bits", "K", "fwhm_s_nm", "fwhm_i_nm")


class GridFormatError(ValueError):
    pass


def plain(obj):
    """Nested structure with only YAML/JSON-safe builtins."""
    def conv(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, (set, frozenset)):
            return sorted(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return str(o)
    return json.loads(json.dumps(obj, default=conv))


def _comment(fields):
    return "# " + " ".join(f"{k}={v}" for k, v in fields.items())


def artifact_stem(kind, xi_deg, grid_hash):
    return f"{kind}_xi{xi_deg:+07.2f}_{grid_hash}"


def format_grid_csv(grid, config_hash=None):
    head = {"config_hash": config_hash, "grid_hash": grid.grid_hash,
            "sellmeier": grid.metadata.get("sellmeier", "unknown").replace(" ", "_"),
            "lambda_s0_nm": repr(float(grid.lambda_s0)), "lambda_i0_nm": repr(float(grid.lambda_i0))}
    buf = io.StringIO()
    buf.write(_comment(head) + "\n")
    buf.write("lambda_s_nm," + ",".join(f"{v:.10e}" for v in grid.lambda_s) + "\n")
    buf.write("lambda_i_nm," + ",".join(f"{v:.10e}" for v in grid.lambda_i) + "\n")
    np.savetxt(buf, grid.intensity, fmt="%.10e", delimiter=",")
    return buf.getvalue()


def read_grid_csv(path):
    """Intensity-only grid from a file written by :func:`format_grid_csv`."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    header = {}
    if lines and lines[0].startswith("#"):
        for tok in lines[0][1:].split():
            k, _, v = tok.partition("=")
            header[k] = v
        lines = lines[1:]
    if len(lines) < 3 or not lines[0].startswith("lambda_s_nm,") or not lines[1].startswith("lambda_i_nm,"):
        raise GridFormatError(f"{path}: not a joint-spectrum grid file")
    try:
        ls = np.array(lines[0].split(",")[1:], dtype=float)
        li = np.array(lines[1].split(",")[1:], dtype=float)
        S = np.array([ln.split(",") for ln in lines[2:] if ln.strip()], dtype=float)
    except ValueError as exc:
        raise GridFormatError(f"{path}: {exc}") from None
    if S.shape != (ls.size, li.size):
        raise GridFormatError(f"{path}: matrix shape {S.shape} does not match axes ({ls.size}, {li.size})")
    if not np.all(np.isfinite(S)):
        raise GridFormatError(f"{path}: non-finite intensity values")
    l0s = float(header["lambda_s0_nm"]) if "lambda_s0_nm" in header else None
    l0i = float(header["lambda_i0_nm"]) if "lambda_i0_nm" in header else None
    meta = {"source": "grid_csv", "sellmeier": header.get("sellmeier"), "config_hash": header.get("config_hash")}
    try:
        return JointSpectrumGrid(ls, li, S, None, l0s, l0i, meta)
    except ValueError as exc:
        raise GridFormatError(f"{path}: {exc}") from None


def is_grid_csv(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            return line.startswith("lambda_s_nm,") and not line.startswith("lambda_s_nm,lambda_i_nm")
    return False


def dump_yaml(data):
    return yaml.safe_dump(plain(data), sort_keys=True, default_flow_style=False)


def _viridis_lut():
    from matplotlib import colormaps
    return (colormaps["viridis"](np.linspace(0.0, 1.0, 256))[:, :3] * 255.0 + 0.5).astype(np.uint8)


def heatmap_ppm(S, comment=None):
    """Binary PPM (P6) of a matrix: first axis left to right, second bottom to top."""
    S = np.asarray(S, dtype=float)
    peak = S.max()
    norm = S / peak if peak > 0 else np.zeros_like(S)
    idx = np.clip(np.round(norm * 255.0), 0, 255).astype(np.uint8)
    img = _viridis_lut()[idx.T[::-1]]
    h, w = img.shape[:2]
    head = "P6\n" + (f"# {comment}\n" if comment else "") + f"{w} {h}\n255\n"
    return head.encode("ascii") + img.tobytes()


def write_jsa_outputs(grid, out_dir, config_hash):
    """Grid CSV, heatmap and metadata; returns the three paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = artifact_stem("jsa", grid.metadata.get("xi_deg", math.nan), grid.grid_hash)
    csv_path, ppm_path, meta_path = out / f"{stem}.csv", out / f"{stem}.ppm", out / f"{stem}.yaml"
    csv_path.write_text(format_grid_csv(grid, config_hash), encoding="utf-8", newline="\n")
    ppm_path.write_bytes(heatmap_ppm(grid.intensity, f"config_hash={config_hash} grid_hash={grid.grid_hash}"))
    meta = dict(grid.metadata, config_hash=config_hash)
    meta_path.write_text(dump_yaml(meta), encoding="utf-8", newline="\n")
    return csv_path, ppm_path, meta_path


def _fmt(v):
    return "nan" if v is None or not math.isfinite(v) else f"{v:.8g}"


def format_sweep_csv(result, config_hash=None):
    lines = []
    if config_hash:
        lines.append(_comment({"config_hash": config_hash, "xi_uncorr": _fmt(result.xi_uncorr)}))
    lines.append(",".join(SWEEP_COLUMNS))
    for p in result.points:
        lines.append(",".join(_fmt(getattr(p, c)) for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def read_sweep_csv(path):
    rows = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln and not ln.startswith("#")]
    if not rows or tuple(rows[0].split(",")) != SWEEP_COLUMNS:
        raise GridFormatError(f"{path}: not a sweep report")
    return np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
