"""Grayscale image files, run manifests, key-value configs and CSV output.

Images are stored as 8- or 16-bit grayscale PGM (binary P5, big-endian
16-bit samples per the netpbm convention) or PNG. Reading maps integer
samples linearly onto [0, 1]; writing maps [0, 1] onto the full integer
range with round-half-up, so endpoints survive a round trip exactly and
interior values move by at most half a quantization step.

A manifest is a plain-text key-value file with one block per frame carrying
everything reconstruction needs (shifts, defocus parameters, noise record,
frame filename) - deliberately not the ground truth.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .optics import DefocusSpec
from .simulate import NoiseSpec

__all__ = [
    "read_image",
    "write_image",
    "Manifest",
    "FrameEntry",
    "write_manifest",
    "read_manifest",
    "parse_config_text",
    "read_config_file",
    "write_csv",
]

MANIFEST_NAME = "manifest.txt"


def _max_value(bit_depth: int) -> int:
    if bit_depth not in (8, 16):
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    return (1 << bit_depth) - 1


def write_image(path, image: np.ndarray, bit_depth: int = 16) -> None:
    """Quantize a [0, 1] image to PGM or PNG (extension decides the format)."""
    path = Path(path)
    maxval = _max_value(bit_depth)
    data = np.floor(np.clip(image, 0.0, 1.0) * maxval + 0.5).astype(np.uint32)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        header = f"P5\n{image.shape[1]} {image.shape[0]}\n{maxval}\n".encode("ascii")
        samples = data.astype(">u2" if bit_depth == 16 else "u1")
        path.write_bytes(header + samples.tobytes())
    elif suffix == ".png":
        if bit_depth == 8:
            Image.fromarray(data.astype(np.uint8)).save(path)
        else:
            Image.fromarray(data.astype(np.uint16)).save(path)
    else:
        raise ValueError(f"unsupported image format {suffix!r} (use .pgm or .png)")


def _read_pgm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if raw[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval; '#' comments allowed
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        fields.append(int(raw[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    dtype = ">u2" if maxval > 255 else "u1"
    expected = width * height * (2 if maxval > 255 else 1)
    body = raw[pos : pos + expected]
    if len(body) != expected:
        raise ValueError(f"{path}: PGM payload is truncated")
    samples = np.frombuffer(body, dtype=dtype).reshape(height, width)
    return samples.astype(np.float64) / maxval


def read_image(path) -> np.ndarray:
    """Load a grayscale PGM or PNG as float64 intensities in [0, 1]."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"image file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return _read_pgm(path)
    if suffix == ".png":
        with Image.open(path) as im:
            if im.mode in ("L", "P"):
                return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
            if im.mode in ("I", "I;16"):
                return np.asarray(im, dtype=np.float64) / 65535.0
            raise ValueError(f"{path}: unsupported PNG mode {im.mode!r}")
    raise ValueError(f"unsupported image format {suffix!r} (use .pgm or .png)")


@dataclass(frozen=True)
class FrameEntry:
    filename: str
    shift: tuple[float, float]
    defocus: DefocusSpec
    noise_stream: int


@dataclass(frozen=True)
class Manifest:
    tau: int
    lr_shape: tuple[int, int]
    seed: int
    noise: NoiseSpec
    frames: tuple


def write_manifest(path, manifest: Manifest) -> None:
    lines = [
        "# reconstruction manifest v1",
        f"tau = {manifest.tau}",
        f"lr_rows = {manifest.lr_shape[0]}",
        f"lr_cols = {manifest.lr_shape[1]}",
        f"frames = {len(manifest.frames)}",
        f"seed = {manifest.seed}",
        f"noise_kind = {manifest.noise.kind}",
        f"noise_photon_budget = {manifest.noise.photon_budget!r}",
        f"noise_snr_db = {manifest.noise.snr_db!r}",
        f"noise_seed = {manifest.noise.seed}",
    ]
    for index, entry in enumerate(manifest.frames):
        spec = entry.defocus
        lines += [
            "",
            f"[frame {index}]",
            f"file = {entry.filename}",
            f"shift_row = {entry.shift[0]!r}",
            f"shift_col = {entry.shift[1]!r}",
            f"d = {spec.d!r}",
            f"n_zones = {spec.n_zones}",
            f"focal_index = {spec.focal_index}",
            f"orientation = {spec.orientation}",
            f"zone_width = {spec.zone_width}",
            f"psf_size = {spec.psf_size}",
            f"pupil_grid = {spec.pupil_grid}",
            f"noise_stream = {entry.noise_stream}",
        ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines with '#' comments and [section] headers.

    Section headers prefix the keys that follow: `[frame 0]` turns `d = 1`
    into the entry ('frame 0', 'd') -> '1'; top-level keys map from
    (None, key).
    """
    entries: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        entries[(section, key)] = value
    return entries


def read_config_file(path) -> dict:
    """Flat config file: top-level `key = value` pairs only."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    entries = parse_config_text(path.read_text(encoding="utf-8"))
    flat = {}
    for (section, key), value in entries.items():
        if section is not None:
            raise ValueError(f"config file must not contain sections, found [{section}]")
        flat[key] = value
    return flat


def read_manifest(path) -> Manifest:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    entries = parse_config_text(path.read_text(encoding="ascii"))

    def top(key):
        try:
            return entries[(None, key)]
        except KeyError:
            raise ValueError(f"{path}: manifest is missing key {key!r}") from None

    n_frames = int(top("frames"))
    noise = NoiseSpec(
        kind=top("noise_kind"),
        photon_budget=float(top("noise_photon_budget")),
        snr_db=float(top("noise_snr_db")),
        seed=int(top("noise_seed")),
    )
    frames = []
    for index in range(n_frames):
        sec = f"frame {index}"

        def frame_key(key, sec=sec):
            try:
                return entries[(sec, key)]
            except KeyError:
                raise ValueError(
                    f"{path}: frame {index} is missing key {key!r}"
                ) from None

        spec = DefocusSpec(
            d=float(frame_key("d")),
            n_zones=int(frame_key("n_zones")),
            focal_index=int(frame_key("focal_index")),
            orientation=frame_key("orientation"),
            zone_width=int(frame_key("zone_width")),
            psf_size=int(frame_key("psf_size")),
            pupil_grid=int(frame_key("pupil_grid")),
        )
        frames.append(
            FrameEntry(
                filename=frame_key("file"),
                shift=(float(frame_key("shift_row")), float(frame_key("shift_col"))),
                defocus=spec,
                noise_stream=int(frame_key("noise_stream")),
            )
        )
    return Manifest(
        tau=int(top("tau")),
        lr_shape=(int(top("lr_rows")), int(top("lr_cols"))),
        seed=int(top("seed")),
        noise=noise,
        frames=tuple(frames),
    )


def write_csv(path, schema: str, header, rows) -> None:
    """CSV with a schema-version comment line above the header row."""
    with open(path, "w", newline="", encoding="ascii") as handle:
        handle.write(f"# {schema}\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
