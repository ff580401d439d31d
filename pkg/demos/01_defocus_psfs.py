#!/usr/bin/env python3
"""Tour of the defocus optics: PSF kernels and zone masks.

Builds the PSF stack for a frame whose defocus varies across 55 zones,
prints how the kernel support widens away from the focal zone, and saves a
contact sheet of selected kernels plus one zone-mask image.

Run:  python3 demos/01_defocus_psfs.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from sandr import DefocusSpec, build_psf_stack, build_zone_masks
from sandr.fileio import write_image

outdir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output/psfs")
outdir.mkdir(parents=True, exist_ok=True)

spec = DefocusSpec(d=0.06, n_zones=55, focal_index=28, zone_width=3)
stack = build_psf_stack(spec)
print(f"built {spec.n_zones} kernels of {spec.psf_size}x{spec.psf_size} px, "
      f"blur coefficient d={spec.d}")


def rms_radius(kernel):
    c = np.arange(kernel.shape[0]) - kernel.shape[0] // 2
    return float(np.sqrt((kernel * (c[:, None] ** 2 + c[None, :] ** 2)).sum()))


print("\nzone  defocus distance  RMS radius [px]   peak value")
for n in (1, 14, 28, 42, 55):
    k = stack[n - 1]
    dn = spec.d * (spec.focal_index - n)
    print(f"{n:4d}  {dn:+16.3f}  {rms_radius(k):15.3f}   {k.max():10.4f}")

# contact sheet: kernels for a few zones side by side, peak-normalized
cols = []
for n in (1, 14, 28, 42, 55):
    k = stack[n - 1]
    cols.append(k / k.max())
sheet = np.concatenate(cols, axis=1)
write_image(outdir / "psf_sheet.png", sheet, bit_depth=8)
print(f"\nwrote {outdir / 'psf_sheet.png'} (zones 1, 14, 28, 42, 55)")

masks = build_zone_masks(165, 165, spec)
striping = sum((n % 2) * masks[n] for n in range(spec.n_zones))
write_image(outdir / "zone_bands.png", striping, bit_depth=8)
print(f"wrote {outdir / 'zone_bands.png'} (alternate zones highlighted)")
