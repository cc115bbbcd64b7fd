"""Command line front end.

Subcommands::

    degrade           build a measurement (mask / blur / noise) from an image
    restore           run the edge-driven or baseline restoration
    eval              PSNR between two images, optional CSV logging
    filters dump      filter taps and tight-frame deviations as CSV
    convergence-test  grid-vs-continuum energy sweep as CSV

Exit codes: 0 on success, 2 on argument or validation errors, 3 on runtime
failures.  Solver parameters resolve preset -> config file -> flags, where a
config file holds flat ``key = value`` lines with ``#`` comments.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from . import degrade as degrade_mod
from . import energy as energy_mod
from . import framelet
from .grid_image import add_gaussian_noise, load_image, psnr, save_image
from .solver import (
    PRESETS,
    SolverParams,
    alternate,
    init_edge_from_blurred,
)

__all__ = ["main", "parse_config", "resolve_params"]

_PARAM_FIELDS = {f.name: f.type for f in dataclasses.fields(SolverParams)}
_STR_FIELDS = {"smooth_bank", "edge_bank", "reg_bank"}
_INT_FIELDS = {"levels", "reg_levels", "inner_u", "inner_v", "outer"}


def parse_config(path) -> dict:
    """Read a flat ``key = value`` parameter file into a typed dict."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _PARAM_FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
            if key in _STR_FIELDS:
                values[key] = val
            elif key in _INT_FIELDS:
                values[key] = int(val)
            else:
                values[key] = float(val)
    return values


def resolve_params(preset: str | None, config: str | None, overrides: dict) -> SolverParams:
    """Layer preset, config file, and CLI overrides into solver parameters."""
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        params = PRESETS[preset]
    else:
        params = SolverParams()
    merged = {}
    if config is not None:
        merged.update(parse_config(config))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return dataclasses.replace(params, **merged) if merged else params


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_degrade(args) -> int:
    image = load_image(args.input)
    n = image.shape[0]
    mask = None
    if args.op == "identity":
        op = degrade_mod.Identity()
    elif args.op == "inpaint":
        if args.mask_fraction is not None:
            mask = degrade_mod.random_mask(n, args.mask_fraction, args.seed)
        elif args.mask_image is not None:
            mask = degrade_mod.mask_from_image(args.mask_image, args.mask_threshold)
        elif args.mask_rects is not None:
            mask = degrade_mod.rect_mask(n, _parse_rects(args.mask_rects))
        else:
            raise ValueError(
                "inpaint degradation needs --mask-fraction, --mask-image, or --mask-rects"
            )
        if mask.shape != image.shape:
            raise ValueError(f"mask shape {mask.shape} != image shape {image.shape}")
        op = degrade_mod.InpaintMask(mask)
    elif args.op == "blur":
        kernel = degrade_mod.matlab_gaussian_kernel(args.hsize, args.sigma_blur)
        op = degrade_mod.PeriodicBlur(kernel)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown op {args.op!r}")

    measured = op.apply(image)
    if args.noise_sigma > 0:
        measured = add_gaussian_noise(measured, args.noise_sigma, args.seed)
    if mask is not None:
        measured = mask * measured  # lost pixels are stored as zeros
    save_image(args.output, measured, depth=args.depth)
    if mask is not None:
        mask_path = args.mask_out or _derive_mask_path(args.output)
        save_image(mask_path, mask * 255.0, depth=8)
        print(f"wrote {args.output} and mask {mask_path}")
    else:
        print(f"wrote {args.output}")
    return 0


def _derive_mask_path(output):
    root, ext = os.path.splitext(output)
    return f"{root}_mask{ext or '.pgm'}"


def _parse_rects(spec):
    rects = []
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        nums = [int(x) for x in part.split(",")]
        if len(nums) != 4:
            raise ValueError(f"rectangle {part!r} is not 'row,col,height,width'")
        rects.append(tuple(nums))
    if not rects:
        raise ValueError("no rectangles given")
    return rects


def _load_saved_mask(path):
    """Masks written by ``degrade`` are white (255) on observed pixels."""
    img = load_image(path)
    return (img >= 128.0).astype(np.float64)


def _cmd_restore(args) -> int:
    overrides = {
        name: getattr(args, name)
        for name in _PARAM_FIELDS
        if hasattr(args, name)
    }
    # Explicit preset wins, otherwise the task default; config and flags
    # override individual fields on top of it.
    preset = args.preset or f"{args.task}-default"
    params = resolve_params(preset, args.config, overrides)

    f = load_image(args.input)
    if args.task == "denoise":
        op = degrade_mod.Identity()
    elif args.task == "inpaint":
        if args.mask is None:
            raise ValueError("--mask is required for the inpaint task")
        mask = _load_saved_mask(args.mask)
        if mask.shape != f.shape:
            raise ValueError(f"mask shape {mask.shape} != image shape {f.shape}")
        op = degrade_mod.InpaintMask(mask)
    else:  # deblur
        kernel = degrade_mod.matlab_gaussian_kernel(args.kernel_hsize, args.kernel_sigma)
        op = degrade_mod.PeriodicBlur(kernel)

    v0 = None
    if args.task == "deblur":
        v0 = init_edge_from_blurred(f, params.smooth_bank, params.levels,
                                    params.init_tau)
    reference = load_image(args.ref) if args.ref else None
    result = alternate(
        f, op, params, v0=v0, reference=reference,
        baseline=(args.model == "l1-baseline"),
    )
    save_image(args.output, result.u, depth=args.depth)

    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "energy", "psnr", "psnr_clamped"])
            for row in result.trace:
                writer.writerow([row.round, repr(row.energy),
                                 repr(row.psnr), repr(row.psnr_clamped)])
    if args.dump_v:
        for l, plane in enumerate(result.edge):
            save_image(f"{args.dump_v}_l{l}.pgm", plane * 255.0, depth=8)

    final = result.trace[-1]
    line = f"restored {args.input} -> {args.output} in {final.round} rounds"
    if reference is not None:
        line += f", psnr {final.psnr:.4f} dB"
    print(line)
    return 0


def _cmd_eval(args) -> int:
    ref = load_image(args.ref)
    test = load_image(args.test)
    value = psnr(ref, test)
    clamped = psnr(ref, np.clip(test, 0.0, 255.0))
    print(value)
    if args.out:
        exists = os.path.exists(args.out)
        with open(args.out, "a", newline="") as fh:
            writer = csv.writer(fh)
            if not exists:
                writer.writerow(["ref", "test", "psnr", "psnr_clamped"])
            writer.writerow([args.ref, args.test, repr(value), repr(clamped)])
    return 0


def _cmd_filters(args) -> int:
    if args.action != "dump":
        raise ValueError(f"unknown filters action {args.action!r}")
    names = ["linear", "cubic"] if args.bank == "both" else [args.bank]
    lines = [["bank", "band", "offset", "value"]]
    for name in names:
        bank = framelet.get_bank(name)
        for l in range(bank.n_filters):
            for i, value in enumerate(bank.taps(l)):
                lines.append([name, l, bank.lo + i, repr(float(value))])
    lines.append([])
    lines.append(["bank", "n_freq", "partition_deviation", "shift_deviation"])
    for name in names:
        bank = framelet.get_bank(name)
        part, shift = framelet.uep_deviation(bank, args.n_freq)
        lines.append([name, args.n_freq, repr(part), repr(shift)])

    if args.out:
        with open(args.out, "w", newline="") as fh:
            csv.writer(fh).writerows(lines)
        print(f"wrote {args.out}")
    else:
        writer = csv.writer(sys.stdout)
        writer.writerows(lines)
    return 0


def _cmd_convergence(args) -> int:
    pair = energy_mod.FIELD_PAIRS[args.test_fn]()
    pair.validate()
    bank = framelet.get_bank(args.bank)
    n_list = [int(x) for x in args.n_list.split(",") if x.strip()]
    spec = energy_mod.EnergySpec(
        resolution=min(n_list),
        lam=args.lam, gamma=args.gamma, rho=args.rho,
    )
    rows = energy_mod.convergence_experiment(
        pair, n_list, bank, spec, quad_depth=args.quad_depth,
        require_decrease=not args.no_check,
    )
    out_rows = [["n", "E_n", "E", "rel_err"]]
    out_rows += [
        [r.resolution, repr(r.grid_energy), repr(r.continuum_energy), repr(r.rel_error)]
        for r in rows
    ]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            csv.writer(fh).writerows(out_rows)
    for r in rows:
        print(f"n={r.resolution}  grid={r.grid_energy:.8f}  "
              f"continuum={r.continuum_energy:.8f}  rel_error={r.rel_error:.3e}")
    return 0


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------

# Flag spellings that differ from the dataclass field names ("lambda" is a
# Python keyword, the rest keep the command line terse).
_FLAG_ALIASES = {
    "lam": "--lambda",
    "mu_v": "--mu",
    "edge_threshold": "--edge-t",
    "init_tau": "--tau",
}


def _add_param_flags(parser):
    parser.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--config", help="flat key = value parameter file")
    for name in _PARAM_FIELDS:
        flag = _FLAG_ALIASES.get(name, "--" + name.replace("_", "-"))
        if name in _STR_FIELDS:
            parser.add_argument(flag, choices=["linear", "cubic"], dest=name)
        elif name in _INT_FIELDS:
            parser.add_argument(flag, type=int, dest=name)
        else:
            parser.add_argument(flag, type=float, dest=name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framelet-restore",
        description="Edge-driven tight framelet image restoration",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="apply a measurement operator and noise")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--op", choices=["identity", "inpaint", "blur"], default="identity")
    p.add_argument("--mask-fraction", type=float)
    p.add_argument("--mask-image")
    p.add_argument("--mask-threshold", type=float, default=128.0)
    p.add_argument("--mask-rects", help="'row,col,height,width;...' rectangles to drop")
    p.add_argument("--mask-out", help="where to write the mask (inpaint only)")
    p.add_argument("--hsize", type=int, default=15, help="blur kernel size")
    p.add_argument("--sigma-blur", type=float, default=1.5)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, choices=[8, 16], default=8)
    p.set_defaults(func=_cmd_degrade)

    p = sub.add_parser("restore", help="run the restoration solver")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--task", choices=["denoise", "inpaint", "deblur"], required=True)
    p.add_argument("--model", choices=["edge-driven", "l1-baseline"],
                   default="edge-driven")
    p.add_argument("--mask", help="observed-pixel mask image (white = observed)")
    p.add_argument("--kernel-hsize", type=int, default=15)
    p.add_argument("--kernel-sigma", type=float, default=1.5)
    p.add_argument("--ref", help="clean reference enabling PSNR trace columns")
    p.add_argument("--trace", help="write per-round energy/psnr CSV here")
    p.add_argument("--dump-v", help="prefix for edge-field plane images")
    p.add_argument("--depth", type=int, choices=[8, 16], default=8)
    _add_param_flags(p)
    p.set_defaults(func=_cmd_restore)

    p = sub.add_parser("eval", help="print PSNR between two images")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", help="append a CSV row here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("filters", help="inspect the shipped filter banks")
    p.add_argument("action", choices=["dump"])
    p.add_argument("--bank", choices=["linear", "cubic", "both"], default="both")
    p.add_argument("--n-freq", type=int, default=1024)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_filters)

    p = sub.add_parser("convergence-test",
                       help="grid-vs-continuum energy sweep")
    p.add_argument("--test-fn", choices=sorted(energy_mod.FIELD_PAIRS), default="sine")
    p.add_argument("--bank", choices=["linear", "cubic"], default="linear")
    p.add_argument("--n-list", default="4,5,6,7")
    p.add_argument("--quad-depth", type=int, default=6)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--no-check", action="store_true",
                   help="report the table even if the error does not shrink")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_convergence)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
