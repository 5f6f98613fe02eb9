"""Command-line client for the analysis service.

Subcommands: analyze | normalize | cohsolve | nhim-check | check-signsym,
plus `serve` to run the HTTP service.  By default requests are dispatched
to the service in-process; `--server URL` sends them to a running instance
instead.  All emitted JSON is sorted and newline-terminated, so identical
inputs and flags produce byte-identical reports.

Exit codes: 0 success, 2 schema error, 3 mathematical precondition failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .defaults import GRID_POINTS, GRID_RADIUS, NHIM_SAMPLES, QUAD_TOL
from .errors import SaddleNFError, SchemaError, exit_code_for

__all__ = ["main", "build_parser"]


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------


def _post(args, path: str, payload: dict) -> tuple[dict | None, int]:
    """POST to the service; returns (result, exit_code)."""
    if getattr(args, "server", None):
        import httpx

        resp = httpx.post(
            args.server.rstrip("/") + path, json=payload, timeout=None
        )
        body = resp.json()
    else:
        import warnings

        with warnings.catch_warnings():
            # starlette >= 1.3 prefers the httpx2 backend, which our pinned
            # environment does not ship; the httpx TestClient still works.
            warnings.simplefilter("ignore")
            from starlette.testclient import TestClient

        from .service import app

        with TestClient(app, raise_server_exceptions=False) as client:
            body = client.post(path, json=payload).json()
    if not isinstance(body, dict) or "ok" not in body:
        print("malformed service response", file=sys.stderr)
        return None, 1
    if not body["ok"]:
        err = body.get("error", {})
        print(
            "%s: %s" % (err.get("type", "error"), err.get("message", "")),
            file=sys.stderr,
        )
        return None, int(err.get("exit_code", 1))
    return body["result"], 0


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(args, result: dict, text: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(_dump(result), encoding="utf-8")
    if getattr(args, "json", False):
        sys.stdout.write(_dump(result))
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_spec_obj(path: str) -> dict:
    p = Path(path)
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError("cannot read %s: %s" % (p, exc)) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError("%s: invalid JSON (%s)" % (p, exc)) from exc


def _write_json(path: Path, obj):
    path.write_text(_dump(obj), encoding="utf-8")


def _write_csv(path: Path, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)


def _sampled_csv_rows(field_obj: dict) -> list[list]:
    names = field_obj["names"]
    vec = bool(field_obj["values"]) and len(field_obj["values"][0]) > 1
    head = names + (["G_" + nm for nm in names] if vec else ["G"])
    rows = [head]
    for p, v in zip(field_obj["points"], field_obj["values"]):
        rows.append(list(p) + list(v))
    return rows


# ---------------------------------------------------------------------------
# text report formatters
# ---------------------------------------------------------------------------


def _fmt_gap(gap: dict) -> str:
    def side(lo, hi):
        if lo is None:
            return "none"
        return "[%g, %g]" % (lo, hi)

    return "lam in %s, mu in %s" % (
        side(gap.get("lam_min"), gap.get("lam_max")),
        side(gap.get("mu_min"), gap.get("mu_max")),
    )


def _text_analyze(r: dict) -> str:
    lines = [
        "system: %s, %d variables (%s)"
        % (r["mode"], len(r["variables"]), ", ".join(r["variables"])),
        "spectral gap: " + _fmt_gap(r["spectral_gap"]),
    ]
    res = r["resonances"]
    lines.append(
        "resonances (orders %d..%d, %s): %d entries; order-2 saddle resonances: %d"
        % (
            res["window"][0],
            res["window"][1],
            res["mode"],
            len(res["entries"]),
            res["saddle_resonances_order2_count"],
        )
    )
    b = r["budget"]
    if "note" in b and "k" not in b:
        lines.append("budget: " + b["note"])
    elif "ell1" not in b:
        lines.append("budget (k=%s): %s" % (b.get("k"), b.get("note", "")))
    else:
        lines.append(
            "budget k=%d [%s]: l1=%d l2=%d, Q0=%d q0=%d -> %s"
            % (b["k"], b["mode"], b["ell1"], b["ell2"], b["Q0"], b["q0"], b["q_requirement"])
        )
        lines.append(
            "  choice Q=%s P=%s q=%s: %s"
            % (b["Q"], b["P"], b["q"], "satisfied" if b["satisfied"] else "VIOLATED")
        )
        for rec in b["ledger"]:
            if not rec["satisfied"]:
                lines.append("  failed: %s" % rec["name"])
        if b.get("note"):
            lines.append("  note: %s" % b["note"])
    if r["literature"]:
        lines.append("literature comparison:")
        for row in r["literature"]:
            lines.append(
                "  %-6s %-12s Q0=%-6s q0=%-6s %s"
                % (row["source"], row["mode"], row["Q0"], row["q0"], row.get("note", ""))
            )
    ss = r["signsym"]
    lines.append("sign symmetry: %s" % ss["status"])
    for v in ss.get("violations", [])[:5]:
        lines.append("  violating monomial: component %s exp %s" % (v["component"], v["exp"]))
    return "\n".join(lines)


def _text_normalize(r: dict, files: list[str]) -> str:
    res = r["result"]
    lines = [
        "normalized to degree %d (%s): %d monomials removed, "
        "non-resonant residual max %.3g"
        % (r["degree"], res["mode"], r["removals"], res["residual_nonresonant_max"]),
        "kept beyond linear part: %d monomials" % len(res["kept"]),
    ]
    tf = r["theorem_form"]
    lines.append(
        "form check (P=%d, Q=%d): %d normal-form, %d remainder-admissible, "
        "%d violations"
        % (
            tf["P"],
            tf["Q"],
            tf["counts"]["normal_form"],
            tf["counts"]["remainder_admissible"],
            tf["counts"]["violation"],
        )
    )
    if "symplectic_defect" in r:
        lines.append("symplectic defect: %.3g" % r["symplectic_defect"])
    for f in files:
        lines.append("wrote %s" % f)
    return "\n".join(lines)


def _text_cohsolve(r: dict, files: list[str]) -> str:
    lines = ["cohsolve mode=%s (%s)" % (r["mode"], r["label"])]
    if "split" in r:
        sp = r["split"]
        lines.append(
            "split: l1=%d l2=%d by=%s Q=%d" % (sp["ell1"], sp["ell2"], sp["by"], sp["Q"])
        )
        for note in sp["notes"]:
            lines.append("  note: %s" % note)
    for key in ("G1", "G2", "combined"):
        if key in r:
            meta = r[key]["meta"]
            extra = ""
            if "T_star" in meta:
                extra = " T*=%.3g, rate %.3g" % (meta["T_star"], meta["delta_rate"])
            lines.append("%s: %d points%s" % (key, len(r[key]["points"]), extra))
    for key, res in sorted(r.get("residual", {}).items()):
        lines.append("residual %s: max %.3g" % (key, res["max_residual"]))
    for f in files:
        lines.append("wrote %s" % f)
    return "\n".join(lines)


def _text_nhim(r: dict) -> str:
    lines = ["nhim-check (%s): %s" % (r["label"], "PASS" if r["ok"] else "FAIL")]
    for rc in r["rate_conditions"]:
        worst = min(rec["margin"] for rec in rc["records"])
        lines.append(
            "rate conditions k=%d L=%g: %s (worst margin %.3g)"
            % (rc["k"], rc["L"], "pass" if rc["ok"] else "FAIL", worst)
        )
        for rec in rc["records"]:
            if not rec["ok"]:
                lines.append("  failed: %s (margin %.3g)" % (rec["name"], rec["margin"]))
    blk = r["isolating_block"]
    lines.append(
        "isolating block delta=%g: %s (exit margin %s, entry margin %s)"
        % (
            blk["delta"],
            "pass" if blk["ok"] else "FAIL",
            blk["exit_margin"],
            blk["entry_margin"],
        )
    )
    return "\n".join(lines)


def _text_signsym(r: dict) -> str:
    lines = ["sign symmetry: %s" % r["status"]]
    for v in r.get("violations", []):
        lines.append(
            "  violating monomial: component %s exp %s (%s parity in group %s)"
            % (v["component"], v["exp"], v["parity"], v["group"])
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommand drivers
# ---------------------------------------------------------------------------


def _cmd_analyze(args) -> int:
    payload = {"system": _load_spec_obj(args.spec)}
    if args.k is not None:
        payload["k"] = args.k
    result, code = _post(args, "/v1/analyze", payload)
    if code:
        return code
    _emit(args, result, _text_analyze(result))
    return 0


def _cmd_normalize(args) -> int:
    payload = {"system": _load_spec_obj(args.spec)}
    if args.degree is not None:
        payload["degree"] = args.degree
    if args.keep_file:
        keep = _load_spec_obj(args.keep_file)
        if not isinstance(keep, list):
            raise SchemaError("%s: keep file must be a JSON list" % args.keep_file)
        payload["keep"] = keep
    result, code = _post(args, "/v1/normalize", payload)
    if code:
        return code
    stem = Path(args.spec).stem
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for key, obj in (
        ("normalized", result["result"]["normalized"]),
        ("transform", result["result"]["transform"]),
        ("theorem_form", result["theorem_form"]),
    ):
        path = outdir / ("%s.%s.json" % (stem, key))
        _write_json(path, obj)
        files.append(str(path))
    _emit(args, result, _text_normalize(result, files))
    return 0


def _cmd_cohsolve(args) -> int:
    payload = {
        "system": _load_spec_obj(args.spec),
        "mode": args.mode,
        "quad_tol": args.quad_tol,
        "threads": args.threads,
    }
    if args.grid:
        try:
            radius, points = args.grid.split(",")
            payload["grid"] = {"radius": float(radius), "points": int(points)}
        except ValueError as exc:
            raise SchemaError("--grid wants RADIUS,POINTS (got %r)" % args.grid) from exc
    if args.T_star is not None:
        payload["T_star"] = args.T_star
    if args.eps is not None:
        payload["eps"] = args.eps
    for name in ("ell1", "ell2", "k"):
        v = getattr(args, name)
        if v is not None:
            payload[name] = v
    if args.split_by:
        payload["split_by"] = args.split_by
    result, code = _post(args, "/v1/cohsolve", payload)
    if code:
        return code
    stem = Path(args.spec).stem
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for key in ("G1", "G2", "combined"):
        if key not in result:
            continue
        jpath = outdir / ("%s.%s.json" % (stem, key))
        _write_json(jpath, result[key])
        cpath = outdir / ("%s.%s.csv" % (stem, key))
        _write_csv(cpath, _sampled_csv_rows(result[key]))
        files += [str(jpath), str(cpath)]
    rpath = outdir / ("%s.residual.json" % stem)
    _write_json(rpath, result["residual"])
    files.append(str(rpath))
    _emit(args, result, _text_cohsolve(result, files))
    return 0


def _cmd_nhim_check(args) -> int:
    payload = {
        "system": _load_spec_obj(args.spec),
        "delta": args.delta,
        "samples": args.samples,
        "k": args.k,
    }
    if args.L:
        payload["L"] = args.L
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.block_samples is not None:
        payload["block_samples"] = args.block_samples
    result, code = _post(args, "/v1/nhim-check", payload)
    if code:
        return code
    files = []
    if args.out_dir:
        outdir = Path(args.out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / (Path(args.spec).stem + ".nhim.json")
        _write_json(path, result)
        files.append(str(path))
    text = _text_nhim(result)
    if files:
        text += "\n" + "\n".join("wrote %s" % f for f in files)
    _emit(args, result, text)
    return 0


def _cmd_check_signsym(args) -> int:
    payload = {"system": _load_spec_obj(args.spec)}
    result, code = _post(args, "/v1/check-signsym", payload)
    if code:
        return code
    _emit(args, result, _text_signsym(result))
    return 0 if result["status"] == "symmetric" else 3


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, with_out_dir=False):
    p.add_argument("spec", help="system document (schema_version 1 JSON)")
    p.add_argument("--server", help="URL of a running service (default: in-process)")
    p.add_argument("--json", action="store_true", help="print the full JSON report")
    p.add_argument("--out", help="also write the JSON report to this file")
    p.add_argument("--seed", type=int, default=None, help="quasi-random seed override")
    p.add_argument(
        "--threads", type=int, default=1, help="max worker threads for grid solves"
    )
    if with_out_dir:
        p.add_argument(
            "--out-dir", default=".", help="directory for emitted artifact files"
        )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="saddlenf",
        description="Polynomial normal forms and smooth-linearization "
        "diagnostics near saddle-center equilibria.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="spectral gap, resonances, budget, symmetry")
    _add_common(p)
    p.add_argument("--k", type=int, help="conjugacy smoothness order")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("normalize", help="polynomial normal form transformation")
    _add_common(p, with_out_dir=True)
    p.add_argument("--degree", type=int, help="normalization degree P")
    p.add_argument(
        "--keep-file",
        help="JSON list of monomials to retain: "
        '[{"component": name-or-index, "exp": [...]}, ...]',
    )
    p.set_defaults(fn=_cmd_normalize)

    p = sub.add_parser("cohsolve", help="cohomological equation on a sample grid")
    _add_common(p, with_out_dir=True)
    p.add_argument("--grid", help="RADIUS,POINTS per saddle axis (default %g,%d)"
                   % (GRID_RADIUS, GRID_POINTS))
    p.add_argument(
        "--mode", choices=("back", "fwd", "both"), default="both",
        help="integration direction(s)",
    )
    p.add_argument("--quad-tol", type=float, default=QUAD_TOL, dest="quad_tol")
    p.add_argument("--T-star", type=float, default=None, dest="T_star",
                   help="fixed cutoff time (default: automatic)")
    p.add_argument("--eps", type=float, default=0.0, help="deformation stage")
    p.add_argument("--ell1", type=int, help="unstable vanishing order for R1")
    p.add_argument("--ell2", type=int, help="stable vanishing order for R2")
    p.add_argument("--split-by", choices=("x", "y"), default="y", dest="split_by")
    p.add_argument("--k", type=int, help="validate the order-k budget inequality")
    p.set_defaults(fn=_cmd_cohsolve)

    p = sub.add_parser("nhim-check", help="rate conditions and isolating block")
    _add_common(p)
    p.add_argument("--out-dir", default=None, help="directory for the ledger file")
    p.add_argument("--delta", type=float, default=GRID_RADIUS, help="slab radius")
    p.add_argument("--samples", type=int, default=NHIM_SAMPLES)
    p.add_argument("--block-samples", type=int, default=1000, dest="block_samples")
    p.add_argument("--L", type=float, action="append", default=None,
                   help="cone-opening parameter in (0,1); repeatable")
    p.add_argument("--k", type=int, default=1, help="target smoothness order")
    p.set_defaults(fn=_cmd_nhim_check)

    p = sub.add_parser("check-signsym", help="sign-symmetry closure check")
    _add_common(p)
    p.set_defaults(fn=_cmd_check_signsym)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(fn=_cmd_serve)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SaddleNFError as exc:
        print("%s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
