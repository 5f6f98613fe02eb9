"""HTTP service over the analysis pipelines.

Five POST endpoints under /v1 mirror the CLI subcommands: analyze,
normalize, cohsolve, nhim-check, check-signsym.  Every request embeds a
schema_version-1 system document under "system"; responses are
``{"ok": true, "result": ...}`` envelopes.  Domain errors become
``{"ok": false, "error": {"type", "message", "exit_code"}}`` with the same
exit codes the CLI uses (2 schema, 3 mathematical precondition, 4
numerical), so a thin client can forward them unchanged.

The handler functions (:func:`run_analyze` etc.) are plain request -> dict
functions; the FastAPI layer only does validation and error mapping, so the
same pipelines are callable in-process.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .budget import (
    BudgetMode,
    compare_literature,
    default_choice,
    smoothness_budget,
    validate_choice,
)
from .cohsolver import (
    Grid,
    SampledField,
    residual_check,
    solve_backward,
    solve_forward,
)
from .defaults import GRID_POINTS, GRID_RADIUS, NHIM_SAMPLES, QUAD_TOL
from .errors import (
    BudgetInequalityError,
    MathPreconditionError,
    SaddleNFError,
    SchemaError,
    exit_code_for,
)
from .nhimverify import isolating_block, rate_conditions, rate_constants
from .normalform import (
    lie_normalize_hamiltonian,
    poincare_dulac,
    split_remainder,
    symplectic_defect,
    theorem_form_report,
)
from .polycore import PolyField, PolySeries, hamiltonian_vector_field
from .resonance import (
    ResonanceMode,
    divisor_vector_field,
    iter_exponents,
    resonant_set,
)
from .signsym import check_field_signsym, check_hamiltonian_signsym
from .systemspec import SystemSpec, parse_system_spec

__all__ = [
    "app",
    "AnalyzeRequest",
    "NormalizeRequest",
    "CohsolveRequest",
    "NhimCheckRequest",
    "SignsymRequest",
    "run_analyze",
    "run_normalize",
    "run_cohsolve",
    "run_nhim_check",
    "run_check_signsym",
]


# ---------------------------------------------------------------------------
# request models
# ---------------------------------------------------------------------------


class GridOptions(BaseModel):
    radius: float = GRID_RADIUS
    points: int = Field(default=GRID_POINTS, ge=2)


class SystemRequest(BaseModel):
    system: dict


class AnalyzeRequest(SystemRequest):
    k: int | None = Field(default=None, ge=1)
    res_window: tuple[int, int] | None = None


class NormalizeRequest(SystemRequest):
    degree: int | None = Field(default=None, ge=2)
    keep: list[dict] = Field(default_factory=list)


class CohsolveRequest(SystemRequest):
    mode: Literal["back", "fwd", "both"] = "both"
    grid: GridOptions = Field(default_factory=GridOptions)
    quad_tol: float = Field(default=QUAD_TOL, gt=0)
    T_star: float | None = Field(default=None, gt=0)
    eps: float = 0.0
    ell1: int | None = Field(default=None, ge=1)
    ell2: int | None = Field(default=None, ge=1)
    split_by: Literal["x", "y"] = "y"
    k: int | None = Field(default=None, ge=1)
    threads: int = Field(default=1, ge=1)


class NhimCheckRequest(SystemRequest):
    L: list[float] = Field(default_factory=lambda: [0.5])
    k: int = Field(default=1, ge=1)
    delta: float = Field(default=GRID_RADIUS, gt=0)
    samples: int = Field(default=NHIM_SAMPLES, ge=10)
    block_samples: int = Field(default=1000, ge=10)
    seed: int | None = None


class SignsymRequest(SystemRequest):
    pass


# ---------------------------------------------------------------------------
# pipeline handlers (plain functions, callable without HTTP)
# ---------------------------------------------------------------------------


def _budget_mode(spec: SystemSpec) -> BudgetMode:
    if spec.mode == "hamiltonian":
        return BudgetMode.HAMILTONIAN
    centers = [nu for nu in spec.roster.eigenvalues if abs(nu.real) <= spec.roster.eps_spec]
    return BudgetMode.PURE_SADDLE if not centers else BudgetMode.GENERAL


def _budget_section(spec: SystemSpec, gap, k: int | None) -> dict:
    k = k if k is not None else spec.budget.get("k")
    if k is None:
        return {"note": "no order k given (supply budget.k or the k option)"}
    mode = _budget_mode(spec)
    if not gap.two_sided:
        return {
            "k": k,
            "note": "one-sided spectrum: smoothness budget needs both stable "
            "and unstable eigenvalues",
        }
    budget = smoothness_budget(k, gap, mode)
    Q, P, q = (
        spec.budget.get("Q"),
        spec.budget.get("P"),
        spec.budget.get("q"),
    )
    if Q is None or P is None or q is None:
        dQ, dP, dq = default_choice(budget)
        Q = Q if Q is not None else dQ
        P = P if P is not None else dP
        q = q if q is not None else dq
    checked = validate_choice(budget, Q, P, q)
    obj = checked.to_obj()
    obj["q_requirement"] = "q >= %d (%s)" % (checked.q0, mode.value)
    if mode is BudgetMode.PURE_SADDLE:
        obj["note"] = "pure saddle: q0 = Q0 + 2"
    return obj


def _resonance_section(spec: SystemSpec, window: tuple[int, int] | None) -> dict:
    roster = spec.roster
    if spec.mode == "hamiltonian":
        k1, k2 = window if window else (3, min(spec.trunc_degree, 4))
        rs = resonant_set(roster, k1, k2, mode=ResonanceMode.HAMILTONIAN)
    else:
        k1, k2 = window if window else (2, min(max(spec.trunc_degree, 2), 3))
        rs = resonant_set(roster, k1, k2, mode=ResonanceMode.VECTOR_FIELD)
    saddle2 = []
    for alpha in iter_exponents(roster.n, 2, 2):
        for j in roster.saddle_indices:
            if abs(divisor_vector_field(roster, j, alpha)) <= rs.eps_res:
                saddle2.append({"component": roster.names[j], "exp": list(alpha)})
    out = rs.to_obj()
    out["saddle_resonances_order2"] = saddle2
    out["saddle_resonances_order2_count"] = len(saddle2)
    return out


def _signsym_status(spec: SystemSpec) -> dict:
    try:
        if spec.mode == "hamiltonian":
            rep = check_hamiltonian_signsym(spec.full_hamiltonian())
        else:
            rep = check_field_signsym(spec.full_field())
    except MathPreconditionError as exc:
        return {"status": "not applicable", "reason": str(exc)}
    obj = rep.to_obj()
    obj["status"] = "symmetric" if rep.ok else "violated"
    return obj


def run_analyze(req: AnalyzeRequest) -> dict:
    spec = parse_system_spec(req.system)
    gap = spec.gap
    return {
        "mode": spec.mode,
        "variables": list(spec.roster.names),
        "spectral_gap": gap.to_obj(),
        "resonances": _resonance_section(spec, req.res_window),
        "budget": _budget_section(spec, gap, req.k),
        "literature": compare_literature(
            req.k if req.k is not None else spec.budget.get("k", 1), gap
        )
        if gap.two_sided
        else [],
        "signsym": _signsym_status(spec),
    }


def _keep_entries(spec: SystemSpec, keep: list[dict]):
    names = {nm: i for i, nm in enumerate(spec.roster.names)}
    if spec.mode == "hamiltonian":
        out = []
        for item in keep:
            if "exp" not in item:
                raise SchemaError("keep entries need an 'exp' list")
            out.append(tuple(item["exp"]))
        return out
    out = []
    for item in keep:
        if "exp" not in item or "component" not in item:
            raise SchemaError("keep entries need 'component' and 'exp'")
        comp = item["component"]
        if isinstance(comp, str):
            if comp not in names:
                raise SchemaError("unknown component %r in keep file" % comp)
            comp = names[comp]
        out.append((int(comp), tuple(item["exp"])))
    return out


def run_normalize(req: NormalizeRequest) -> dict:
    spec = parse_system_spec(req.system)
    P = req.degree if req.degree is not None else spec.budget.get("P", spec.trunc_degree)
    keep = _keep_entries(spec, req.keep)
    if spec.mode == "hamiltonian":
        H = spec.full_hamiltonian().with_trunc(max(P, 3))
        result = lie_normalize_hamiltonian(H, keep=keep)
        Z_norm = None
        sdef = symplectic_defect(result.transform)
    else:
        Z = spec.full_field().with_trunc(max(P, 2))
        result = poincare_dulac(Z, P=max(P, 2), keep=keep)
        Z_norm = result.normalized
        sdef = None
    Q = spec.budget.get("Q")
    if Q is None:
        k = spec.budget.get("k")
        if k is not None and spec.gap.two_sided:
            Q = default_choice(smoothness_budget(k, spec.gap, _budget_mode(spec)))[0]
        else:
            Q = max(P - 2, 1)
    out = {
        "degree": P,
        "result": result.to_obj(),
        "removals": sum(_term_count(g) for g in result.generators),
    }
    if Z_norm is None:
        Z_norm = hamiltonian_vector_field(result.normalized, P)
    out["theorem_form"] = theorem_form_report(Z_norm, P, Q)
    if sdef is not None:
        out["symplectic_defect"] = sdef
    return out


def _term_count(g) -> int:
    if isinstance(g, PolyField):
        return sum(len(c.terms) for c in g.components)
    return len(g.terms)


def _field_obj(field: SampledField) -> dict:
    return field.to_obj()


def run_cohsolve(req: CohsolveRequest) -> dict:
    spec = parse_system_spec(req.system)
    if spec.R is None:
        raise SchemaError("cohsolve requires R")
    sys = spec.compactified()
    grid = Grid(radius=req.grid.radius, points_per_axis=req.grid.points)
    T = "auto" if req.T_star is None else req.T_star
    k = req.k if req.k is not None else spec.budget.get("k")
    common = dict(T_star=T, quad_tol=req.quad_tol, eps=req.eps, k=k, threads=req.threads)
    out: dict = {"mode": req.mode, "label": "sampled, non-rigorous"}

    if req.mode == "both":
        ell1, ell2 = req.ell1, req.ell2
        if ell1 is None or ell2 is None:
            if k is not None and spec.gap.two_sided:
                b = smoothness_budget(k, spec.gap, _budget_mode(spec))
                ell1 = ell1 if ell1 is not None else b.ell1
                ell2 = ell2 if ell2 is not None else b.ell2
            else:
                raise SchemaError(
                    "mode 'both' needs ell1/ell2 (directly or via budget.k)"
                )
        split = split_remainder(spec.R, ell1, ell2, by=req.split_by)
        G1 = solve_backward(sys, split.R1, grid, ell1=ell1, **common)
        G2 = solve_forward(sys, split.R2, grid, ell2=ell2, **common)
        combined = SampledField(
            roster=G1.roster,
            points=G1.points,
            values=np.asarray(G1.values) + np.asarray(G2.values),
            direction="both",
            meta={
                "composition": "G = G1 + G2 (transform T = identity on "
                "straightened input)",
                "label": "sampled, non-rigorous",
            },
        )
        out["split"] = {
            "ell1": split.ell1,
            "ell2": split.ell2,
            "by": split.by,
            "Q": split.Q,
            "notes": list(split.notes),
        }
        out["G1"] = _field_obj(G1)
        out["G2"] = _field_obj(G2)
        out["combined"] = _field_obj(combined)
        out["residual"] = {
            "G1": residual_check(sys, split.R1, G1, points=G1.points, eps=req.eps),
            "G2": residual_check(sys, split.R2, G2, points=G2.points, eps=req.eps),
        }
    elif req.mode == "back":
        G1 = solve_backward(sys, spec.R, grid, ell1=req.ell1, **common)
        out["G1"] = _field_obj(G1)
        out["residual"] = {
            "G1": residual_check(sys, spec.R, G1, points=G1.points, eps=req.eps)
        }
    else:
        G2 = solve_forward(sys, spec.R, grid, ell2=req.ell2, **common)
        out["G2"] = _field_obj(G2)
        out["residual"] = {
            "G2": residual_check(sys, spec.R, G2, points=G2.points, eps=req.eps)
        }
    return out


def run_nhim_check(req: NhimCheckRequest) -> dict:
    spec = parse_system_spec(req.system)
    sys = spec.compactified()
    seed = req.seed if req.seed is not None else spec.seed
    rates = []
    for L in req.L:
        rc = rate_constants(sys, L, delta=req.delta, samples=req.samples, seed=seed)
        rates.append(rate_conditions(rc, req.k))
    block = isolating_block(sys, req.delta, samples=req.block_samples, seed=seed)
    return {
        "label": "sampled, non-rigorous",
        "delta": req.delta,
        "samples": req.samples,
        "seed": seed,
        "rate_conditions": rates,
        "isolating_block": block,
        "ok": bool(block["ok"] and all(r["ok"] for r in rates)),
    }


def run_check_signsym(req: SignsymRequest) -> dict:
    spec = parse_system_spec(req.system)
    out = _signsym_status(spec)
    if out.get("status") == "not applicable":
        raise MathPreconditionError(out["reason"])
    return out


# ---------------------------------------------------------------------------
# FastAPI wiring
# ---------------------------------------------------------------------------

app = FastAPI(title="saddlenf", version=__version__)


def _error_body(exc: Exception, code: int) -> dict:
    body = {
        "ok": False,
        "error": {
            "type": type(exc).__name__,
            "message": str(exc),
            "exit_code": code,
        },
    }
    if isinstance(exc, BudgetInequalityError) and exc.name:
        body["error"]["inequality"] = exc.name
    return body


_HTTP_STATUS = {2: 400, 3: 422, 4: 500}


@app.exception_handler(SaddleNFError)
async def _domain_error(request: Request, exc: SaddleNFError):
    code = exit_code_for(exc)
    return JSONResponse(
        status_code=_HTTP_STATUS.get(code, 500), content=_error_body(exc, code)
    )


@app.exception_handler(RequestValidationError)
async def _request_error(request: Request, exc: RequestValidationError):
    return JSONResponse(
        status_code=400,
        content={
            "ok": False,
            "error": {
                "type": "SchemaError",
                "message": "invalid request: %s" % exc.errors(),
                "exit_code": 2,
            },
        },
    )


@app.get("/v1/health")
async def health() -> dict:
    return {"ok": True, "version": __version__}


@app.post("/v1/analyze")
async def analyze(req: AnalyzeRequest) -> dict:
    return {"ok": True, "result": run_analyze(req)}


@app.post("/v1/normalize")
async def normalize(req: NormalizeRequest) -> dict:
    return {"ok": True, "result": run_normalize(req)}


@app.post("/v1/cohsolve")
async def cohsolve(req: CohsolveRequest) -> dict:
    return {"ok": True, "result": run_cohsolve(req)}


@app.post("/v1/nhim-check")
async def nhim_check(req: NhimCheckRequest) -> dict:
    return {"ok": True, "result": run_nhim_check(req)}


@app.post("/v1/check-signsym")
async def check_signsym(req: SignsymRequest) -> dict:
    return {"ok": True, "result": run_check_signsym(req)}
